#pragma once

#include <stdexcept>
#include <string>

namespace hypgcn {

/// Tensor/layer shape disagreement.
struct DimMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Bad config file, prune spec, or scenario input.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mask and weight storage disagree (nonzero weight in a masked slot, etc.).
struct MaskError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cavity pattern whose tap rows are not evenly covered.
struct BalanceViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cavity pattern with a kernel phase keeping zero taps.
struct DegeneratePattern : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed encoded bank (hot/packed/mbhot disagreement).
struct CodecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mini-bank write past its configured depth.
struct OverflowError : std::runtime_error {
    OverflowError(int mini_bank, std::size_t line, const std::string& what)
        : std::runtime_error(what), mini_bank(mini_bank), line(line) {}
    int mini_bank;
    std::size_t line;
};

}  // namespace hypgcn

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace hypgcn {

/// Q8.8 fixed point: 16-bit signed raw value interpreted as raw / 256.
/// Range [-128, 128 - 1/256]. All rounding is round-to-nearest-even and
/// all overflow saturates; there is no wrapping anywhere in the pipeline.
struct FixedQ8p8 {
    std::int16_t raw = 0;

    static constexpr int kFracBits = 8;
    static constexpr int kScale = 1 << kFracBits;
    static constexpr std::int16_t kRawMax = std::numeric_limits<std::int16_t>::max();
    static constexpr std::int16_t kRawMin = std::numeric_limits<std::int16_t>::min();

    constexpr FixedQ8p8() = default;
    constexpr explicit FixedQ8p8(std::int16_t r) : raw(r) {}

    static constexpr FixedQ8p8 from_raw(std::int16_t r) { return FixedQ8p8(r); }

    double to_double() const { return static_cast<double>(raw) / kScale; }

    constexpr bool operator==(const FixedQ8p8&) const = default;
};

/// Saturate a wide value to the representable raw range.
constexpr std::int16_t saturate_raw(std::int64_t v) {
    if (v > FixedQ8p8::kRawMax) return FixedQ8p8::kRawMax;
    if (v < FixedQ8p8::kRawMin) return FixedQ8p8::kRawMin;
    return static_cast<std::int16_t>(v);
}

/// Arithmetic right shift by `bits` with round-to-nearest-even.
/// Matches a DSP accumulator write-out: one rounding, then saturation
/// is applied by the caller.
constexpr std::int64_t shift_round_even(std::int64_t v, int bits) {
    if (bits == 0) return v;
    const std::int64_t q = v >> bits;               // floor
    const std::int64_t r = v - (q << bits);         // remainder in [0, 2^bits)
    const std::int64_t half = std::int64_t{1} << (bits - 1);
    if (r > half || (r == half && (q & 1))) return q + 1;
    return q;
}

/// Nearest representable Q8.8 value, saturating at the range boundaries.
inline FixedQ8p8 quantize(double x) {
    if (std::isnan(x)) return FixedQ8p8::from_raw(0);
    const double scaled = x * FixedQ8p8::kScale;
    if (scaled >= FixedQ8p8::kRawMax) return FixedQ8p8::from_raw(FixedQ8p8::kRawMax);
    if (scaled <= FixedQ8p8::kRawMin) return FixedQ8p8::from_raw(FixedQ8p8::kRawMin);
    // llrint under the default FP environment rounds half to even.
    return FixedQ8p8::from_raw(static_cast<std::int16_t>(std::llrint(scaled)));
}

inline double dequantize(FixedQ8p8 v) { return v.to_double(); }

/// Product of two Q8.8 values, re-quantized in one step.
inline FixedQ8p8 mul(FixedQ8p8 a, FixedQ8p8 b) {
    const std::int64_t p = std::int64_t{a.raw} * b.raw;  // scale 2^16
    return FixedQ8p8::from_raw(saturate_raw(shift_round_even(p, FixedQ8p8::kFracBits)));
}

/// Saturating add on raw values.
inline FixedQ8p8 add_sat(FixedQ8p8 a, FixedQ8p8 b) {
    return FixedQ8p8::from_raw(saturate_raw(std::int64_t{a.raw} + b.raw));
}

inline FixedQ8p8 relu(FixedQ8p8 v) {
    return v.raw > 0 ? v : FixedQ8p8::from_raw(0);
}

/// Write-out of a widened accumulator holding a sum of raw*raw products
/// (scale 2^16): single round + saturate back to Q8.8.
inline FixedQ8p8 requant_acc16(std::int64_t acc) {
    return FixedQ8p8::from_raw(saturate_raw(shift_round_even(acc, FixedQ8p8::kFracBits)));
}

/// Write-out of an accumulator holding raw*raw*raw triple products
/// (scale 2^24), as produced by the graph x feature x weight path.
inline FixedQ8p8 requant_acc24(std::int64_t acc) {
    return FixedQ8p8::from_raw(saturate_raw(shift_round_even(acc, 2 * FixedQ8p8::kFracBits)));
}

}  // namespace hypgcn

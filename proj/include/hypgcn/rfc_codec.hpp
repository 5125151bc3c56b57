#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hypgcn/fixed_point.hpp"

namespace hypgcn::rfc {

inline constexpr int kBankLanes = 16;
inline constexpr int kMiniBanks = 4;
inline constexpr int kMiniBankLanes = 4;

/// One 16-lane slice of a feature vector (split across channels).
struct BankVector {
    std::array<FixedQ8p8, kBankLanes> lanes{};
    bool operator==(const BankVector&) const = default;
};

/// ReLU'd and packed bank. `hot` bit i marks a positive post-ReLU value
/// at original lane i. Valid values are gathered at the high-index end of
/// `packed` in original lane order (packed[15 - j] holds the j-th one);
/// `mbhot` is the leading-ones code with one bit per enabled 4-lane
/// mini-bank, first mini-bank at bit 3.
struct EncodedBank {
    std::array<FixedQ8p8, kBankLanes> packed{};
    std::uint16_t hot = 0;
    std::uint8_t mbhot = 0;

    int valid_count() const { return std::popcount(hot); }
    FixedQ8p8 valid_at(int j) const { return packed[kBankLanes - 1 - j]; }
    int enabled_minibanks() const {
        return (valid_count() + kMiniBankLanes - 1) / kMiniBankLanes;
    }
    bool operator==(const EncodedBank&) const = default;
};

/// Leading-ones code for n enabled mini-banks: 0 -> 0000, 1 -> 1000,
/// 2 -> 1100, 3 -> 1110, 4 -> 1111.
constexpr std::uint8_t leading_ones_mbhot(int n) {
    return static_cast<std::uint8_t>((0xF0u >> n) & 0x0Fu);
}

EncodedBank relu_encode_bank(const BankVector& raw);

/// Scatters packed values back to their original lanes; exact inverse of
/// relu_encode_bank after ReLU. Throws CodecError when hot, packed and
/// mbhot disagree.
BankVector decode_bank(const EncodedBank& enc);

/// Depth-variable mini-bank storage for one bank position: four 4-lane
/// arrays with independent depths (non-increasing head to tail), a write
/// pointer each, and side stores for the hot/mbhot codes.
struct MiniBankLayout {
    std::array<std::vector<std::array<FixedQ8p8, kMiniBankLanes>>, kMiniBanks> mini_banks;
    std::array<std::size_t, kMiniBanks> depths{};
    std::array<std::size_t, kMiniBanks> pointers{};
    std::vector<std::uint16_t> hot_store;
    std::vector<std::uint8_t> mbhot_store;

    std::size_t lines() const { return hot_store.size(); }

    /// Layer boundary: pointers and side stores reset, depths stay.
    void reset();
};

MiniBankLayout make_layout(const std::array<std::size_t, kMiniBanks>& depths);

/// Writes packed lanes into exactly the mbhot-enabled mini-banks and
/// advances only their pointers; one logical access cycle. Throws
/// OverflowError naming the mini-bank and line on depth overrun.
void store_bank(MiniBankLayout& layout, const EncodedBank& enc);

/// Random-access line fetch; disabled mini-banks read back as zero.
EncodedBank load_bank(const MiniBankLayout& layout, std::size_t line);

/// In-order reader with its own pointer per mini-bank (one cycle per
/// line, no scanning).
class BankReader {
  public:
    explicit BankReader(const MiniBankLayout& layout) : layout_(layout) {}
    bool done() const { return line_ == layout_.lines(); }
    EncodedBank next();

  private:
    const MiniBankLayout& layout_;
    std::array<std::size_t, kMiniBanks> read_ptr_{};
    std::size_t line_ = 0;
};

/// Fractions of vectors per sparsity category:
/// I [75,100]%, II [50,75)%, III [25,50)%, IV [0,25)%.
struct SparsityHistogram {
    std::array<double, 4> fraction{};
    double& operator[](int i) { return fraction[i]; }
    double operator[](int i) const { return fraction[i]; }
};

/// Mini-banks a category-c vector occupies: I -> 1, ..., IV -> 4.
constexpr int banks_for_category(int c) { return c + 1; }

/// Category for a measured sparsity; boundary values go to the denser
/// category (0.75 -> II, 0.50 -> III, 0.25 -> IV).
int category_for_sparsity(double sparsity);

void validate_histogram(const SparsityHistogram& hist);

/// Pre-granularity storage reduction: 1 - sum(frac * banks / 4).
double sizing_reduction(const SparsityHistogram& hist);

/// Depth d_j = lines needing >= j mini-banks, rounded up to the
/// allocation granularity (BRAM grain stand-in).
MiniBankLayout size_minibanks(const SparsityHistogram& hist, std::size_t vector_count,
                              std::size_t lines_per_vector, std::size_t granularity = 1);

struct LayerStorageInput {
    std::string name;
    SparsityHistogram hist;
    std::size_t vectors = 0;
    std::size_t lines_per_vector = 1;
};

struct StorageReportOptions {
    int data_bits = 16;
    int csc_index_bits = 8;
    int csc_pointer_bits = 16;
    std::size_t granularity = 512;
};

struct StorageRow {
    std::string layer;
    std::size_t lines = 0;
    std::uint64_t dense_bits = 0;
    std::uint64_t rfc_data_bits = 0;   // granularity-rounded mini-bank slots
    std::uint64_t rfc_hot_bits = 0;    // 16 hot + 4 mbhot per line
    std::uint64_t csc_bits = 0;
    double reduction_pct = 0.0;           // pre-granularity, data only
    double reduction_with_hot_pct = 0.0;  // charging the hot/mbhot codes
    double csc_reduction_pct = 0.0;
    double rfc_load_cycles = 1.0;
    double rfc_codec_cycles = 4.0;
    double csc_avg_decode_cycles = 0.0;  // serial, == nonzeros per line
};

std::vector<StorageRow> storage_report(const std::vector<LayerStorageInput>& layers,
                                       const StorageReportOptions& opts = {});

/// Interchange dump: per line u16 hot, u8 mbhot (low 4 bits), then
/// popcount-rounded-to-4 i16 packed values, little-endian throughout.
void write_encoded_stream(std::ostream& out, const std::vector<EncodedBank>& banks);
std::vector<EncodedBank> read_encoded_stream(std::istream& in);

}  // namespace hypgcn::rfc

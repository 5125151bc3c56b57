#include "hypgcn/rfc_codec.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "hypgcn/errors.hpp"

namespace hypgcn::rfc {

EncodedBank relu_encode_bank(const BankVector& raw) {
    EncodedBank enc;
    int n = 0;
    for (int lane = 0; lane < kBankLanes; ++lane) {
        if (raw.lanes[lane].raw > 0) {
            enc.hot |= static_cast<std::uint16_t>(1u << lane);
            enc.packed[kBankLanes - 1 - n] = raw.lanes[lane];
            ++n;
        }
    }
    enc.mbhot = leading_ones_mbhot((n + kMiniBankLanes - 1) / kMiniBankLanes);
    return enc;
}

BankVector decode_bank(const EncodedBank& enc) {
    const int n = enc.valid_count();
    if (enc.mbhot != leading_ones_mbhot((n + kMiniBankLanes - 1) / kMiniBankLanes))
        throw CodecError("mbhot does not match the hot-code popcount");
    for (int j = 0; j < n; ++j)
        if (enc.valid_at(j).raw <= 0)
            throw CodecError("packed slot " + std::to_string(j) +
                             " is empty but the hot code claims a value");
    for (int j = n; j < kBankLanes; ++j)
        if (enc.packed[kBankLanes - 1 - j].raw != 0)
            throw CodecError("packed values beyond the hot-code popcount");

    BankVector out;
    int j = 0;
    for (int lane = 0; lane < kBankLanes; ++lane)
        if (enc.hot & (1u << lane)) out.lanes[lane] = enc.valid_at(j++);
    return out;
}

void MiniBankLayout::reset() {
    pointers.fill(0);
    hot_store.clear();
    mbhot_store.clear();
}

MiniBankLayout make_layout(const std::array<std::size_t, kMiniBanks>& depths) {
    for (int j = 0; j + 1 < kMiniBanks; ++j)
        if (depths[j] < depths[j + 1])
            throw ConfigError("mini-bank depths must be non-increasing head to tail");
    MiniBankLayout layout;
    layout.depths = depths;
    for (int j = 0; j < kMiniBanks; ++j) layout.mini_banks[j].resize(depths[j]);
    return layout;
}

void store_bank(MiniBankLayout& layout, const EncodedBank& enc) {
    const int banks = enc.enabled_minibanks();
    const std::size_t line = layout.lines();
    for (int j = 0; j < banks; ++j)
        if (layout.pointers[j] >= layout.depths[j])
            throw OverflowError(j + 1, line,
                                "mini-bank " + std::to_string(j + 1) + " overflow at line " +
                                    std::to_string(line) + " (depth " +
                                    std::to_string(layout.depths[j]) + ")");
    for (int j = 0; j < banks; ++j) {
        std::array<FixedQ8p8, kMiniBankLanes> slot{};
        for (int k = 0; k < kMiniBankLanes; ++k) {
            const int idx = j * kMiniBankLanes + k;
            if (idx < enc.valid_count()) slot[k] = enc.valid_at(idx);
        }
        layout.mini_banks[j][layout.pointers[j]++] = slot;
    }
    layout.hot_store.push_back(enc.hot);
    layout.mbhot_store.push_back(enc.mbhot);
}

namespace {

EncodedBank assemble_line(const MiniBankLayout& layout, std::size_t line,
                          const std::array<std::size_t, kMiniBanks>& rows) {
    EncodedBank enc;
    enc.hot = layout.hot_store[line];
    enc.mbhot = layout.mbhot_store[line];
    const int banks = enc.enabled_minibanks();
    const int n = enc.valid_count();
    for (int j = 0; j < banks; ++j) {
        const auto& slot = layout.mini_banks[j][rows[j]];
        for (int k = 0; k < kMiniBankLanes; ++k) {
            const int idx = j * kMiniBankLanes + k;
            if (idx < n) enc.packed[kBankLanes - 1 - idx] = slot[k];
        }
    }
    return enc;
}

}  // namespace

EncodedBank load_bank(const MiniBankLayout& layout, std::size_t line) {
    if (line >= layout.lines()) throw CodecError("load past the last stored line");
    // a mini-bank advances only for lines that enable it
    std::array<std::size_t, kMiniBanks> rows{};
    for (std::size_t prev = 0; prev < line; ++prev) {
        const int banks = (std::popcount(layout.hot_store[prev]) + kMiniBankLanes - 1) /
                          kMiniBankLanes;
        for (int j = 0; j < banks; ++j) ++rows[j];
    }
    return assemble_line(layout, line, rows);
}

EncodedBank BankReader::next() {
    if (done()) throw CodecError("bank reader exhausted");
    EncodedBank enc = assemble_line(layout_, line_, read_ptr_);
    for (int j = 0; j < enc.enabled_minibanks(); ++j) ++read_ptr_[j];
    ++line_;
    return enc;
}

int category_for_sparsity(double sparsity) {
    if (sparsity > 0.75) return 0;
    if (sparsity > 0.50) return 1;
    if (sparsity > 0.25) return 2;
    return 3;
}

void validate_histogram(const SparsityHistogram& hist) {
    double sum = 0.0;
    for (double f : hist.fraction) {
        if (f < 0.0 || f > 1.0) throw ConfigError("histogram fraction out of [0, 1]");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("histogram fractions sum to " + std::to_string(sum) + ", expected 1");
}

double sizing_reduction(const SparsityHistogram& hist) {
    double used = 0.0;
    for (int c = 0; c < 4; ++c) used += hist[c] * banks_for_category(c);
    return 1.0 - used / kMiniBanks;
}

namespace {

std::size_t round_up(std::size_t v, std::size_t granularity) {
    if (granularity <= 1 || v == 0) return v;
    return (v + granularity - 1) / granularity * granularity;
}

}  // namespace

MiniBankLayout size_minibanks(const SparsityHistogram& hist, std::size_t vector_count,
                              std::size_t lines_per_vector, std::size_t granularity) {
    validate_histogram(hist);
    const double total = static_cast<double>(vector_count) * lines_per_vector;
    std::array<std::size_t, kMiniBanks> depths{};
    for (int j = 0; j < kMiniBanks; ++j) {
        double needing = 0.0;  // fraction of lines needing >= j+1 mini-banks
        for (int c = 0; c < 4; ++c)
            if (banks_for_category(c) >= j + 1) needing += hist[c];
        depths[j] = round_up(static_cast<std::size_t>(std::ceil(needing * total - 1e-9)),
                             granularity);
    }
    return make_layout(depths);
}

std::vector<StorageRow> storage_report(const std::vector<LayerStorageInput>& layers,
                                       const StorageReportOptions& opts) {
    // category density midpoints for nonzero estimates (sparsity I..IV)
    constexpr double kDensityMid[4] = {0.125, 0.375, 0.625, 0.875};

    std::vector<StorageRow> rows;
    for (const LayerStorageInput& layer : layers) {
        validate_histogram(layer.hist);
        StorageRow row;
        row.layer = layer.name;
        row.lines = layer.vectors * layer.lines_per_vector;
        if (row.lines == 0) {
            rows.push_back(row);
            continue;
        }

        const double lines = static_cast<double>(row.lines);
        row.dense_bits = static_cast<std::uint64_t>(lines) * kBankLanes * opts.data_bits;

        MiniBankLayout layout = size_minibanks(layer.hist, layer.vectors,
                                               layer.lines_per_vector, opts.granularity);
        std::uint64_t slots = 0;
        for (std::size_t d : layout.depths) slots += d;
        row.rfc_data_bits = slots * kMiniBankLanes * opts.data_bits;
        row.rfc_hot_bits = static_cast<std::uint64_t>(lines) * (kBankLanes + kMiniBanks);

        double nnz = 0.0;
        for (int c = 0; c < 4; ++c) nnz += layer.hist[c] * kDensityMid[c] * kBankLanes * lines;
        row.csc_bits = static_cast<std::uint64_t>(
            std::llround(nnz * (opts.data_bits + opts.csc_index_bits))) +
            static_cast<std::uint64_t>(row.lines + 1) * opts.csc_pointer_bits;

        const double reduction = sizing_reduction(layer.hist);
        row.reduction_pct = reduction * 100.0;
        const double rfc_pre_granularity =
            (1.0 - reduction) * lines * kBankLanes * opts.data_bits;
        row.reduction_with_hot_pct =
            (1.0 - (rfc_pre_granularity + static_cast<double>(row.rfc_hot_bits)) /
                       static_cast<double>(row.dense_bits)) *
            100.0;
        row.csc_reduction_pct =
            (1.0 - static_cast<double>(row.csc_bits) / static_cast<double>(row.dense_bits)) *
            100.0;
        row.csc_avg_decode_cycles = nnz / lines;  // serial scatter, one value per cycle
        rows.push_back(row);
    }
    return rows;
}

void write_encoded_stream(std::ostream& out, const std::vector<EncodedBank>& banks) {
    auto put_u16 = [&](std::uint16_t v) {
        char b[2] = {char(v & 0xff), char(v >> 8)};
        out.write(b, 2);
    };
    for (const EncodedBank& enc : banks) {
        put_u16(enc.hot);
        out.put(static_cast<char>(enc.mbhot & 0x0F));
        const int padded = enc.enabled_minibanks() * kMiniBankLanes;
        for (int j = 0; j < padded; ++j)
            put_u16(static_cast<std::uint16_t>(j < enc.valid_count() ? enc.valid_at(j).raw : 0));
    }
}

std::vector<EncodedBank> read_encoded_stream(std::istream& in) {
    auto get_u16 = [&](std::uint16_t& v) {
        unsigned char b[2];
        if (!in.read(reinterpret_cast<char*>(b), 2)) return false;
        v = static_cast<std::uint16_t>(b[0] | b[1] << 8);
        return true;
    };
    std::vector<EncodedBank> banks;
    std::uint16_t hot;
    while (get_u16(hot)) {
        EncodedBank enc;
        enc.hot = hot;
        const int c = in.get();
        if (c < 0) throw CodecError("truncated encoded stream");
        enc.mbhot = static_cast<std::uint8_t>(c & 0x0F);
        const int n = enc.valid_count();
        const int padded = (n + kMiniBankLanes - 1) / kMiniBankLanes * kMiniBankLanes;
        for (int j = 0; j < padded; ++j) {
            std::uint16_t v;
            if (!get_u16(v)) throw CodecError("truncated encoded stream");
            if (j < n) enc.packed[kBankLanes - 1 - j] = FixedQ8p8::from_raw(
                static_cast<std::int16_t>(v));
        }
        banks.push_back(enc);
    }
    return banks;
}

}  // namespace hypgcn::rfc

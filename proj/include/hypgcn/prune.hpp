#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hypgcn/model.hpp"

namespace hypgcn {

/// Per-input-channel keep bits for a spatial layer (true = kept).
struct ChannelMask {
    std::vector<std::uint8_t> bits;

    ChannelMask() = default;
    explicit ChannelMask(int n, bool kept = true) : bits(n, kept ? 1 : 0) {}

    int size() const { return static_cast<int>(bits.size()); }
    bool kept(int c) const { return bits[c] != 0; }
    int kept_count() const {
        int n = 0;
        for (auto b : bits) n += (b != 0);
        return n;
    }
    int dropped_count() const { return size() - kept_count(); }
};

/// Periodic tap-keep grid for sampling-like fine-grained pruning.
/// keep[tap * period + phase] tells whether kernel phase `phase`
/// (filter index mod period) keeps tap `tap`.
struct CavityPattern {
    std::string name;
    int period = 1;
    std::vector<std::uint8_t> keep;  // kTemporalTaps x period

    bool keep_at(int tap, int phase) const { return keep[tap * period + phase] != 0; }
    int row_kept(int tap) const {
        int n = 0;
        for (int p = 0; p < period; ++p) n += keep_at(tap, p);
        return n;
    }
    int kernel_kept(int phase) const {
        int n = 0;
        for (int t = 0; t < kTemporalTaps; ++t) n += keep_at(t, phase);
        return n;
    }
    int total_kept() const {
        int n = 0;
        for (auto b : keep) n += (b != 0);
        return n;
    }
    double reduction() const {
        return 1.0 - static_cast<double>(total_kept()) / (kTemporalTaps * period);
    }
    bool is_all_keep() const { return total_kept() == kTemporalTaps * period; }
};

/// Builds and validates a pattern from one (interval, offset) pair per
/// kernel phase: phase keeps taps {t : t = offset (mod interval), t < 9}.
/// Rejects patterns with tap-row kept-count spread > 1 (BalanceViolation)
/// or a phase keeping zero taps (DegeneratePattern).
CavityPattern make_cavity_pattern(const std::vector<std::pair<int, int>>& interval_offset,
                                  int period, std::string name = "custom");

/// Shipped patterns. cav-70-1: period 8, 21/72 taps kept (70.8% reduction),
/// every tap row kept 2 or 3 times. cav-75-1: period 8, all interval-4
/// phases, every tap row kept exactly twice (75% reduction). all-keep:
/// the no-op pattern.
CavityPattern cavity_all_keep();
CavityPattern cavity_70_1();
CavityPattern cavity_75_1();

/// Lookup by name ("cav-70-1", "cav-75-1", "all-keep"); ConfigError on
/// unknown names.
CavityPattern pattern_by_name(const std::string& name);

struct BlockPruneSpec {
    double drop_rate = 0.0;
    std::string pattern = "all-keep";
};

struct PruneSpec {
    std::vector<BlockPruneSpec> blocks;
    bool input_skip = false;
};

/// Masks recorded for one pruned block. `cavity` describes the grid that
/// has actually been applied to the weights (all-keep until
/// apply_fine_grained runs).
struct PrunedBlockMasks {
    ChannelMask spatial;           // input channels of the spatial conv
    ChannelMask temporal_filters;  // output channels of the temporal conv
    CavityPattern cavity;
};

struct PrunedModel {
    Model model;
    std::vector<PrunedBlockMasks> masks;
    PruneSpec spec;
};

struct BlockKeptCounts {
    int in_channels = 0;
    int kept_in_channels = 0;
    int filters = 0;
    int kept_filters = 0;
    std::int64_t total_params = 0;
    std::int64_t nonzero_params = 0;
};

struct PruneStats {
    double compression_ratio = 1.0;      // total / nonzero, >= 1
    double graph_skip_efficiency = 0.0;  // in [0, 1]
    std::int64_t total_params = 0;
    std::int64_t nonzero_params = 0;
    std::vector<BlockKeptCounts> blocks;
};

/// Ranks input channels by mean |weight| over (k, oc) and drops the
/// floor(rate * ic) smallest; equal means drop the lower index first.
ChannelMask select_drop_channels(const SpatialConvLayer& w, double rate);

/// Channel dropping for the reorganized dataflow: zeroes the spatial
/// weights of dropped input channels across every neighbour set and
/// filter, masks the same channels out of the block's shortcut
/// (projection weights or the identity diagonal), and records the masks.
PrunedModel apply_dataflow_reorg(const Model& model, const PruneSpec& spec);

/// Zeroes every temporal filter of block l whose output channel is
/// dropped by block l+1's spatial mask; records temporal filter masks.
/// Exactly score-preserving because block l+1 annihilates those channels
/// on both its spatial and shortcut paths.
PrunedModel propagate_coarse_temporal(PrunedModel pruned);

/// Applies one cavity pattern to the surviving temporal filters of every
/// block (filter phase = filter index mod period).
PrunedModel apply_fine_grained(PrunedModel pruned, const CavityPattern& pattern);

/// Per-block variant driven by the spec's per-block pattern names.
PrunedModel apply_fine_grained(PrunedModel pruned);

/// Mask-based parameter accounting plus the workload-weighted
/// graph-skipping efficiency. `input_frames` sets the time length used
/// for per-block graph MAC weights.
PruneStats compression_stats(const PrunedModel& pruned, int input_frames = 300);

/// Verifies weight[i] == 0 wherever a mask drops position i (spatial
/// channels, shortcut inputs, temporal filters, cavity taps) and that
/// mask popcounts match the spec's declared keep counts. Throws MaskError
/// naming the offending block.
void check_mask_consistency(const PrunedModel& pruned);

}  // namespace hypgcn

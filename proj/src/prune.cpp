#include "hypgcn/prune.hpp"

#include <algorithm>
#include <numeric>

#include "hypgcn/errors.hpp"

namespace hypgcn {

CavityPattern make_cavity_pattern(const std::vector<std::pair<int, int>>& interval_offset,
                                  int period, std::string name) {
    if (period <= 0 || static_cast<int>(interval_offset.size()) != period)
        throw ConfigError("cavity pattern: need one (interval, offset) pair per phase");

    CavityPattern pat;
    pat.name = std::move(name);
    pat.period = period;
    pat.keep.assign(static_cast<std::size_t>(kTemporalTaps) * period, 0);

    for (int phase = 0; phase < period; ++phase) {
        const auto [interval, offset] = interval_offset[phase];
        if (interval <= 0) throw ConfigError("cavity pattern: interval must be positive");
        int kept = 0;
        for (int t = 0; t < kTemporalTaps; ++t) {
            if (t % interval == offset % interval) {
                pat.keep[t * period + phase] = 1;
                ++kept;
            }
        }
        if (kept == 0)
            throw DegeneratePattern("cavity pattern '" + pat.name + "': phase " +
                                    std::to_string(phase) + " keeps zero taps");
    }

    int row_min = pat.row_kept(0), row_max = row_min;
    for (int t = 1; t < kTemporalTaps; ++t) {
        row_min = std::min(row_min, pat.row_kept(t));
        row_max = std::max(row_max, pat.row_kept(t));
    }
    if (row_max - row_min > 1)
        throw BalanceViolation("cavity pattern '" + pat.name + "': tap-row kept counts spread " +
                               std::to_string(row_max) + " vs " + std::to_string(row_min));
    return pat;
}

CavityPattern cavity_all_keep() {
    return make_cavity_pattern({{1, 0}}, 1, "all-keep");
}

CavityPattern cavity_70_1() {
    // 21 of 72 taps kept: rows {3,3,3,2,2,2,2,2,2}, kernels in {2,3}
    return make_cavity_pattern(
        {{3, 0}, {3, 1}, {3, 2}, {4, 0}, {3, 1}, {4, 2}, {4, 3}, {4, 1}}, 8, "cav-70-1");
}

CavityPattern cavity_75_1() {
    // 18 of 72 taps kept: every row exactly twice
    return make_cavity_pattern(
        {{4, 0}, {4, 1}, {4, 2}, {4, 3}, {4, 0}, {4, 1}, {4, 2}, {4, 3}}, 8, "cav-75-1");
}

CavityPattern pattern_by_name(const std::string& name) {
    if (name == "all-keep") return cavity_all_keep();
    if (name == "cav-70-1") return cavity_70_1();
    if (name == "cav-75-1") return cavity_75_1();
    throw ConfigError("unknown cavity pattern '" + name + "'");
}

ChannelMask select_drop_channels(const SpatialConvLayer& w, double rate) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("drop rate must be in [0, 1)");
    const int ic = w.in_channels;
    ChannelMask mask(ic, true);
    const int to_drop = static_cast<int>(rate * ic);
    if (to_drop == 0) return mask;

    // |raw| sums are exact, so equal means tie exactly
    std::vector<std::int64_t> magnitude(ic, 0);
    for (int k = 0; k < kNeighbourSets; ++k)
        for (int i = 0; i < ic; ++i)
            for (int o = 0; o < w.out_channels; ++o)
                magnitude[i] += std::abs(std::int64_t{w.at(k, i, o).raw});

    std::vector<int> order(ic);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (magnitude[a] != magnitude[b]) return magnitude[a] < magnitude[b];
        return a < b;  // tie: lower index dropped first
    });
    for (int j = 0; j < to_drop; ++j) mask.bits[order[j]] = 0;
    return mask;
}

namespace {

void zero_block_input_channel(Block& blk, int channel) {
    for (int k = 0; k < kNeighbourSets; ++k)
        for (int o = 0; o < blk.spatial.out_channels; ++o)
            blk.spatial.at(k, channel, o) = FixedQ8p8{};
    if (blk.cfg.shortcut == ShortcutKind::Projection) {
        for (int o = 0; o < blk.projection.out_channels; ++o)
            blk.projection.at(channel, o) = FixedQ8p8{};
    } else {
        blk.shortcut_keep[channel] = 0;
    }
}

}  // namespace

PrunedModel apply_dataflow_reorg(const Model& model, const PruneSpec& spec) {
    if (spec.blocks.size() != model.blocks.size())
        throw ConfigError("prune spec covers " + std::to_string(spec.blocks.size()) +
                          " blocks, model has " + std::to_string(model.blocks.size()));
    if (!spec.blocks.empty() && spec.blocks.front().drop_rate != 0.0)
        throw ConfigError("block 1 must not be channel-pruned (three input channels)");

    PrunedModel pruned;
    pruned.model = model;
    pruned.spec = spec;
    pruned.masks.resize(model.blocks.size());

    for (std::size_t l = 0; l < model.blocks.size(); ++l) {
        Block& blk = pruned.model.blocks[l];
        if (blk.cfg.shortcut == ShortcutKind::Identity && blk.shortcut_keep.empty())
            blk.shortcut_keep.assign(blk.cfg.in_channels, 1);

        ChannelMask mask = select_drop_channels(blk.spatial, spec.blocks[l].drop_rate);
        for (int c = 0; c < mask.size(); ++c)
            if (!mask.kept(c)) zero_block_input_channel(blk, c);

        pruned.masks[l].spatial = mask;
        pruned.masks[l].temporal_filters = ChannelMask(blk.cfg.out_channels, true);
        pruned.masks[l].cavity = cavity_all_keep();
    }
    return pruned;
}

PrunedModel propagate_coarse_temporal(PrunedModel pruned) {
    if (pruned.masks.size() != pruned.model.blocks.size())
        throw MaskError("channel masks not populated");
    for (std::size_t l = 0; l + 1 < pruned.model.blocks.size(); ++l) {
        Block& blk = pruned.model.blocks[l];
        const ChannelMask& next_mask = pruned.masks[l + 1].spatial;
        if (next_mask.size() != blk.temporal.out_channels)
            throw DimMismatch("coarse pruning: block output width does not match next block");
        for (int f = 0; f < blk.temporal.out_channels; ++f) {
            if (next_mask.kept(f)) continue;
            for (int i = 0; i < blk.temporal.in_channels; ++i)
                for (int tap = 0; tap < kTemporalTaps; ++tap)
                    blk.temporal.at(f, i, tap) = FixedQ8p8{};
            pruned.masks[l].temporal_filters.bits[f] = 0;
        }
    }
    return pruned;
}

namespace {

void fine_prune_block(Block& blk, PrunedBlockMasks& masks, const CavityPattern& pattern) {
    for (int f = 0; f < blk.temporal.out_channels; ++f) {
        if (!masks.temporal_filters.kept(f)) continue;  // already zero
        const int phase = f % pattern.period;
        for (int tap = 0; tap < kTemporalTaps; ++tap) {
            if (pattern.keep_at(tap, phase)) continue;
            for (int i = 0; i < blk.temporal.in_channels; ++i)
                blk.temporal.at(f, i, tap) = FixedQ8p8{};
        }
    }
    masks.cavity = pattern;
}

}  // namespace

PrunedModel apply_fine_grained(PrunedModel pruned, const CavityPattern& pattern) {
    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l)
        fine_prune_block(pruned.model.blocks[l], pruned.masks[l], pattern);
    return pruned;
}

PrunedModel apply_fine_grained(PrunedModel pruned) {
    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l)
        fine_prune_block(pruned.model.blocks[l], pruned.masks[l],
                         pattern_by_name(pruned.spec.blocks[l].pattern));
    return pruned;
}

PruneStats compression_stats(const PrunedModel& pruned, int input_frames) {
    PruneStats stats;
    double graph_macs_total = 0.0, graph_macs_skipped = 0.0;
    int frames = input_frames;

    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l) {
        const Block& blk = pruned.model.blocks[l];
        const PrunedBlockMasks& masks = pruned.masks[l];
        BlockKeptCounts counts;
        counts.in_channels = blk.cfg.in_channels;
        counts.kept_in_channels = masks.spatial.kept_count();
        counts.filters = blk.temporal.out_channels;
        counts.kept_filters = masks.temporal_filters.kept_count();

        const std::int64_t ic = blk.cfg.in_channels, oc = blk.cfg.out_channels;
        const std::int64_t spatial_total = kNeighbourSets * ic * oc;
        const std::int64_t spatial_nz = kNeighbourSets * counts.kept_in_channels * oc;
        const std::int64_t temporal_total =
            std::int64_t{blk.temporal.out_channels} * blk.temporal.in_channels * kTemporalTaps;
        std::int64_t temporal_nz = 0;
        for (int f = 0; f < blk.temporal.out_channels; ++f)
            if (masks.temporal_filters.kept(f))
                temporal_nz += std::int64_t{masks.cavity.kernel_kept(f % masks.cavity.period)} *
                               blk.temporal.in_channels;

        std::int64_t proj_total = 0, proj_nz = 0;
        if (blk.cfg.shortcut == ShortcutKind::Projection) {
            proj_total = ic * oc;
            proj_nz = std::int64_t{counts.kept_in_channels} * oc;
        }
        // graphs and affine params are stored dense regardless of pruning
        const std::int64_t dense_side =
            kNeighbourSets * kVertices * kVertices + 4 * oc;

        counts.total_params = spatial_total + temporal_total + proj_total + dense_side;
        counts.nonzero_params = spatial_nz + temporal_nz + proj_nz + dense_side;
        stats.blocks.push_back(counts);
        stats.total_params += counts.total_params;
        stats.nonzero_params += counts.nonzero_params;

        const double per_channel = static_cast<double>(frames) * kVertices * kVertices *
                                   kNeighbourSets;
        graph_macs_total += per_channel * ic;
        graph_macs_skipped += per_channel * masks.spatial.dropped_count();

        frames = strided_frames(frames, blk.cfg.temporal_stride);
    }

    const Classifier& cls = pruned.model.classifier;
    const std::int64_t cls_params =
        std::int64_t{cls.num_classes} * cls.in_features + (cls.has_bias ? cls.num_classes : 0);
    stats.total_params += cls_params;
    stats.nonzero_params += cls_params;

    stats.compression_ratio =
        static_cast<double>(stats.total_params) / static_cast<double>(stats.nonzero_params);
    stats.graph_skip_efficiency =
        graph_macs_total > 0.0 ? graph_macs_skipped / graph_macs_total : 0.0;
    return stats;
}

void check_mask_consistency(const PrunedModel& pruned) {
    if (pruned.masks.size() != pruned.model.blocks.size())
        throw MaskError("mask section does not cover every block");

    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l) {
        const Block& blk = pruned.model.blocks[l];
        const PrunedBlockMasks& masks = pruned.masks[l];
        const std::string where = "block " + std::to_string(l + 1);

        if (masks.spatial.size() != blk.cfg.in_channels ||
            masks.temporal_filters.size() != blk.cfg.out_channels)
            throw MaskError(where + ": mask width does not match block dims");

        if (l < pruned.spec.blocks.size()) {
            const int declared_kept =
                blk.cfg.in_channels -
                static_cast<int>(pruned.spec.blocks[l].drop_rate * blk.cfg.in_channels);
            if (masks.spatial.kept_count() != declared_kept)
                throw MaskError(where + ": spatial mask popcount " +
                                std::to_string(masks.spatial.kept_count()) +
                                " != declared kept count " + std::to_string(declared_kept));
        }

        for (int c = 0; c < blk.cfg.in_channels; ++c) {
            if (masks.spatial.kept(c)) continue;
            for (int k = 0; k < kNeighbourSets; ++k)
                for (int o = 0; o < blk.cfg.out_channels; ++o)
                    if (blk.spatial.at(k, c, o).raw != 0)
                        throw MaskError(where + ": dropped input channel " + std::to_string(c) +
                                        " holds a nonzero spatial weight");
            if (blk.cfg.shortcut == ShortcutKind::Projection) {
                for (int o = 0; o < blk.cfg.out_channels; ++o)
                    if (blk.projection.at(c, o).raw != 0)
                        throw MaskError(where + ": dropped input channel " + std::to_string(c) +
                                        " holds a nonzero projection weight");
            } else if (blk.shortcut_passes(c)) {
                throw MaskError(where + ": dropped input channel " + std::to_string(c) +
                                " still passes through the identity shortcut");
            }
        }

        for (int f = 0; f < blk.temporal.out_channels; ++f) {
            if (!masks.temporal_filters.kept(f)) {
                for (int i = 0; i < blk.temporal.in_channels; ++i)
                    for (int tap = 0; tap < kTemporalTaps; ++tap)
                        if (blk.temporal.at(f, i, tap).raw != 0)
                            throw MaskError(where + ": pruned temporal filter " +
                                            std::to_string(f) + " holds a nonzero weight");
                continue;
            }
            const int phase = f % masks.cavity.period;
            for (int tap = 0; tap < kTemporalTaps; ++tap) {
                if (masks.cavity.keep_at(tap, phase)) continue;
                for (int i = 0; i < blk.temporal.in_channels; ++i)
                    if (blk.temporal.at(f, i, tap).raw != 0)
                        throw MaskError(where + ": cavity-masked tap " + std::to_string(tap) +
                                        " of filter " + std::to_string(f) + " is nonzero");
            }
        }
    }
}

}  // namespace hypgcn

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hypgcn/errors.hpp"
#include "hypgcn/prune.hpp"
#include "hypgcn/reference.hpp"
#include "test_helpers.hpp"

using namespace hypgcn;
using namespace testutil;

namespace {

SpatialConvLayer layer_with_channel_means(const std::vector<double>& means, int oc = 2) {
    SpatialConvLayer w(static_cast<int>(means.size()), oc);
    for (int k = 0; k < kNeighbourSets; ++k)
        for (int i = 0; i < w.in_channels; ++i)
            for (int o = 0; o < oc; ++o)
                w.at(k, i, o) = quantize((o % 2 ? -1.0 : 1.0) * means[i]);
    return w;
}

/// Micro model whose per-block channel importance ranks by index, so a
/// rate of k/ic drops exactly channels 0..k-1.
Model ranked_micro_model(const ModelConfig& cfg, std::uint64_t seed) {
    Model model = make_random_model(cfg, seed);
    for (Block& blk : model.blocks)
        for (int k = 0; k < kNeighbourSets; ++k)
            for (int i = 0; i < blk.cfg.in_channels; ++i)
                for (int o = 0; o < blk.cfg.out_channels; ++o)
                    blk.spatial.at(k, i, o) =
                        quantize((o % 2 ? -0.1 : 0.1) * (i + 1));
    return model;
}

ModelConfig micro_cfg(std::vector<BlockConfig> blocks, int frames = 6) {
    ModelConfig cfg;
    cfg.frames = frames;
    cfg.num_classes = 3;
    cfg.blocks = std::move(blocks);
    return cfg;
}

}  // namespace

TEST_CASE("rate 0 keeps every channel") {
    const auto w = layer_with_channel_means({0.5, 0.1, 0.3, 0.2});
    const ChannelMask mask = select_drop_channels(w, 0.0);
    CHECK(mask.kept_count() == 4);
}

TEST_CASE("channels with the smallest mean magnitude are dropped") {
    const auto w = layer_with_channel_means({0.5, 0.1, 0.3, 0.2});
    const ChannelMask mask = select_drop_channels(w, 0.5);
    CHECK(mask.kept(0));
    CHECK_FALSE(mask.kept(1));
    CHECK(mask.kept(2));
    CHECK_FALSE(mask.kept(3));
}

TEST_CASE("equal means tie-break drops the lower index") {
    const auto w = layer_with_channel_means({0.25, 0.25});
    const ChannelMask mask = select_drop_channels(w, 0.5);
    CHECK_FALSE(mask.kept(0));
    CHECK(mask.kept(1));
}

TEST_CASE("drop rate outside [0, 1) is rejected") {
    const auto w = layer_with_channel_means({0.5, 0.1});
    CHECK_THROWS_AS(select_drop_channels(w, 1.0), ConfigError);
    CHECK_THROWS_AS(select_drop_channels(w, -0.1), ConfigError);
}

TEST_CASE("all-zero rates leave the model numerically identical") {
    const Model model = make_random_model(
        micro_cfg({{3, 4, 1, ShortcutKind::Projection}, {4, 4, 1, ShortcutKind::Identity}}), 21);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.0, "all-keep"}};
    const PrunedModel pruned = apply_dataflow_reorg(model, spec);
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        CHECK(pruned.model.blocks[b].spatial.weights == model.blocks[b].spatial.weights);
        CHECK(pruned.model.blocks[b].temporal.weights == model.blocks[b].temporal.weights);
        CHECK(pruned.masks[b].spatial.kept_count() == model.blocks[b].cfg.in_channels);
    }
    CHECK_NOTHROW(check_mask_consistency(pruned));
}

TEST_CASE("rate 0.5 on an 8-channel block zeroes exactly 4*k_v*oc weights") {
    const Model model = ranked_micro_model(
        micro_cfg({{3, 8, 1, ShortcutKind::Projection}, {8, 8, 1, ShortcutKind::Projection}}), 3);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.5, "all-keep"}};
    const PrunedModel pruned = apply_dataflow_reorg(model, spec);

    const Block& blk = pruned.model.blocks[1];
    int zero_groups = 0;
    for (int i = 0; i < 8; ++i) {
        bool all_zero = true;
        for (int k = 0; k < kNeighbourSets; ++k)
            for (int o = 0; o < 8; ++o) all_zero &= blk.spatial.at(k, i, o).raw == 0;
        zero_groups += all_zero;
    }
    CHECK(zero_groups == 4);
    int zero_weights = 0;
    for (const auto& v : blk.spatial.weights) zero_weights += (v.raw == 0);
    CHECK(zero_weights == 4 * kNeighbourSets * 8);
    // the projection loses the same input channels
    for (int i = 0; i < 4; ++i)
        for (int o = 0; o < 8; ++o) CHECK(blk.projection.at(i, o).raw == 0);
    CHECK_NOTHROW(check_mask_consistency(pruned));
}

TEST_CASE("masking is weight-zeroing: reference run equals the hand-masked dense run") {
    std::mt19937_64 rng(31);
    const Model model = ranked_micro_model(
        micro_cfg({{2, 4, 1, ShortcutKind::Projection}, {4, 4, 1, ShortcutKind::Identity}}), 9);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.5, "all-keep"}};
    const PrunedModel pruned = apply_dataflow_reorg(model, spec);

    Model hand = model;  // zero the same weights by hand
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < kNeighbourSets; ++k)
            for (int o = 0; o < 4; ++o) hand.blocks[1].spatial.at(k, i, o) = FixedQ8p8{};
        hand.blocks[1].shortcut_keep.assign(4, 1);
        hand.blocks[1].shortcut_keep[i] = 0;
    }
    hand.blocks[1].shortcut_keep = {0, 0, 1, 1};

    const FeatureTensor f = random_tensor(2, 6, rng);
    const auto a = model_forward_ref(f, pruned.model);
    const auto b = model_forward_ref(f, hand);
    CHECK(a == b);
}

TEST_CASE("spec and model block counts must agree") {
    const Model model = make_random_model(micro_cfg({{3, 4, 1, ShortcutKind::Projection}}), 1);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.5, "all-keep"}};
    CHECK_THROWS_AS(apply_dataflow_reorg(model, spec), ConfigError);
}

TEST_CASE("block 1 must not be channel-pruned") {
    const Model model = make_random_model(micro_cfg({{3, 4, 1, ShortcutKind::Projection}}), 1);
    PruneSpec spec;
    spec.blocks = {{0.25, "all-keep"}};
    CHECK_THROWS_AS(apply_dataflow_reorg(model, spec), ConfigError);
}

TEST_CASE("all-true next mask prunes no temporal filters") {
    const Model model = make_random_model(
        micro_cfg({{3, 4, 1, ShortcutKind::Projection}, {4, 4, 1, ShortcutKind::Identity}}), 33);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.0, "all-keep"}};
    const PrunedModel pruned = propagate_coarse_temporal(apply_dataflow_reorg(model, spec));
    CHECK(pruned.masks[0].temporal_filters.kept_count() == 4);
    CHECK(pruned.model.blocks[0].temporal.weights == model.blocks[0].temporal.weights);
}

TEST_CASE("dropped next-block channels zero the matching temporal filters") {
    // block 2 ranks channels by index, so rate 2/6 drops channels {0, 1};
    // re-rank so the dropped set is {2, 5}
    Model model = ranked_micro_model(
        micro_cfg({{3, 6, 1, ShortcutKind::Projection}, {6, 6, 1, ShortcutKind::Identity}}), 17);
    for (int k = 0; k < kNeighbourSets; ++k)
        for (int o = 0; o < 6; ++o) {
            Block& b2 = model.blocks[1];
            b2.spatial.at(k, 2, o) = quantize(0.01);
            b2.spatial.at(k, 5, o) = quantize(0.02);
        }
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {2.0 / 6, "all-keep"}};
    const PrunedModel pruned = propagate_coarse_temporal(apply_dataflow_reorg(model, spec));

    CHECK_FALSE(pruned.masks[1].spatial.kept(2));
    CHECK_FALSE(pruned.masks[1].spatial.kept(5));
    for (int f : {2, 5}) {
        CHECK_FALSE(pruned.masks[0].temporal_filters.kept(f));
        for (int i = 0; i < 6; ++i)
            for (int tap = 0; tap < kTemporalTaps; ++tap)
                CHECK(pruned.model.blocks[0].temporal.at(f, i, tap).raw == 0);
    }
    CHECK(pruned.masks[0].temporal_filters.kept_count() == 4);
    CHECK_NOTHROW(check_mask_consistency(pruned));
}

TEST_CASE("coarse propagation changes no final score") {
    std::mt19937_64 rng(41);
    const ModelConfig cfg = micro_cfg({{3, 6, 1, ShortcutKind::Projection},
                                       {6, 6, 1, ShortcutKind::Identity},
                                       {6, 8, 2, ShortcutKind::Projection},
                                       {8, 8, 1, ShortcutKind::Identity}},
                                      8);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Model model = make_random_model(cfg, 1000 + seed);
        PruneSpec spec;
        spec.blocks = {{0.0, "all-keep"},
                       {uniform(rng, 0.0, 0.9), "all-keep"},
                       {uniform(rng, 0.0, 0.9), "all-keep"},
                       {uniform(rng, 0.0, 0.9), "all-keep"}};
        const PrunedModel reorg_only = apply_dataflow_reorg(model, spec);
        const PrunedModel coarse = propagate_coarse_temporal(reorg_only);

        const FeatureTensor f = random_tensor(3, 8, rng);
        const auto s1 = model_forward_ref(f, reorg_only.model);
        const auto s2 = model_forward_ref(f, coarse.model);
        REQUIRE(s1 == s2);
    }
}

TEST_CASE("coarse propagation rejects mismatched adjacent blocks") {
    const Model model = make_random_model(
        micro_cfg({{3, 4, 1, ShortcutKind::Projection}, {4, 4, 1, ShortcutKind::Identity}}), 5);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.0, "all-keep"}};
    PrunedModel pruned = apply_dataflow_reorg(model, spec);
    pruned.model.blocks[0].temporal = TemporalConvLayer(4, 6, 1);  // 6 != next ic 4
    CHECK_THROWS_AS(propagate_coarse_temporal(pruned), DimMismatch);
}

TEST_CASE("cav-70-1 keeps every tap row 2 or 3 times at ~70% reduction") {
    const CavityPattern pat = cavity_70_1();
    CHECK(pat.period == 8);
    int rows3 = 0;
    for (int t = 0; t < kTemporalTaps; ++t) {
        const int kept = pat.row_kept(t);
        CHECK((kept == 2 || kept == 3));
        rows3 += (kept == 3);
    }
    CHECK(rows3 == 3);  // 3 six-queue rows, 6 four-queue rows
    CHECK(pat.total_kept() == 21);
    CHECK(pat.reduction() == doctest::Approx(51.0 / 72).epsilon(1e-12));
    for (int phase = 0; phase < 8; ++phase) {
        const int kept = pat.kernel_kept(phase);
        CHECK((kept == 2 || kept == 3));
    }
}

TEST_CASE("cav-75-1 keeps every tap row exactly twice") {
    const CavityPattern pat = cavity_75_1();
    for (int t = 0; t < kTemporalTaps; ++t) CHECK(pat.row_kept(t) == 2);
    CHECK(pat.reduction() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("interval 1 offset 0 keeps everything") {
    const CavityPattern pat = make_cavity_pattern({{1, 0}}, 1);
    CHECK(pat.is_all_keep());
    CHECK(pat.reduction() == 0.0);
}

TEST_CASE("row-unbalanced patterns are rejected") {
    // every phase keeps only even taps: even rows kept 8 times, odd rows 0
    std::vector<std::pair<int, int>> phases(8, {2, 0});
    CHECK_THROWS_AS(make_cavity_pattern(phases, 8), BalanceViolation);
}

TEST_CASE("patterns with an empty kernel are rejected") {
    CHECK_THROWS_AS(make_cavity_pattern({{12, 10}}, 1), DegeneratePattern);
}

TEST_CASE("unknown pattern names are rejected") {
    CHECK_THROWS_AS(pattern_by_name("cav-99-9"), ConfigError);
}

TEST_CASE("all-keep fine-grained pruning is a no-op") {
    const Model model = make_random_model(
        micro_cfg({{3, 8, 1, ShortcutKind::Projection}, {8, 8, 1, ShortcutKind::Identity}}), 11);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.25, "all-keep"}};
    const PrunedModel before = propagate_coarse_temporal(apply_dataflow_reorg(model, spec));
    const PrunedModel after = apply_fine_grained(before, cavity_all_keep());
    for (std::size_t b = 0; b < before.model.blocks.size(); ++b)
        CHECK(after.model.blocks[b].temporal.weights == before.model.blocks[b].temporal.weights);
}

TEST_CASE("cav-70-1 keeps 2/9 or 3/9 of each surviving filter") {
    Model model = make_random_model(
        micro_cfg({{3, 16, 1, ShortcutKind::Projection}, {16, 16, 1, ShortcutKind::Identity}}), 13);
    // make every temporal weight nonzero so kept counts are exact
    for (Block& blk : model.blocks)
        for (auto& w : blk.temporal.weights) w = quantize(0.25);
    PruneSpec spec;
    spec.blocks = {{0.0, "cav-70-1"}, {0.0, "cav-70-1"}};
    const PrunedModel pruned = apply_fine_grained(apply_dataflow_reorg(model, spec));

    const Block& blk = pruned.model.blocks[0];
    std::int64_t total_nonzero = 0;
    for (int f = 0; f < 16; ++f) {
        int kept_taps = 0;
        for (int tap = 0; tap < kTemporalTaps; ++tap) {
            bool nonzero = false;
            for (int i = 0; i < 16; ++i) nonzero |= blk.temporal.at(f, i, tap).raw != 0;
            kept_taps += nonzero;
        }
        CHECK((kept_taps == 2 || kept_taps == 3));
        total_nonzero += kept_taps;
    }
    // counting oracle: grid popcount x (filters / period)
    CHECK(total_nonzero == cavity_70_1().total_kept() * (16 / 8));
    CHECK_NOTHROW(check_mask_consistency(pruned));
}

TEST_CASE("an unpruned model reports ratio 1.0 and zero skip efficiency") {
    const Model model = make_random_model(
        micro_cfg({{3, 4, 1, ShortcutKind::Projection}, {4, 4, 1, ShortcutKind::Identity}}), 2);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.0, "all-keep"}};
    const PruneStats stats =
        compression_stats(apply_fine_grained(propagate_coarse_temporal(
                              apply_dataflow_reorg(model, spec))),
                          6);
    CHECK(stats.compression_ratio == 1.0);
    CHECK(stats.graph_skip_efficiency == 0.0);
}

TEST_CASE("single pruned block: skip efficiency equals the drop rate") {
    // hand-built masks; apply_dataflow_reorg refuses to prune block 1
    const Model model = make_random_model(micro_cfg({{8, 8, 1, ShortcutKind::Identity}}), 6);
    PrunedModel pruned;
    pruned.model = model;
    pruned.model.blocks[0].shortcut_keep.assign(8, 1);
    PrunedBlockMasks masks;
    masks.spatial = ChannelMask(8, true);
    masks.temporal_filters = ChannelMask(8, true);
    masks.cavity = cavity_all_keep();
    for (int c = 0; c < 4; ++c) {
        masks.spatial.bits[c] = 0;
        pruned.model.blocks[0].shortcut_keep[c] = 0;
        for (int k = 0; k < kNeighbourSets; ++k)
            for (int o = 0; o < 8; ++o) pruned.model.blocks[0].spatial.at(k, c, o) = FixedQ8p8{};
    }
    pruned.masks.push_back(masks);
    pruned.spec.blocks.push_back({0.5, "all-keep"});

    const PruneStats stats = compression_stats(pruned, 6);
    CHECK(stats.graph_skip_efficiency == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("uniform 50% drop matches the workload-weighted MAC oracle") {
    const ModelConfig cfg = micro_cfg({{3, 8, 1, ShortcutKind::Projection},
                                       {8, 8, 1, ShortcutKind::Identity},
                                       {8, 12, 2, ShortcutKind::Projection}},
                                      10);
    const Model model = make_random_model(cfg, 8);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.5, "all-keep"}, {0.5, "all-keep"}};
    const PruneStats stats =
        compression_stats(propagate_coarse_temporal(apply_dataflow_reorg(model, spec)), 10);

    // independent MAC counter over dims
    double total = 0.0, skipped = 0.0;
    int frames = 10;
    const std::vector<int> dropped = {0, 4, 4};
    for (std::size_t l = 0; l < cfg.blocks.size(); ++l) {
        const double per_channel = double(frames) * 25 * 25 * 3;
        total += per_channel * cfg.blocks[l].in_channels;
        skipped += per_channel * dropped[l];
        frames = (frames + cfg.blocks[l].temporal_stride - 1) / cfg.blocks[l].temporal_stride;
    }
    CHECK(stats.graph_skip_efficiency == doctest::Approx(skipped / total).epsilon(1e-12));
}

TEST_CASE("raising any drop rate never lowers the compression ratio") {
    const ModelConfig cfg = micro_cfg({{3, 8, 1, ShortcutKind::Projection},
                                       {8, 8, 1, ShortcutKind::Identity},
                                       {8, 8, 1, ShortcutKind::Identity}},
                                      6);
    const Model model = make_random_model(cfg, 77);
    std::mt19937_64 rng(88);
    for (int trial = 0; trial < 20; ++trial) {
        PruneSpec spec;
        spec.blocks = {{0.0, "cav-70-1"},
                       {uniform(rng, 0.0, 0.7), "cav-70-1"},
                       {uniform(rng, 0.0, 0.7), "cav-70-1"}};
        const auto prune_all = [&](const PruneSpec& s) {
            return compression_stats(
                apply_fine_grained(propagate_coarse_temporal(apply_dataflow_reorg(model, s))), 6);
        };
        const double base = prune_all(spec).compression_ratio;
        const std::size_t which = 1 + rng() % 2;
        PruneSpec bumped = spec;
        bumped.blocks[which].drop_rate =
            bumped.blocks[which].drop_rate + (0.99 - bumped.blocks[which].drop_rate) * 0.5;
        CHECK(prune_all(bumped).compression_ratio >= base - 1e-12);
    }
}

TEST_CASE("mask consistency detects a corrupt weight") {
    const Model model = ranked_micro_model(
        micro_cfg({{3, 8, 1, ShortcutKind::Projection}, {8, 8, 1, ShortcutKind::Identity}}), 4);
    PruneSpec spec;
    spec.blocks = {{0.0, "all-keep"}, {0.5, "all-keep"}};
    PrunedModel pruned = propagate_coarse_temporal(apply_dataflow_reorg(model, spec));
    pruned.model.blocks[1].spatial.at(0, 0, 0) = quantize(0.5);  // channel 0 is dropped
    CHECK_THROWS_WITH_AS(check_mask_consistency(pruned),
                         doctest::Contains("block 2"), MaskError);
}

#include "hypgcn/model.hpp"

#include <cmath>
#include <random>

#include "hypgcn/errors.hpp"

namespace hypgcn {
namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1p-53;
}

FixedQ8p8 random_weight(std::mt19937_64& rng, double scale) {
    return quantize((uniform01(rng) * 2.0 - 1.0) * scale);
}

}  // namespace

ModelConfig default_model_config(int frames, int num_classes) {
    ModelConfig cfg;
    cfg.frames = frames;
    cfg.num_classes = num_classes;
    cfg.blocks = {
        {3, 64, 1, ShortcutKind::Projection},
        {64, 64, 1, ShortcutKind::Identity},
        {64, 64, 1, ShortcutKind::Identity},
        {64, 64, 1, ShortcutKind::Identity},
        {64, 128, 2, ShortcutKind::Projection},
        {128, 128, 1, ShortcutKind::Identity},
        {128, 128, 1, ShortcutKind::Identity},
        {128, 256, 2, ShortcutKind::Projection},
        {256, 256, 1, ShortcutKind::Identity},
        {256, 256, 1, ShortcutKind::Identity},
    };
    return cfg;
}

void validate_config(const ModelConfig& cfg) {
    if (cfg.blocks.empty()) throw ConfigError("model has no blocks");
    if (cfg.vertices != kVertices) throw ConfigError("vertex count must be 25");
    int prev_out = cfg.blocks.front().in_channels;
    int prev_width = 0;
    for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
        const BlockConfig& b = cfg.blocks[i];
        if (b.in_channels <= 0 || b.out_channels <= 0)
            throw ConfigError("block " + std::to_string(i + 1) + ": bad channel count");
        if (b.temporal_stride != 1 && b.temporal_stride != 2)
            throw ConfigError("block " + std::to_string(i + 1) + ": stride must be 1 or 2");
        if (b.in_channels != prev_out)
            throw ConfigError("block " + std::to_string(i + 1) +
                              ": input width does not match previous block output");
        if (b.out_channels < prev_width)
            throw ConfigError("block " + std::to_string(i + 1) +
                              ": channel widths must be non-decreasing");
        const bool dims_change = b.in_channels != b.out_channels || b.temporal_stride != 1;
        if (dims_change && b.shortcut != ShortcutKind::Projection)
            throw ConfigError("block " + std::to_string(i + 1) +
                              ": shortcut must be a projection when dims change");
        prev_out = b.out_channels;
        prev_width = b.out_channels;
    }
}

Model make_random_model(const ModelConfig& cfg, std::uint64_t seed) {
    validate_config(cfg);
    Model model;
    model.cfg = cfg;
    std::mt19937_64 rng(seed);

    for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
        const BlockConfig& bc = cfg.blocks[i];
        Block blk;
        blk.cfg = bc;
        blk.graphs = skeleton_adjacency_with_residue(rng());

        blk.spatial = SpatialConvLayer(bc.in_channels, bc.out_channels);
        const double sp_scale = 1.0 / std::sqrt(double(bc.in_channels) * kNeighbourSets);
        for (auto& w : blk.spatial.weights) w = random_weight(rng, sp_scale);
        blk.spatial_affine = AffinePostOp(bc.out_channels);

        blk.temporal = TemporalConvLayer(bc.out_channels, bc.out_channels, bc.temporal_stride);
        const double tc_scale = 1.0 / std::sqrt(double(bc.out_channels) * kTemporalTaps);
        for (auto& w : blk.temporal.weights) w = random_weight(rng, tc_scale);
        blk.temporal_affine = AffinePostOp(bc.out_channels);

        if (bc.shortcut == ShortcutKind::Projection) {
            blk.projection = ProjectionShortcut(bc.in_channels, bc.out_channels);
            const double pr_scale = 1.0 / std::sqrt(double(bc.in_channels));
            for (auto& w : blk.projection.weights) w = random_weight(rng, pr_scale);
        }
        model.blocks.push_back(std::move(blk));
    }

    const int feat = cfg.blocks.back().out_channels;
    model.classifier.in_features = feat;
    model.classifier.num_classes = cfg.num_classes;
    model.classifier.has_bias = true;
    model.classifier.weights.resize(static_cast<std::size_t>(cfg.num_classes) * feat);
    model.classifier.bias.resize(cfg.num_classes);
    const double fc_scale = 1.0 / std::sqrt(double(feat));
    for (auto& w : model.classifier.weights)
        w = static_cast<float>((uniform01(rng) * 2.0 - 1.0) * fc_scale);
    for (auto& b : model.classifier.bias)
        b = static_cast<float>((uniform01(rng) * 2.0 - 1.0) * 0.1);
    return model;
}

}  // namespace hypgcn

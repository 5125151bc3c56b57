#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypgcn/graph.hpp"
#include "hypgcn/tensor.hpp"

namespace hypgcn {

/// 1x1 spatial convolution weights, indexed (k, in_channel, out_channel).
struct SpatialConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<FixedQ8p8> weights;  // k_v * ic * oc

    SpatialConvLayer() = default;
    SpatialConvLayer(int ic, int oc)
        : in_channels(ic), out_channels(oc),
          weights(static_cast<std::size_t>(kNeighbourSets) * ic * oc) {}

    std::size_t index(int k, int ic, int oc) const {
        return (static_cast<std::size_t>(k) * in_channels + ic) * out_channels + oc;
    }
    FixedQ8p8& at(int k, int ic, int oc) { return weights[index(k, ic, oc)]; }
    FixedQ8p8 at(int k, int ic, int oc) const { return weights[index(k, ic, oc)]; }
};

inline constexpr int kTemporalTaps = 9;

/// 9x1 temporal convolution along the time axis, one vertex column at a
/// time. Weights indexed (out_channel, in_channel, tap).
struct TemporalConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;  // 1 or 2
    std::vector<FixedQ8p8> weights;  // oc * ic * 9

    TemporalConvLayer() = default;
    TemporalConvLayer(int ic, int oc, int stride_)
        : in_channels(ic), out_channels(oc), stride(stride_),
          weights(static_cast<std::size_t>(oc) * ic * kTemporalTaps) {}

    std::size_t index(int oc, int ic, int tap) const {
        return (static_cast<std::size_t>(oc) * in_channels + ic) * kTemporalTaps + tap;
    }
    FixedQ8p8& at(int oc, int ic, int tap) { return weights[index(oc, ic, tap)]; }
    FixedQ8p8 at(int oc, int ic, int tap) const { return weights[index(oc, ic, tap)]; }
};

/// Batch-norm folded to an inference-time affine: y = scale[oc]*x + bias[oc].
struct AffinePostOp {
    std::vector<float> scale;
    std::vector<float> bias;

    AffinePostOp() = default;
    explicit AffinePostOp(int oc) : scale(oc, 1.0f), bias(oc, 0.0f) {}

    FixedQ8p8 apply(int oc, FixedQ8p8 x) const {
        return quantize(double{scale[oc]} * x.to_double() + double{bias[oc]});
    }
};

enum class ShortcutKind : std::uint32_t { Identity = 0, Projection = 1 };

/// 1x1 projection on the residual path, with time stride matching the
/// temporal stage. Weights indexed (in_channel, out_channel).
struct ProjectionShortcut {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<FixedQ8p8> weights;  // ic * oc

    ProjectionShortcut() = default;
    ProjectionShortcut(int ic, int oc)
        : in_channels(ic), out_channels(oc), weights(static_cast<std::size_t>(ic) * oc) {}

    std::size_t index(int ic, int oc) const {
        return static_cast<std::size_t>(ic) * out_channels + oc;
    }
    FixedQ8p8& at(int ic, int oc) { return weights[index(ic, oc)]; }
    FixedQ8p8 at(int ic, int oc) const { return weights[index(ic, oc)]; }
};

struct BlockConfig {
    int in_channels = 0;
    int out_channels = 0;
    int temporal_stride = 1;
    ShortcutKind shortcut = ShortcutKind::Identity;
};

/// One convolutional block: graphs + spatial conv + affine/ReLU +
/// temporal conv + affine + shortcut + ReLU.
///
/// `shortcut_keep` is the identity shortcut's frozen diagonal: channel c
/// contributes to the residual add only when shortcut_keep[c] != 0. Empty
/// means all channels pass. Channel dropping zeroes entries here the same
/// way it zeroes weights in the projection variant.
struct Block {
    BlockConfig cfg;
    AdjacencyStack graphs;
    SpatialConvLayer spatial;
    AffinePostOp spatial_affine;
    TemporalConvLayer temporal;
    AffinePostOp temporal_affine;
    ProjectionShortcut projection;  // used when cfg.shortcut == Projection
    std::vector<std::uint8_t> shortcut_keep;

    bool shortcut_passes(int c) const {
        return shortcut_keep.empty() || shortcut_keep[c] != 0;
    }
};

struct Classifier {
    int in_features = 0;
    int num_classes = 0;
    bool has_bias = true;
    std::vector<float> weights;  // num_classes * in_features
    std::vector<float> bias;     // num_classes
};

inline constexpr int kModelBlocks = 10;

struct ModelConfig {
    int frames = 300;
    int vertices = kVertices;
    int num_classes = 60;
    std::vector<BlockConfig> blocks;  // kModelBlocks entries
};

struct Model {
    ModelConfig cfg;
    std::vector<Block> blocks;
    Classifier classifier;
};

/// Embedding pair for the data-dependent similarity graph C_k
/// (reference-only path; the optimized pipeline never computes it).
struct SelfSimilarityParams {
    int in_channels = 0;
    int embed_dim = 0;
    std::vector<float> w_theta;  // embed_dim * in_channels
    std::vector<float> w_phi;    // embed_dim * in_channels

    SelfSimilarityParams() = default;
    SelfSimilarityParams(int ic, int e)
        : in_channels(ic), embed_dim(e),
          w_theta(static_cast<std::size_t>(e) * ic, 0.0f),
          w_phi(static_cast<std::size_t>(e) * ic, 0.0f) {}
};

/// Standard channel plan: widths {64x4, 128x3, 256x3}, temporal stride 2
/// at blocks 5 and 8, projection shortcuts where dims change.
ModelConfig default_model_config(int frames = 300, int num_classes = 60);

/// Validate block wiring (widths non-decreasing, projection where dims
/// change, 10 blocks); throws ConfigError.
void validate_config(const ModelConfig& cfg);

/// Fully-initialized model with seeded random weights: fan-in scaled conv
/// weights, skeleton graphs plus a dense learned residue, affine params
/// near identity, random classifier.
Model make_random_model(const ModelConfig& cfg, std::uint64_t seed);

/// Output frame count of a stride-s stage over t frames: ceil(t / s).
inline int strided_frames(int frames, int stride) {
    return (frames + stride - 1) / stride;
}

}  // namespace hypgcn

#pragma once

#include <array>
#include <vector>

#include "hypgcn/model.hpp"
#include "hypgcn/tensor.hpp"

namespace hypgcn {

/// Dense reference ops. These are the golden oracle for every optimized
/// path: plain loops, widened 64-bit accumulation, a single
/// round-to-nearest-even + saturate per output pixel.

/// Original multiplication order: feature x G_k first, then the 1x1
/// convolution with W_k, merged over the three neighbour sets.
FeatureTensor graph_spatial_forward_ref(const FeatureTensor& f_in,
                                        const AdjacencyStack& g,
                                        const SpatialConvLayer& w);

/// Commuted order: the 25-wide graph product is computed once per input
/// channel and scaled by W(1,1,i,oc) inside the channel sum. Same widened
/// accumulator discipline, so results are bit-identical to
/// graph_spatial_forward_ref.
FeatureTensor reordered_forward(const FeatureTensor& f_in,
                                const AdjacencyStack& g,
                                const SpatialConvLayer& w);

/// Per-vertex 1-D convolution along time: 9 taps, symmetric zero pad 4,
/// output frames == ceil(frames / stride).
FeatureTensor temporal_conv_ref(const FeatureTensor& f_in, const TemporalConvLayer& w);

/// Data-dependent similarity graph C_k = softmax(theta(f)^T phi(f)),
/// row-normalized 25x25. Reference only; the optimized path drops it.
std::array<double, kVertices * kVertices> self_similarity_ref(
    const FeatureTensor& f_in, const SelfSimilarityParams& p);

FeatureTensor apply_affine_relu(const FeatureTensor& f, const AffinePostOp& a);
FeatureTensor apply_affine(const FeatureTensor& f, const AffinePostOp& a);

/// spatial -> affine -> ReLU -> temporal -> affine -> + shortcut -> ReLU.
FeatureTensor block_forward_ref(const FeatureTensor& f_in, const Block& block);

/// Mean pool over (time, vertex) then the classifier matrix; real-valued
/// scores. Shared by the reference and sparse paths.
std::vector<double> pool_and_classify(const FeatureTensor& f, const Classifier& c);

/// All blocks in sequence, pool, classify.
std::vector<double> model_forward_ref(const FeatureTensor& f_in, const Model& model);

}  // namespace hypgcn

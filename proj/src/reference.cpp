#include "hypgcn/reference.hpp"

#include <cmath>

#include "hypgcn/errors.hpp"

namespace hypgcn {
namespace {

void check_spatial_dims(const FeatureTensor& f, const SpatialConvLayer& w) {
    require(f.channels == w.in_channels, "spatial conv: channel mismatch");
    require(f.vertices == kVertices, "spatial conv: vertex count must be 25");
}

}  // namespace

FeatureTensor graph_spatial_forward_ref(const FeatureTensor& f_in,
                                        const AdjacencyStack& g,
                                        const SpatialConvLayer& w) {
    check_spatial_dims(f_in, w);
    const int ic = w.in_channels, oc = w.out_channels;
    FeatureTensor out(oc, f_in.frames, kVertices);

    // Graph products for one feature row, widened (scale 2^16).
    std::vector<std::int64_t> y(static_cast<std::size_t>(kNeighbourSets) * ic * kVertices);
    std::vector<std::int64_t> acc(static_cast<std::size_t>(kVertices) * oc);

    for (int h = 0; h < f_in.frames; ++h) {
        // phase 1: f_in x G_k for every neighbour set and channel
        for (int k = 0; k < kNeighbourSets; ++k) {
            for (int i = 0; i < ic; ++i) {
                std::int64_t* row = &y[(static_cast<std::size_t>(k) * ic + i) * kVertices];
                for (int wv = 0; wv < kVertices; ++wv) {
                    std::int64_t dot = 0;
                    for (int p = 0; p < kVertices; ++p)
                        dot += std::int64_t{f_in.at(i, h, p).raw} * g.q(k, p, wv).raw;
                    row[wv] = dot;
                }
            }
        }
        // phase 2: 1x1 convolution over the widened products, merged over k
        std::fill(acc.begin(), acc.end(), 0);
        for (int k = 0; k < kNeighbourSets; ++k) {
            for (int i = 0; i < ic; ++i) {
                const std::int64_t* row = &y[(static_cast<std::size_t>(k) * ic + i) * kVertices];
                for (int wv = 0; wv < kVertices; ++wv) {
                    std::int64_t* dst = &acc[static_cast<std::size_t>(wv) * oc];
                    for (int o = 0; o < oc; ++o)
                        dst[o] += row[wv] * w.at(k, i, o).raw;
                }
            }
        }
        for (int wv = 0; wv < kVertices; ++wv)
            for (int o = 0; o < oc; ++o)
                out.at(o, h, wv) = requant_acc24(acc[static_cast<std::size_t>(wv) * oc + o]);
    }
    return out;
}

FeatureTensor reordered_forward(const FeatureTensor& f_in,
                                const AdjacencyStack& g,
                                const SpatialConvLayer& w) {
    check_spatial_dims(f_in, w);
    const int ic = w.in_channels, oc = w.out_channels;
    FeatureTensor out(oc, f_in.frames, kVertices);
    std::vector<std::int64_t> acc(static_cast<std::size_t>(kVertices) * oc);

    for (int h = 0; h < f_in.frames; ++h) {
        std::fill(acc.begin(), acc.end(), 0);
        for (int k = 0; k < kNeighbourSets; ++k) {
            for (int i = 0; i < ic; ++i) {
                // one graph dot per (k, i, column), reused for every output
                // channel; a pruned channel would skip this entirely
                for (int wv = 0; wv < kVertices; ++wv) {
                    std::int64_t dot = 0;
                    for (int p = 0; p < kVertices; ++p)
                        dot += std::int64_t{g.q(k, p, wv).raw} * f_in.at(i, h, p).raw;
                    std::int64_t* dst = &acc[static_cast<std::size_t>(wv) * oc];
                    for (int o = 0; o < oc; ++o)
                        dst[o] += dot * w.at(k, i, o).raw;
                }
            }
        }
        for (int wv = 0; wv < kVertices; ++wv)
            for (int o = 0; o < oc; ++o)
                out.at(o, h, wv) = requant_acc24(acc[static_cast<std::size_t>(wv) * oc + o]);
    }
    return out;
}

FeatureTensor temporal_conv_ref(const FeatureTensor& f_in, const TemporalConvLayer& w) {
    require(f_in.channels == w.in_channels, "temporal conv: channel mismatch");
    const int pad = kTemporalTaps / 2;
    const int out_frames = strided_frames(f_in.frames, w.stride);
    FeatureTensor out(w.out_channels, out_frames, f_in.vertices);

    for (int o = 0; o < w.out_channels; ++o) {
        for (int t = 0; t < out_frames; ++t) {
            const int centre = t * w.stride;
            for (int v = 0; v < f_in.vertices; ++v) {
                std::int64_t acc = 0;
                for (int i = 0; i < w.in_channels; ++i) {
                    for (int tap = 0; tap < kTemporalTaps; ++tap) {
                        const int src = centre + tap - pad;
                        if (src < 0 || src >= f_in.frames) continue;
                        acc += std::int64_t{w.at(o, i, tap).raw} * f_in.at(i, src, v).raw;
                    }
                }
                out.at(o, t, v) = requant_acc16(acc);
            }
        }
    }
    return out;
}

std::array<double, kVertices * kVertices> self_similarity_ref(
    const FeatureTensor& f_in, const SelfSimilarityParams& p) {
    require(f_in.channels == p.in_channels, "self-similarity: channel mismatch");
    require(f_in.vertices == kVertices, "self-similarity: vertex count must be 25");

    const int e_dim = p.embed_dim, ic = p.in_channels;
    const std::size_t plane = static_cast<std::size_t>(f_in.frames) * kVertices;
    std::vector<double> theta(static_cast<std::size_t>(e_dim) * plane, 0.0);
    std::vector<double> phi(theta.size(), 0.0);

    for (int e = 0; e < e_dim; ++e) {
        for (int c = 0; c < ic; ++c) {
            const double wt = p.w_theta[static_cast<std::size_t>(e) * ic + c];
            const double wp = p.w_phi[static_cast<std::size_t>(e) * ic + c];
            for (int t = 0; t < f_in.frames; ++t) {
                for (int v = 0; v < kVertices; ++v) {
                    const double x = f_in.at(c, t, v).to_double();
                    theta[e * plane + t * kVertices + v] += wt * x;
                    phi[e * plane + t * kVertices + v] += wp * x;
                }
            }
        }
    }

    std::array<double, kVertices * kVertices> sim{};
    for (int u = 0; u < kVertices; ++u)
        for (int v = 0; v < kVertices; ++v) {
            double s = 0.0;
            for (int e = 0; e < e_dim; ++e)
                for (int t = 0; t < f_in.frames; ++t)
                    s += theta[e * plane + t * kVertices + u] *
                         phi[e * plane + t * kVertices + v];
            sim[u * kVertices + v] = s;
        }

    // row softmax
    for (int u = 0; u < kVertices; ++u) {
        double mx = sim[u * kVertices];
        for (int v = 1; v < kVertices; ++v) mx = std::max(mx, sim[u * kVertices + v]);
        double sum = 0.0;
        for (int v = 0; v < kVertices; ++v) {
            sim[u * kVertices + v] = std::exp(sim[u * kVertices + v] - mx);
            sum += sim[u * kVertices + v];
        }
        for (int v = 0; v < kVertices; ++v) sim[u * kVertices + v] /= sum;
    }
    return sim;
}

FeatureTensor apply_affine(const FeatureTensor& f, const AffinePostOp& a) {
    FeatureTensor out(f.channels, f.frames, f.vertices);
    for (int c = 0; c < f.channels; ++c)
        for (int t = 0; t < f.frames; ++t)
            for (int v = 0; v < f.vertices; ++v)
                out.at(c, t, v) = a.apply(c, f.at(c, t, v));
    return out;
}

FeatureTensor apply_affine_relu(const FeatureTensor& f, const AffinePostOp& a) {
    FeatureTensor out(f.channels, f.frames, f.vertices);
    for (int c = 0; c < f.channels; ++c)
        for (int t = 0; t < f.frames; ++t)
            for (int v = 0; v < f.vertices; ++v)
                out.at(c, t, v) = relu(a.apply(c, f.at(c, t, v)));
    return out;
}

FeatureTensor block_forward_ref(const FeatureTensor& f_in, const Block& block) {
    require(f_in.channels == block.cfg.in_channels, "block: channel mismatch");

    FeatureTensor spatial = graph_spatial_forward_ref(f_in, block.graphs, block.spatial);
    FeatureTensor act = apply_affine_relu(spatial, block.spatial_affine);
    FeatureTensor temporal = temporal_conv_ref(act, block.temporal);
    FeatureTensor post = apply_affine(temporal, block.temporal_affine);

    const int stride = block.cfg.temporal_stride;
    FeatureTensor out(post.channels, post.frames, post.vertices);
    if (block.cfg.shortcut == ShortcutKind::Identity) {
        for (int c = 0; c < post.channels; ++c) {
            const bool pass = block.shortcut_passes(c);
            for (int t = 0; t < post.frames; ++t)
                for (int v = 0; v < post.vertices; ++v) {
                    FixedQ8p8 sc = pass ? f_in.at(c, t * stride, v) : FixedQ8p8{};
                    out.at(c, t, v) = relu(add_sat(post.at(c, t, v), sc));
                }
        }
    } else {
        const ProjectionShortcut& pr = block.projection;
        require(pr.in_channels == f_in.channels, "projection: channel mismatch");
        for (int t = 0; t < post.frames; ++t) {
            const int src = t * stride;
            for (int v = 0; v < post.vertices; ++v) {
                for (int o = 0; o < post.channels; ++o) {
                    std::int64_t acc = 0;
                    for (int i = 0; i < pr.in_channels; ++i)
                        acc += std::int64_t{pr.at(i, o).raw} * f_in.at(i, src, v).raw;
                    out.at(o, t, v) = relu(add_sat(post.at(o, t, v), requant_acc16(acc)));
                }
            }
        }
    }
    return out;
}

std::vector<double> pool_and_classify(const FeatureTensor& f, const Classifier& c) {
    require(f.channels == c.in_features, "classifier: feature mismatch");
    std::vector<double> pooled(f.channels, 0.0);
    const double norm = 1.0 / (static_cast<double>(f.frames) * f.vertices * FixedQ8p8::kScale);
    for (int ch = 0; ch < f.channels; ++ch) {
        std::int64_t sum = 0;
        for (int t = 0; t < f.frames; ++t)
            for (int v = 0; v < f.vertices; ++v) sum += f.at(ch, t, v).raw;
        pooled[ch] = static_cast<double>(sum) * norm;
    }
    std::vector<double> scores(c.num_classes, 0.0);
    for (int k = 0; k < c.num_classes; ++k) {
        double s = c.has_bias ? double{c.bias[k]} : 0.0;
        for (int ch = 0; ch < c.in_features; ++ch)
            s += double{c.weights[static_cast<std::size_t>(k) * c.in_features + ch]} * pooled[ch];
        scores[k] = s;
    }
    return scores;
}

std::vector<double> model_forward_ref(const FeatureTensor& f_in, const Model& model) {
    FeatureTensor f = f_in;
    for (const Block& blk : model.blocks) f = block_forward_ref(f, blk);
    return pool_and_classify(f, model.classifier);
}

}  // namespace hypgcn

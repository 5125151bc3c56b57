#include "hypgcn/sparse_exec.hpp"

#include <algorithm>

#include "hypgcn/errors.hpp"

namespace hypgcn {

FeatureTensor input_skip(const FeatureTensor& f) {
    const int out_frames = strided_frames(f.frames, 2);
    FeatureTensor out(f.channels, out_frames, f.vertices);
    for (int c = 0; c < f.channels; ++c)
        for (int t = 0; t < out_frames; ++t)
            for (int v = 0; v < f.vertices; ++v) out.at(c, t, v) = f.at(c, 2 * t, v);
    return out;
}

namespace {

FeatureTensor sparse_spatial(const FeatureTensor& f_in, const Block& block,
                             const ChannelMask& mask, WorkCounters& counters) {
    const SpatialConvLayer& w = block.spatial;
    require(f_in.channels == w.in_channels, "sparse spatial: channel mismatch");
    require(f_in.vertices == kVertices, "sparse spatial: vertex count must be 25");

    const int ic = w.in_channels, oc = w.out_channels;
    std::vector<int> kept;
    kept.reserve(ic);
    for (int i = 0; i < ic; ++i)
        if (mask.kept(i)) kept.push_back(i);

    FeatureTensor out(oc, f_in.frames, kVertices);
    std::vector<std::int64_t> acc(static_cast<std::size_t>(kVertices) * oc);

    for (int h = 0; h < f_in.frames; ++h) {
        std::fill(acc.begin(), acc.end(), 0);
        for (int k = 0; k < kNeighbourSets; ++k) {
            for (int i : kept) {
                for (int wv = 0; wv < kVertices; ++wv) {
                    std::int64_t dot = 0;
                    for (int p = 0; p < kVertices; ++p)
                        dot += std::int64_t{block.graphs.q(k, p, wv).raw} * f_in.at(i, h, p).raw;
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

    const std::uint64_t rows = static_cast<std::uint64_t>(f_in.frames);
    const std::uint64_t graph_per_channel = rows * kVertices * kVertices * kNeighbourSets;
    const std::uint64_t conv_per_channel =
        rows * kVertices * kNeighbourSets * static_cast<std::uint64_t>(oc);
    const std::uint64_t kept_n = kept.size();
    const std::uint64_t dropped_n = static_cast<std::uint64_t>(ic) - kept_n;
    counters.graph_macs_performed += graph_per_channel * kept_n;
    counters.graph_macs_skipped += graph_per_channel * dropped_n;
    counters.spatial_macs_performed += conv_per_channel * kept_n;
    counters.spatial_macs_skipped += conv_per_channel * dropped_n;
    return out;
}

FeatureTensor sparse_temporal(const FeatureTensor& f_in, const Block& block,
                              const PrunedBlockMasks& masks, WorkCounters& counters) {
    const TemporalConvLayer& w = block.temporal;
    require(f_in.channels == w.in_channels, "sparse temporal: channel mismatch");

    const int pad = kTemporalTaps / 2;
    const int out_frames = strided_frames(f_in.frames, w.stride);
    FeatureTensor out(w.out_channels, out_frames, f_in.vertices);
    const CavityPattern& cavity = masks.cavity;

    std::uint64_t performed = 0;
    for (int o = 0; o < w.out_channels; ++o) {
        if (!masks.temporal_filters.kept(o)) continue;  // output stays zero
        const int phase = o % cavity.period;
        for (int t = 0; t < out_frames; ++t) {
            const int centre = t * w.stride;
            for (int v = 0; v < f_in.vertices; ++v) {
                std::int64_t acc = 0;
                for (int tap = 0; tap < kTemporalTaps; ++tap) {
                    if (!cavity.keep_at(tap, phase)) continue;
                    const int src = centre + tap - pad;
                    if (src < 0 || src >= f_in.frames) continue;
                    for (int i = 0; i < w.in_channels; ++i) {
                        const FixedQ8p8 f = f_in.at(i, src, v);
                        if (f.raw == 0) continue;  // exact post-ReLU zero
                        acc += std::int64_t{w.at(o, i, tap).raw} * f.raw;
                        ++performed;
                    }
                }
                out.at(o, t, v) = requant_acc16(acc);
            }
        }
    }

    const std::uint64_t dense = static_cast<std::uint64_t>(out_frames) * f_in.vertices *
                                w.out_channels * w.in_channels * kTemporalTaps;
    counters.temporal_macs_performed += performed;
    counters.temporal_macs_skipped += dense - performed;
    return out;
}

FeatureTensor add_shortcut_relu(const FeatureTensor& post, const FeatureTensor& f_in,
                                const Block& block, const ChannelMask& mask) {
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
        return out;
    }
    const ProjectionShortcut& pr = block.projection;
    std::vector<int> kept;
    for (int i = 0; i < pr.in_channels; ++i)
        if (mask.kept(i)) kept.push_back(i);
    for (int t = 0; t < post.frames; ++t) {
        const int src = t * stride;
        for (int v = 0; v < post.vertices; ++v)
            for (int o = 0; o < post.channels; ++o) {
                std::int64_t acc = 0;
                for (int i : kept) acc += std::int64_t{pr.at(i, o).raw} * f_in.at(i, src, v).raw;
                out.at(o, t, v) = relu(add_sat(post.at(o, t, v), requant_acc16(acc)));
            }
    }
    return out;
}

}  // namespace

FeatureTensor sparse_block_forward(const FeatureTensor& f_in, const Block& block,
                                   const PrunedBlockMasks& masks, WorkCounters& counters) {
    if (masks.spatial.size() != block.cfg.in_channels ||
        masks.temporal_filters.size() != block.cfg.out_channels)
        throw MaskError("sparse block: mask width does not match block dims");

    FeatureTensor spatial = sparse_spatial(f_in, block, masks.spatial, counters);
    FeatureTensor act = apply_affine_relu(spatial, block.spatial_affine);
    FeatureTensor temporal = sparse_temporal(act, block, masks, counters);
    FeatureTensor post = apply_affine(temporal, block.temporal_affine);
    return add_shortcut_relu(post, f_in, block, masks.spatial);
}

InferenceResult run_inference(const FeatureTensor& f_in, const PrunedModel& pruned) {
    InferenceResult result;
    FeatureTensor f = pruned.spec.input_skip ? input_skip(f_in) : f_in;
    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l)
        f = sparse_block_forward(f, pruned.model.blocks[l], pruned.masks[l], result.counters);
    result.scores = pool_and_classify(f, pruned.model.classifier);
    return result;
}

WorkCounters dense_equivalent_totals(const Model& model, int input_frames) {
    WorkCounters totals;
    int frames = input_frames;
    for (const Block& blk : model.blocks) {
        const std::uint64_t rows = static_cast<std::uint64_t>(frames);
        const std::uint64_t ic = blk.cfg.in_channels, oc = blk.cfg.out_channels;
        totals.graph_macs_performed += rows * kVertices * kVertices * kNeighbourSets * ic;
        totals.spatial_macs_performed += rows * kVertices * kNeighbourSets * ic * oc;
        const std::uint64_t out_frames = strided_frames(frames, blk.cfg.temporal_stride);
        totals.temporal_macs_performed +=
            out_frames * kVertices * oc * oc * kTemporalTaps;
        frames = static_cast<int>(out_frames);
    }
    return totals;
}

}  // namespace hypgcn

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hypgcn/errors.hpp"
#include "hypgcn/reference.hpp"
#include "test_helpers.hpp"

using namespace hypgcn;
using namespace testutil;

TEST_CASE("identity graphs with a one-hot weight pass a channel through") {
    std::mt19937_64 rng(7);
    FeatureTensor f = random_tensor(3, 4, rng);
    AdjacencyStack g = identity_graphs();
    SpatialConvLayer w(3, 2);  // all zero
    w.at(0, 0, 0) = quantize(1.0);

    const FeatureTensor out = graph_spatial_forward_ref(f, g, w);
    for (int t = 0; t < f.frames; ++t)
        for (int v = 0; v < kVertices; ++v) {
            CHECK(out.at(0, t, v).raw == f.at(0, t, v).raw);
            CHECK(out.at(1, t, v).raw == 0);
        }
}

TEST_CASE("single-channel spatial output matches a hand matrix-vector product") {
    std::mt19937_64 rng(11);
    FeatureTensor f = random_tensor(1, 1, rng);
    AdjacencyStack g = random_graphs(rng);
    SpatialConvLayer w = random_spatial(1, 1, rng);

    const FeatureTensor out = graph_spatial_forward_ref(f, g, w);
    for (int wv = 0; wv < kVertices; ++wv) {
        std::int64_t acc = 0;
        for (int k = 0; k < kNeighbourSets; ++k) {
            std::int64_t dot = 0;
            for (int p = 0; p < kVertices; ++p)
                dot += std::int64_t{f.at(0, 0, p).raw} * g.q(k, p, wv).raw;
            acc += dot * w.at(k, 0, 0).raw;
        }
        CHECK(out.at(0, 0, wv).raw == requant_acc24(acc).raw);
    }
}

TEST_CASE("zero input yields zero spatial output") {
    std::mt19937_64 rng(13);
    FeatureTensor f(4, 3);
    AdjacencyStack g = random_graphs(rng);
    SpatialConvLayer w = random_spatial(4, 5, rng);
    const FeatureTensor out = graph_spatial_forward_ref(f, g, w);
    for (const auto& v : out.data) CHECK(v.raw == 0);
}

TEST_CASE("spatial reference matches the naive triple-loop oracle") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const int ic = 1 + static_cast<int>(rng() % 4);
        const int oc = 1 + static_cast<int>(rng() % 4);
        const int frames = 1 + static_cast<int>(rng() % 3);
        FeatureTensor f = random_tensor(ic, frames, rng);
        AdjacencyStack g = random_graphs(rng);
        SpatialConvLayer w = random_spatial(ic, oc, rng);
        CHECK(graph_spatial_forward_ref(f, g, w) == naive_graph_spatial(f, g, w));
    }
}

TEST_CASE("reordered_forward is bitwise equal to the reference") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 300; ++trial) {
        const int ic = 1 + static_cast<int>(rng() % 8);
        const int oc = 1 + static_cast<int>(rng() % 8);
        const int frames = 1 + static_cast<int>(rng() % 4);
        FeatureTensor f = random_tensor(ic, frames, rng, 4.0);
        AdjacencyStack g = random_graphs(rng, 1.0);
        SpatialConvLayer w = random_spatial(ic, oc, rng, 1.0);
        REQUIRE(reordered_forward(f, g, w) == graph_spatial_forward_ref(f, g, w));
    }
}

TEST_CASE("a zero-weight input channel behaves as if removed") {
    std::mt19937_64 rng(23);
    const int ic = 4, oc = 3, frames = 2, dead = 1;
    FeatureTensor f = random_tensor(ic, frames, rng);
    AdjacencyStack g = random_graphs(rng);
    SpatialConvLayer w = random_spatial(ic, oc, rng);
    for (int k = 0; k < kNeighbourSets; ++k)
        for (int o = 0; o < oc; ++o) w.at(k, dead, o) = FixedQ8p8{};

    // same instance with channel `dead` deleted
    FeatureTensor f2(ic - 1, frames);
    SpatialConvLayer w2(ic - 1, oc);
    int dst = 0;
    for (int i = 0; i < ic; ++i) {
        if (i == dead) continue;
        for (int t = 0; t < frames; ++t)
            for (int v = 0; v < kVertices; ++v) f2.at(dst, t, v) = f.at(i, t, v);
        for (int k = 0; k < kNeighbourSets; ++k)
            for (int o = 0; o < oc; ++o) w2.at(k, dst, o) = w.at(k, i, o);
        ++dst;
    }
    CHECK(reordered_forward(f, g, w) == reordered_forward(f2, g, w2));
}

TEST_CASE("spatial ops reject dimension mismatches") {
    std::mt19937_64 rng(29);
    FeatureTensor f = random_tensor(3, 2, rng);
    AdjacencyStack g = random_graphs(rng);
    SpatialConvLayer w = random_spatial(4, 2, rng);
    CHECK_THROWS_AS(graph_spatial_forward_ref(f, g, w), DimMismatch);
    CHECK_THROWS_AS(reordered_forward(f, g, w), DimMismatch);
}

TEST_CASE("unit impulse temporal kernel is the identity") {
    std::mt19937_64 rng(31);
    FeatureTensor f = random_tensor(3, 7, rng);
    TemporalConvLayer w(3, 3, 1);
    for (int c = 0; c < 3; ++c) w.at(c, c, 4) = quantize(1.0);
    CHECK(temporal_conv_ref(f, w) == f);
}

TEST_CASE("all-ones kernel on a constant input sums nine taps") {
    FeatureTensor f(1, 20);
    for (auto& v : f.data) v = quantize(1.0);
    TemporalConvLayer w(1, 1, 1);
    for (int tap = 0; tap < kTemporalTaps; ++tap) w.at(0, 0, tap) = quantize(1.0);
    const FeatureTensor out = temporal_conv_ref(f, w);
    CHECK(out.at(0, 10, 0).raw == quantize(9.0).raw);  // interior frame
    CHECK(out.at(0, 0, 0).raw == quantize(5.0).raw);   // 4 taps padded away
}

TEST_CASE("temporal reference matches the naive 4-loop oracle") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 40; ++trial) {
        const int ic = 1 + static_cast<int>(rng() % 3);
        const int oc = 1 + static_cast<int>(rng() % 3);
        const int frames = 1 + static_cast<int>(rng() % 12);
        const int stride = 1 + static_cast<int>(rng() % 2);
        FeatureTensor f = random_tensor(ic, frames, rng);
        TemporalConvLayer w = random_temporal(ic, oc, stride, rng);
        CHECK(temporal_conv_ref(f, w) == naive_temporal(f, w));
    }
}

TEST_CASE("temporal shape law: out frames == ceil(frames / stride)") {
    std::mt19937_64 rng(41);
    for (int frames = 1; frames <= 13; ++frames)
        for (int stride = 1; stride <= 2; ++stride) {
            FeatureTensor f = random_tensor(2, frames, rng);
            TemporalConvLayer w = random_temporal(2, 2, stride, rng);
            CHECK(temporal_conv_ref(f, w).frames == (frames + stride - 1) / stride);
        }
}

TEST_CASE("self-similarity of a zero input is uniform 1/25") {
    FeatureTensor f(2, 3);
    SelfSimilarityParams p(2, 2);
    p.w_theta = {0.5f, -0.25f, 0.1f, 0.3f};
    p.w_phi = {0.2f, 0.4f, -0.3f, 0.6f};
    const auto sim = self_similarity_ref(f, p);
    for (double v : sim) CHECK(v == doctest::Approx(1.0 / 25).epsilon(1e-12));
}

TEST_CASE("self-similarity rows sum to one") {
    std::mt19937_64 rng(43);
    FeatureTensor f = random_tensor(3, 4, rng);
    SelfSimilarityParams p(3, 2);
    for (auto& v : p.w_theta) v = static_cast<float>(uniform(rng, -0.5, 0.5));
    for (auto& v : p.w_phi) v = static_cast<float>(uniform(rng, -0.5, 0.5));
    const auto sim = self_similarity_ref(f, p);
    for (int u = 0; u < kVertices; ++u) {
        double row = 0.0;
        for (int v = 0; v < kVertices; ++v) row += sim[u * kVertices + v];
        CHECK(std::abs(row - 1.0) < 1e-6);
    }
}

TEST_CASE("one-channel self-similarity equals the hand formula") {
    std::mt19937_64 rng(47);
    FeatureTensor f = random_tensor(1, 2, rng);
    SelfSimilarityParams p(1, 1);
    p.w_theta = {0.7f};
    p.w_phi = {-0.4f};
    const auto sim = self_similarity_ref(f, p);

    // theta^T phi with scalar embeddings: S(u,v) = sum_t (wt*f(t,u)) * (wp*f(t,v))
    for (int u = 0; u < kVertices; ++u) {
        double denom = 0.0;
        std::array<double, kVertices> row{};
        double mx = -1e300;
        for (int v = 0; v < kVertices; ++v) {
            double s = 0.0;
            for (int t = 0; t < f.frames; ++t)
                s += 0.7 * f.at(0, t, u).to_double() * (-0.4) * f.at(0, t, v).to_double();
            row[v] = s;
            mx = std::max(mx, s);
        }
        for (int v = 0; v < kVertices; ++v) denom += std::exp(row[v] - mx);
        for (int v = 0; v < kVertices; ++v)
            CHECK(sim[u * kVertices + v] ==
                  doctest::Approx(std::exp(row[v] - mx) / denom).epsilon(1e-9));
    }
}

namespace {

Block make_block(std::mt19937_64& rng, int ic, int oc, int stride, ShortcutKind kind) {
    Block blk;
    blk.cfg = {ic, oc, stride, kind};
    blk.graphs = random_graphs(rng);
    blk.spatial = random_spatial(ic, oc, rng);
    blk.spatial_affine = AffinePostOp(oc);
    blk.temporal = random_temporal(oc, oc, stride, rng);
    blk.temporal_affine = AffinePostOp(oc);
    for (auto& s : blk.spatial_affine.scale) s = static_cast<float>(uniform(rng, 0.5, 1.5));
    for (auto& b : blk.spatial_affine.bias) b = static_cast<float>(uniform(rng, -0.5, 0.5));
    for (auto& s : blk.temporal_affine.scale) s = static_cast<float>(uniform(rng, 0.5, 1.5));
    for (auto& b : blk.temporal_affine.bias) b = static_cast<float>(uniform(rng, -0.5, 0.5));
    if (kind == ShortcutKind::Projection) {
        blk.projection = ProjectionShortcut(ic, oc);
        for (auto& w : blk.projection.weights) w = quantize(uniform(rng, -0.5, 0.5));
    }
    return blk;
}

}  // namespace

TEST_CASE("zero-weight block with identity shortcut returns ReLU(input)") {
    std::mt19937_64 rng(53);
    FeatureTensor f = random_tensor(3, 4, rng);
    Block blk;
    blk.cfg = {3, 3, 1, ShortcutKind::Identity};
    blk.graphs = random_graphs(rng);
    blk.spatial = SpatialConvLayer(3, 3);
    blk.spatial_affine = AffinePostOp(3);
    blk.temporal = TemporalConvLayer(3, 3, 1);
    blk.temporal_affine = AffinePostOp(3);

    const FeatureTensor out = block_forward_ref(f, blk);
    for (std::size_t i = 0; i < f.data.size(); ++i)
        CHECK(out.data[i].raw == relu(f.data[i]).raw);
}

TEST_CASE("block output is elementwise non-negative") {
    std::mt19937_64 rng(59);
    Block blk = make_block(rng, 2, 4, 2, ShortcutKind::Projection);
    FeatureTensor f = random_tensor(2, 5, rng);
    const FeatureTensor out = block_forward_ref(f, blk);
    for (const auto& v : out.data) CHECK(v.raw >= 0);
}

TEST_CASE("block equals the composition of per-op oracles") {
    std::mt19937_64 rng(61);
    for (ShortcutKind kind : {ShortcutKind::Identity, ShortcutKind::Projection}) {
        const int ic = 2, oc = kind == ShortcutKind::Identity ? 2 : 3;
        Block blk = make_block(rng, ic, oc, 1, kind);
        FeatureTensor f = random_tensor(ic, 4, rng);

        FeatureTensor stage = naive_graph_spatial(f, blk.graphs, blk.spatial);
        stage = apply_affine_relu(stage, blk.spatial_affine);
        stage = naive_temporal(stage, blk.temporal);
        stage = apply_affine(stage, blk.temporal_affine);
        FeatureTensor expect(oc, stage.frames, kVertices);
        for (int c = 0; c < oc; ++c)
            for (int t = 0; t < stage.frames; ++t)
                for (int v = 0; v < kVertices; ++v) {
                    FixedQ8p8 sc{};
                    if (kind == ShortcutKind::Identity) {
                        sc = f.at(c, t, v);
                    } else {
                        std::int64_t acc = 0;
                        for (int i = 0; i < ic; ++i)
                            acc += std::int64_t{blk.projection.at(i, c).raw} * f.at(i, t, v).raw;
                        sc = requant_acc16(acc);
                    }
                    expect.at(c, t, v) = relu(add_sat(stage.at(c, t, v), sc));
                }
        CHECK(block_forward_ref(f, blk) == expect);
    }
}

TEST_CASE("micro-model forward equals the straight-line composition") {
    std::mt19937_64 rng(67);
    Model model;
    model.cfg.frames = 6;
    model.cfg.num_classes = 3;
    model.cfg.blocks = {{2, 4, 1, ShortcutKind::Projection},
                        {4, 4, 2, ShortcutKind::Projection}};
    model.blocks.push_back(make_block(rng, 2, 4, 1, ShortcutKind::Projection));
    model.blocks.push_back(make_block(rng, 4, 4, 2, ShortcutKind::Projection));
    model.classifier.in_features = 4;
    model.classifier.num_classes = 3;
    model.classifier.weights.resize(12);
    model.classifier.bias.resize(3);
    for (auto& w : model.classifier.weights) w = static_cast<float>(uniform(rng, -1, 1));
    for (auto& b : model.classifier.bias) b = static_cast<float>(uniform(rng, -1, 1));

    FeatureTensor f = random_tensor(2, 6, rng);
    FeatureTensor h = block_forward_ref(f, model.blocks[0]);
    h = block_forward_ref(h, model.blocks[1]);
    const auto expect = pool_and_classify(h, model.classifier);
    const auto scores = model_forward_ref(f, model);
    REQUIRE(scores.size() == expect.size());
    for (std::size_t i = 0; i < scores.size(); ++i) CHECK(scores[i] == expect[i]);
}

TEST_CASE("zero input with zero biases scores zero") {
    std::mt19937_64 rng(71);
    Model model;
    model.cfg.frames = 4;
    model.cfg.num_classes = 2;
    model.cfg.blocks = {{2, 3, 1, ShortcutKind::Projection}};
    Block blk = make_block(rng, 2, 3, 1, ShortcutKind::Projection);
    for (auto& b : blk.spatial_affine.bias) b = 0.0f;
    for (auto& b : blk.temporal_affine.bias) b = 0.0f;
    model.blocks.push_back(std::move(blk));
    model.classifier.in_features = 3;
    model.classifier.num_classes = 2;
    model.classifier.weights = {0.5f, -0.5f, 1.0f, 0.25f, 0.75f, -1.0f};
    model.classifier.bias = {0.0f, 0.0f};

    const auto scores = model_forward_ref(FeatureTensor(2, 4), model);
    for (double s : scores) CHECK(s == 0.0);
}

TEST_CASE("argmax is invariant under positive classifier scaling") {
    std::mt19937_64 rng(73);
    Model model;
    model.cfg.frames = 5;
    model.cfg.num_classes = 4;
    model.cfg.blocks = {{2, 3, 1, ShortcutKind::Projection}};
    model.blocks.push_back(make_block(rng, 2, 3, 1, ShortcutKind::Projection));
    model.classifier.in_features = 3;
    model.classifier.num_classes = 4;
    model.classifier.has_bias = false;
    model.classifier.weights.resize(12);
    for (auto& w : model.classifier.weights) w = static_cast<float>(uniform(rng, -1, 1));

    FeatureTensor f = random_tensor(2, 5, rng);
    const auto scores = model_forward_ref(f, model);
    Model scaled = model;
    for (auto& w : scaled.classifier.weights) w *= 3.5f;
    const auto scores2 = model_forward_ref(f, scaled);

    const auto arg = [](const std::vector<double>& s) {
        return std::distance(s.begin(), std::max_element(s.begin(), s.end()));
    };
    CHECK(arg(scores) == arg(scores2));
}

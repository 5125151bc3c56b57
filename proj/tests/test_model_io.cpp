#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "hypgcn/errors.hpp"
#include "hypgcn/model_io.hpp"

using namespace hypgcn;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/hypgcn_io_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

ModelConfig micro_config() {
    ModelConfig cfg;
    cfg.frames = 8;
    cfg.num_classes = 4;
    cfg.blocks = {{3, 8, 1, ShortcutKind::Projection},
                  {8, 8, 1, ShortcutKind::Identity},
                  {8, 16, 2, ShortcutKind::Projection}};
    return cfg;
}

bool models_equal(const Model& a, const Model& b) {
    if (a.cfg.frames != b.cfg.frames || a.cfg.num_classes != b.cfg.num_classes) return false;
    if (a.blocks.size() != b.blocks.size()) return false;
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        const Block &x = a.blocks[i], &y = b.blocks[i];
        if (x.cfg.in_channels != y.cfg.in_channels || x.cfg.out_channels != y.cfg.out_channels ||
            x.cfg.temporal_stride != y.cfg.temporal_stride || x.cfg.shortcut != y.cfg.shortcut)
            return false;
        for (int k = 0; k < kNeighbourSets; ++k)
            if (x.graphs.graphs[k] != y.graphs.graphs[k]) return false;
        if (x.spatial.weights != y.spatial.weights) return false;
        if (x.temporal.weights != y.temporal.weights) return false;
        if (x.spatial_affine.scale != y.spatial_affine.scale) return false;
        if (x.spatial_affine.bias != y.spatial_affine.bias) return false;
        if (x.temporal_affine.scale != y.temporal_affine.scale) return false;
        if (x.temporal_affine.bias != y.temporal_affine.bias) return false;
        if (x.projection.weights != y.projection.weights) return false;
    }
    return a.classifier.weights == b.classifier.weights &&
           a.classifier.bias == b.classifier.bias &&
           a.classifier.has_bias == b.classifier.has_bias;
}

}  // namespace

TEST_CASE("model save/load round-trips bitwise") {
    const Model model = make_random_model(micro_config(), 99);
    TempFile tmp("roundtrip.rfch");
    save_model(model, tmp.path);
    const Model loaded = load_model(tmp.path);
    CHECK(models_equal(model, loaded));
    CHECK_FALSE(has_mask_section(tmp.path));
}

TEST_CASE("quantized graphs are rebuilt on load") {
    const Model model = make_random_model(micro_config(), 5);
    TempFile tmp("graphs.rfch");
    save_model(model, tmp.path);
    const Model loaded = load_model(tmp.path);
    for (std::size_t b = 0; b < model.blocks.size(); ++b)
        for (int k = 0; k < kNeighbourSets; ++k)
            CHECK(loaded.blocks[b].graphs.graphs_q[k] == model.blocks[b].graphs.graphs_q[k]);
}

TEST_CASE("pruned save/load preserves masks and shortcut diagonals") {
    const Model model = make_random_model(micro_config(), 42);
    PruneSpec spec;
    spec.input_skip = true;
    spec.blocks = {{0.0, "all-keep"}, {0.5, "cav-70-1"}, {0.25, "cav-70-1"}};
    PrunedModel pruned = apply_fine_grained(propagate_coarse_temporal(
        apply_dataflow_reorg(model, spec)));

    TempFile tmp("pruned.rfch");
    save_pruned(pruned, tmp.path);
    CHECK(has_mask_section(tmp.path));

    const PrunedModel loaded = load_pruned(tmp.path);
    CHECK(models_equal(pruned.model, loaded.model));
    REQUIRE(loaded.masks.size() == pruned.masks.size());
    for (std::size_t b = 0; b < pruned.masks.size(); ++b) {
        CHECK(loaded.masks[b].spatial.bits == pruned.masks[b].spatial.bits);
        CHECK(loaded.masks[b].temporal_filters.bits == pruned.masks[b].temporal_filters.bits);
        CHECK(loaded.masks[b].cavity.name == pruned.masks[b].cavity.name);
        CHECK(loaded.masks[b].cavity.keep == pruned.masks[b].cavity.keep);
        CHECK(loaded.model.blocks[b].shortcut_keep == pruned.model.blocks[b].shortcut_keep);
    }
    CHECK(loaded.spec.input_skip);
    CHECK(loaded.spec.blocks[1].drop_rate == 0.5);
    CHECK(loaded.spec.blocks[1].pattern == "cav-70-1");
    CHECK_NOTHROW(check_mask_consistency(loaded));
}

TEST_CASE("a plain model loads as an all-keep pruned model") {
    const Model model = make_random_model(micro_config(), 7);
    TempFile tmp("plain.rfch");
    save_model(model, tmp.path);
    const PrunedModel loaded = load_pruned(tmp.path);
    for (std::size_t b = 0; b < loaded.masks.size(); ++b) {
        CHECK(loaded.masks[b].spatial.kept_count() == model.blocks[b].cfg.in_channels);
        CHECK(loaded.masks[b].cavity.is_all_keep());
    }
    CHECK_FALSE(loaded.spec.input_skip);
}

TEST_CASE("bad magic and missing files are rejected") {
    TempFile tmp("bad.rfch");
    std::ofstream(tmp.path) << "not a model file";
    CHECK_THROWS_AS(load_model(tmp.path), ConfigError);
    CHECK_THROWS_AS(load_model("/tmp/hypgcn_io_does_not_exist.rfch"), ConfigError);
}

TEST_CASE("truncated files are rejected") {
    const Model model = make_random_model(micro_config(), 3);
    TempFile tmp("trunc.rfch");
    save_model(model, tmp.path);
    std::ifstream in(tmp.path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream(tmp.path, std::ios::binary).write(bytes.data(), bytes.size() / 2);
    CHECK_THROWS_AS(load_model(tmp.path), ConfigError);
}

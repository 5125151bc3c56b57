// Command-line front end: model generation, pruning, oracle-vs-sparse
// verification, RFC storage studies and PE simulation sweeps.
//
// Exit codes: 0 success, 2 config error, 3 verification failure,
// 4 simulation overflow.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <random>

#include "hypgcn/config_io.hpp"
#include "hypgcn/errors.hpp"
#include "hypgcn/model_io.hpp"
#include "hypgcn/pe_sim.hpp"
#include "hypgcn/report.hpp"
#include "hypgcn/rfc_codec.hpp"
#include "hypgcn/sparse_exec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hypgcn;

namespace {

int log_level() {
    const char* env = std::getenv("RFC_HYPGCN_LOG");
    if (!env) return 1;
    const std::string v = env;
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << msg << '\n';
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open '" + path.string() + "' for writing");
    f << j.dump(2) << '\n';
}

FeatureTensor seeded_input(int channels, int frames, std::uint64_t seed) {
    FeatureTensor f(channels, frames);
    std::mt19937_64 rng(seed);
    for (auto& v : f.data) {
        const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
        v = quantize(u * 4.0 - 2.0);
    }
    return f;
}

// ---------------------------------------------------------------- gen-model

int cmd_gen_model(const std::string& out_path, const std::string& preset, int frames,
                  int classes, std::uint64_t seed) {
    ModelConfig cfg;
    if (preset == "default") {
        cfg = default_model_config(frames, classes);
    } else if (preset == "micro") {
        cfg.frames = frames;
        cfg.num_classes = classes;
        cfg.blocks = {{3, 8, 1, ShortcutKind::Projection},
                      {8, 8, 1, ShortcutKind::Identity},
                      {8, 16, 2, ShortcutKind::Projection},
                      {16, 16, 1, ShortcutKind::Identity}};
    } else {
        throw ConfigError("unknown preset '" + preset + "' (default | micro)");
    }
    const Model model = make_random_model(cfg, seed);
    save_model(model, out_path);
    info("wrote " + out_path);
    std::cout << "model " << out_path << " blocks " << model.blocks.size() << " frames "
              << model.cfg.frames << " classes " << model.cfg.num_classes << '\n';
    return 0;
}

// -------------------------------------------------------------------- prune

int cmd_prune(const std::string& model_path, const std::string& spec_path,
              const std::string& out) {
    const fs::path dir = ensure_out_dir(out);
    const Model model = load_model(model_path);
    const PruneSpec spec = load_prune_spec(spec_path, static_cast<int>(model.blocks.size()));

    PrunedModel pruned = apply_fine_grained(propagate_coarse_temporal(
        apply_dataflow_reorg(model, spec)));
    check_mask_consistency(pruned);
    const PruneStats stats = compression_stats(pruned, model.cfg.frames);

    const fs::path model_out = dir / "pruned.rfch";
    save_pruned(pruned, model_out.string());

    std::vector<ReportRow> rows;
    rows.push_back({"compression_ratio", "total", stats.compression_ratio, "x", "analytic"});
    rows.push_back(
        {"graph_skip_efficiency", "total", stats.graph_skip_efficiency, "frac", "analytic"});
    rows.push_back({"total_params", "total", static_cast<double>(stats.total_params), "count",
                    "analytic"});
    rows.push_back({"nonzero_params", "total", static_cast<double>(stats.nonzero_params),
                    "count", "analytic"});
    for (std::size_t b = 0; b < stats.blocks.size(); ++b) {
        const std::string layer = "block" + std::to_string(b + 1);
        const BlockKeptCounts& counts = stats.blocks[b];
        rows.push_back({"kept_in_channels", layer,
                        static_cast<double>(counts.kept_in_channels), "count", "analytic"});
        rows.push_back({"kept_temporal_filters", layer,
                        static_cast<double>(counts.kept_filters), "count", "analytic"});
        rows.push_back({"nonzero_params", layer,
                        static_cast<double>(counts.nonzero_params), "count", "analytic"});
    }
    write_csv((dir / "prune_stats.csv").string(), rows);

    json summary;
    summary["model"] = fs::path(model_path).filename().string();
    summary["spec"] = fs::path(spec_path).filename().string();
    summary["compression_ratio"] = stats.compression_ratio;
    summary["graph_skip_efficiency"] = stats.graph_skip_efficiency;
    summary["input_skip"] = pruned.spec.input_skip;
    write_json(dir / "summary.json", summary);

    std::cout << "pruned model " << model_out.string() << '\n'
              << "compression_ratio " << format_value(stats.compression_ratio) << '\n'
              << "graph_skip_efficiency " << format_value(stats.graph_skip_efficiency) << '\n';
    return 0;
}

// ------------------------------------------------------------------- verify

struct SampleOutcome {
    bool ok = true;
    std::string mismatch;  // first differing tensor coordinate
    WorkCounters counters;
};

SampleOutcome verify_sample(const PrunedModel& pruned, const FeatureTensor& input) {
    SampleOutcome outcome;
    FeatureTensor f = pruned.spec.input_skip ? input_skip(input) : input;
    FeatureTensor ref = f;
    for (std::size_t l = 0; l < pruned.model.blocks.size(); ++l) {
        const FeatureTensor sparse_out =
            sparse_block_forward(f, pruned.model.blocks[l], pruned.masks[l], outcome.counters);
        const FeatureTensor ref_out = block_forward_ref(ref, pruned.model.blocks[l]);
        if (!(sparse_out == ref_out)) {
            for (int c = 0; c < ref_out.channels && outcome.ok; ++c)
                for (int t = 0; t < ref_out.frames && outcome.ok; ++t)
                    for (int v = 0; v < ref_out.vertices && outcome.ok; ++v)
                        if (sparse_out.at(c, t, v).raw != ref_out.at(c, t, v).raw) {
                            outcome.ok = false;
                            outcome.mismatch = "block " + std::to_string(l + 1) + " at (c=" +
                                               std::to_string(c) + ",t=" + std::to_string(t) +
                                               ",v=" + std::to_string(v) + ")";
                        }
            return outcome;
        }
        f = sparse_out;
        ref = ref_out;
    }
    const auto sparse_scores = pool_and_classify(f, pruned.model.classifier);
    const auto ref_scores = pool_and_classify(ref, pruned.model.classifier);
    if (sparse_scores != ref_scores) {
        outcome.ok = false;
        outcome.mismatch = "classifier scores";
    }
    return outcome;
}

int cmd_verify(const std::string& model_path, int samples, std::uint64_t seed, int threads,
               const std::string& out) {
    const fs::path dir = ensure_out_dir(out);
    const PrunedModel pruned = load_pruned(model_path);
    try {
        check_mask_consistency(pruned);
    } catch (const MaskError& e) {
        std::cout << "FAIL mask consistency: " << e.what() << '\n';
        return 3;
    }

    const int in_channels = pruned.model.blocks.front().cfg.in_channels;
    const int frames = pruned.model.cfg.frames;
    std::vector<SampleOutcome> outcomes(samples);

    const int workers = std::max(1, threads);
    std::vector<std::future<void>> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
        pool.push_back(std::async(std::launch::async, [&] {
            for (int i = next.fetch_add(1); i < samples; i = next.fetch_add(1))
                outcomes[i] = verify_sample(pruned, seeded_input(in_channels, frames, seed + i));
        }));
    for (auto& f : pool) f.get();

    WorkCounters total;
    int failures = 0;
    std::string first_mismatch;
    for (const SampleOutcome& o : outcomes) {
        total += o.counters;
        if (!o.ok && failures++ == 0) first_mismatch = o.mismatch;
    }

    std::vector<ReportRow> rows;
    rows.push_back({"samples", "total", static_cast<double>(samples), "count", "analytic"});
    rows.push_back({"mismatches", "total", static_cast<double>(failures), "count", "measured"});
    const auto add_counter = [&](const char* name, std::uint64_t v) {
        rows.push_back({name, "total", static_cast<double>(v), "macs", "measured"});
    };
    add_counter("graph_macs_performed", total.graph_macs_performed);
    add_counter("graph_macs_skipped", total.graph_macs_skipped);
    add_counter("spatial_macs_performed", total.spatial_macs_performed);
    add_counter("spatial_macs_skipped", total.spatial_macs_skipped);
    add_counter("temporal_macs_performed", total.temporal_macs_performed);
    add_counter("temporal_macs_skipped", total.temporal_macs_skipped);
    rows.push_back({"graph_skip_efficiency", "total", total.graph_skip_efficiency(), "frac",
                    "measured"});
    const double all = static_cast<double>(total.total_performed() + total.total_skipped());
    rows.push_back({"total_skip_efficiency", "total",
                    all > 0 ? static_cast<double>(total.total_skipped()) / all : 0.0, "frac",
                    "measured"});
    write_csv((dir / "verify.csv").string(), rows);

    json summary;
    summary["samples"] = samples;
    summary["seed"] = seed;
    summary["mismatches"] = failures;
    summary["graph_skip_efficiency"] = total.graph_skip_efficiency();
    write_json(dir / "summary.json", summary);

    if (failures > 0) {
        std::cout << "FAIL " << failures << "/" << samples
                  << " samples diverged; first mismatch: " << first_mismatch << '\n';
        return 3;
    }
    std::cout << "PASS " << samples << " samples bitwise-equal; skipped "
              << total.total_skipped() << " of "
              << (total.total_performed() + total.total_skipped()) << " MACs\n";
    return 0;
}

// ---------------------------------------------------------------------- rfc

rfc::LayerStorageInput trace_to_layer(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace '" + path + "'");
    rfc::LayerStorageInput layer;
    layer.name = fs::path(path).stem().string();
    layer.lines_per_vector = 1;
    std::array<std::size_t, 4> counts{};
    std::vector<char> buf(rfc::kBankLanes * 2);
    std::size_t lines = 0, verified = 0;
    while (in.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
        rfc::BankVector bank;
        int zero = 0;
        for (int lane = 0; lane < rfc::kBankLanes; ++lane) {
            const auto lo = static_cast<unsigned char>(buf[2 * lane]);
            const auto hi = static_cast<unsigned char>(buf[2 * lane + 1]);
            bank.lanes[lane] =
                FixedQ8p8::from_raw(static_cast<std::int16_t>(lo | (hi << 8)));
            zero += (relu(bank.lanes[lane]).raw == 0);
        }
        ++counts[static_cast<std::size_t>(rfc::category_for_sparsity(
            static_cast<double>(zero) / rfc::kBankLanes))];
        // round-trip every line through the codec while we are here
        rfc::BankVector expect;
        for (int lane = 0; lane < rfc::kBankLanes; ++lane)
            expect.lanes[lane] = relu(bank.lanes[lane]);
        if (rfc::decode_bank(rfc::relu_encode_bank(bank)) == expect) ++verified;
        ++lines;
    }
    if (lines == 0) throw ConfigError("trace '" + path + "' holds no complete bank lines");
    if (verified != lines) throw CodecError("codec round-trip failed on the trace");
    layer.vectors = lines;
    for (int c = 0; c < 4; ++c)
        layer.hist[c] = static_cast<double>(counts[c]) / static_cast<double>(lines);
    debug("trace " + path + ": " + std::to_string(lines) + " lines, all round-tripped");
    return layer;
}

int cmd_rfc(const std::string& hist_path, const std::string& trace_path,
            std::size_t granularity, const std::string& out) {
    const fs::path dir = ensure_out_dir(out);
    std::vector<rfc::LayerStorageInput> layers;
    std::string provenance = "analytic";
    if (!hist_path.empty()) {
        layers = load_histogram_csv(hist_path);
    } else if (!trace_path.empty()) {
        layers.push_back(trace_to_layer(trace_path));
        provenance = "measured";
    } else {
        throw ConfigError("rfc needs --hist or --trace");
    }

    rfc::StorageReportOptions opts;
    opts.granularity = granularity;
    const auto report = rfc::storage_report(layers, opts);

    std::vector<ReportRow> rows;
    for (const rfc::StorageRow& r : report) {
        rows.push_back({"dense_bits", r.layer, static_cast<double>(r.dense_bits), "bits",
                        provenance});
        rows.push_back({"rfc_data_bits", r.layer, static_cast<double>(r.rfc_data_bits), "bits",
                        provenance});
        rows.push_back({"rfc_hot_bits", r.layer, static_cast<double>(r.rfc_hot_bits), "bits",
                        provenance});
        rows.push_back({"csc_bits", r.layer, static_cast<double>(r.csc_bits), "bits",
                        provenance});
        rows.push_back({"rfc_reduction_pct", r.layer, r.reduction_pct, "pct", provenance});
        rows.push_back({"rfc_reduction_with_hot_pct", r.layer, r.reduction_with_hot_pct, "pct",
                        provenance});
        rows.push_back({"csc_reduction_pct", r.layer, r.csc_reduction_pct, "pct", provenance});
        rows.push_back({"rfc_load_cycles", r.layer, r.rfc_load_cycles, "cycles", "analytic"});
        rows.push_back({"rfc_codec_cycles", r.layer, r.rfc_codec_cycles, "cycles", "analytic"});
        rows.push_back({"csc_avg_decode_cycles", r.layer, r.csc_avg_decode_cycles, "cycles",
                        provenance});
    }
    write_csv((dir / "rfc_storage.csv").string(), rows);

    json summary;
    double dense = 0, data = 0;
    for (const rfc::StorageRow& r : report) {
        dense += static_cast<double>(r.dense_bits);
        data += static_cast<double>(r.rfc_data_bits);
        summary["layers"].push_back({{"layer", r.layer},
                                     {"reduction_pct", r.reduction_pct},
                                     {"csc_reduction_pct", r.csc_reduction_pct}});
        std::cout << r.layer << " reduction_pct " << format_value(r.reduction_pct) << '\n';
    }
    summary["total_reduction_pct"] = dense > 0 ? (1.0 - data / dense) * 100.0 : 0.0;
    write_json(dir / "summary.json", summary);
    return 0;
}

// ---------------------------------------------------------------------- sim

int cmd_sim(const std::string& scenario_path, std::uint64_t seed, const std::string& out) {
    const fs::path dir = ensure_out_dir(out);
    const Scenario scenario = load_scenario(scenario_path);
    const sim::StaticDynamicReport report =
        sim::compare_static_dynamic(scenario.layers, seed, scenario.queue_depth);

    std::vector<ReportRow> rows;
    std::vector<std::uint64_t> stage_cycles;
    for (const sim::LayerComparison& layer : report.layers) {
        rows.push_back({"static_dsps", layer.name, static_cast<double>(layer.static_dsps),
                        "dsps", "analytic"});
        rows.push_back({"dynamic_dsps", layer.name, static_cast<double>(layer.dynamic_dsps),
                        "dsps", "analytic"});
        rows.push_back({"dynamic_dsps_per_pe", layer.name,
                        static_cast<double>(layer.dynamic_dsps_per_pe), "dsps", "analytic"});
        rows.push_back({"static_efficiency", layer.name, layer.static_efficiency, "frac",
                        "measured"});
        rows.push_back({"dynamic_efficiency", layer.name, layer.dynamic_efficiency, "frac",
                        "measured"});
        rows.push_back({"dynamic_delay_pct", layer.name, layer.dynamic_delay_pct, "pct",
                        "measured"});
        rows.push_back({"dynamic_cycles", layer.name,
                        static_cast<double>(layer.dynamic_cycles), "cycles", "measured"});
        stage_cycles.push_back(layer.dynamic_cycles);
    }
    rows.push_back({"static_dsps", "total", static_cast<double>(report.static_total), "dsps",
                    "analytic"});
    rows.push_back({"dynamic_dsps", "total", static_cast<double>(report.dynamic_total), "dsps",
                    "analytic"});
    rows.push_back({"dsp_reduction_pct", "total", report.reduction_pct, "pct", "analytic"});
    rows.push_back({"max_delay_pct", "total", report.max_delay_pct, "pct", "measured"});
    rows.push_back(
        {"aggregate_delay_pct", "total", report.aggregate_delay_pct, "pct", "measured"});

    const sim::ThroughputReport throughput = sim::pipeline_throughput(
        stage_cycles, scenario.clock_hz,
        static_cast<std::uint64_t>(report.dynamic_total));
    rows.push_back({"fps", "total", throughput.fps, "1/s", "measured"});
    rows.push_back({"peak_ops", "total", throughput.peak_ops, "ops/s", "analytic"});
    write_csv((dir / "sim_report.csv").string(), rows);

    json summary;
    summary["static_dsps"] = report.static_total;
    summary["dynamic_dsps"] = report.dynamic_total;
    summary["dsp_reduction_pct"] = report.reduction_pct;
    summary["max_delay_pct"] = report.max_delay_pct;
    summary["aggregate_delay_pct"] = report.aggregate_delay_pct;
    summary["fps"] = throughput.fps;
    summary["peak_ops"] = throughput.peak_ops;
    write_json(dir / "summary.json", summary);

    std::cout << "static_dsps " << report.static_total << '\n'
              << "dynamic_dsps " << report.dynamic_total << '\n'
              << "dsp_reduction_pct " << format_value(report.reduction_pct) << '\n'
              << "max_delay_pct " << format_value(report.max_delay_pct) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid-pruned skeleton GCN pipeline: pruning, bit-exact sparse execution, "
                 "feature compression and PE simulation"};
    app.require_subcommand(1);

    std::string model_path, spec_path, scenario_path, hist_path, trace_path;
    std::string out = "out", preset = "default";
    std::uint64_t seed = 1;
    int samples = 10, threads = 1, frames = 300, classes = 60;
    std::size_t granularity = 512;

    CLI::App* gen = app.add_subcommand("gen-model", "generate a seeded random model file");
    gen->add_option("--out", out, "output model path")->required();
    gen->add_option("--seed", seed, "rng seed");
    gen->add_option("--preset", preset, "default | micro");
    gen->add_option("--frames", frames, "input frame count");
    gen->add_option("--classes", classes, "classifier classes");

    CLI::App* prune = app.add_subcommand("prune", "apply the hybrid pruning pipeline");
    prune->add_option("--model", model_path, "model file")->required();
    prune->add_option("--spec", spec_path, "prune spec file")->required();
    prune->add_option("--out", out, "output directory");

    CLI::App* verify = app.add_subcommand("verify", "bitwise oracle-vs-sparse check");
    verify->add_option("--model", model_path, "model or pruned-model file")->required();
    verify->add_option("--samples", samples, "random inputs to run");
    verify->add_option("--seed", seed, "rng seed");
    verify->add_option("--threads", threads, "worker threads");
    verify->add_option("--out", out, "output directory");

    CLI::App* rfc_cmd = app.add_subcommand("rfc", "mini-bank sizing and storage comparison");
    rfc_cmd->add_option("--hist", hist_path, "sparsity histogram csv");
    rfc_cmd->add_option("--trace", trace_path, "raw i16 bank trace");
    rfc_cmd->add_option("--granularity", granularity, "depth allocation quantum (lines)");
    rfc_cmd->add_option("--out", out, "output directory");

    CLI::App* sim_cmd = app.add_subcommand("sim", "static-vs-dynamic DSP scheduling sweep");
    sim_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
    sim_cmd->add_option("--seed", seed, "rng seed");
    sim_cmd->add_option("--out", out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_model(out, preset, frames, classes, seed);
        if (prune->parsed()) return cmd_prune(model_path, spec_path, out);
        if (verify->parsed()) return cmd_verify(model_path, samples, seed, threads, out);
        if (rfc_cmd->parsed()) return cmd_rfc(hist_path, trace_path, granularity, out);
        if (sim_cmd->parsed()) return cmd_sim(scenario_path, seed, out);
    } catch (const OverflowError& e) {
        std::cerr << "simulation overflow: " << e.what() << '\n';
        return 4;
    } catch (const MaskError& e) {
        std::cerr << "verification failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

#include "hypgcn/pe_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "hypgcn/errors.hpp"

namespace hypgcn::sim {

double expected_valid(double s) {
    if (s < 0.0 || s > 1.0) throw ConfigError("sparsity must be in [0, 1]");
    const double t = 1.0 - s;
    return 3.0 * t * t * t + 3.0 * s * s * t + 6.0 * s * t * t;
}

double expected_valid_closed(double s) { return 3.0 * (1.0 - s); }

int choose_dsp_count(double e_valid, int queue_count) {
    if (e_valid < 0.0) throw ConfigError("expected valid count must be >= 0");
    const int n = static_cast<int>(std::ceil(e_valid));
    return std::clamp(n, 1, queue_count);
}

std::uint64_t SubFilterStream::popcount() const {
    std::uint64_t n = 0;
    for (std::uint32_t e : events) n += std::popcount(e);
    return n;
}

SubFilterStream make_sparsity_stream(int queue_count, std::size_t n_events, double sparsity,
                                     std::uint64_t seed) {
    if (queue_count < 1 || queue_count > 16)
        throw ConfigError("queue_count must be in [1, 16]");
    if (sparsity < 0.0 || sparsity > 1.0) throw ConfigError("sparsity must be in [0, 1]");

    SubFilterStream stream;
    stream.queue_count = queue_count;
    stream.events.reserve(n_events);
    std::mt19937_64 rng(seed);
    const int positions = (queue_count + 1) / 2;
    const double keep_p = 1.0 - sparsity;

    for (std::size_t e = 0; e < n_events; ++e) {
        std::uint32_t mask = 0;
        for (int pos = 0; pos < positions; ++pos) {
            const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
            if (u >= keep_p) continue;
            // bonded queue pair {2*pos, 2*pos+1}; odd tail is a singleton
            int q = 2 * pos;
            if (q + 1 < queue_count && (rng() & 1)) q += 1;
            mask |= 1u << q;
        }
        stream.events.push_back(mask);
    }
    return stream;
}

SimStats simulate_dyn_pe(const DynMultPEConfig& cfg, const SubFilterStream& stream) {
    if (cfg.queue_count != stream.queue_count)
        throw ConfigError("stream width does not match PE queue count");
    if (cfg.dsp_count < 1 || cfg.dsp_count > cfg.queue_count)
        throw ConfigError("dsp_count must be in [1, queue_count]");
    if (cfg.queue_depth < 1) throw ConfigError("queue depth must be positive");

    std::vector<std::uint32_t> queue_fill(cfg.queue_count, 0);
    std::uint32_t backlog = 0;
    std::size_t next_event = 0;
    int last_served = cfg.queue_count - 1;

    SimStats stats;
    while (next_event < stream.events.size() || backlog > 0) {
        if (next_event < stream.events.size()) {
            if (backlog < static_cast<std::uint32_t>(cfg.queue_depth)) {
                std::uint32_t mask = stream.events[next_event++];
                while (mask) {
                    const int q = std::countr_zero(mask);
                    mask &= mask - 1;
                    ++queue_fill[q];
                    ++backlog;
                }
            } else {
                ++stats.stall_cycles;
            }
        }
        // serve up to dsp_count distinct busy queues, round-robin
        int served = 0;
        for (int step = 1; step <= cfg.queue_count && served < cfg.dsp_count; ++step) {
            const int q = (last_served + step) % cfg.queue_count;
            if (queue_fill[q] == 0) continue;
            --queue_fill[q];
            --backlog;
            ++served;
            if (served == cfg.dsp_count) last_served = q;
        }
        stats.useful_macs += static_cast<std::uint64_t>(served);
        ++stats.cycles;
    }

    const std::uint64_t ideal = stream.events.size();
    if (stats.cycles > 0)
        stats.efficiency = static_cast<double>(stats.useful_macs) /
                           (static_cast<double>(cfg.dsp_count) * stats.cycles);
    if (ideal > 0)
        stats.max_delay_pct = 100.0 * static_cast<double>(stats.cycles - ideal) / ideal;
    return stats;
}

StaticDynamicReport compare_static_dynamic(const std::vector<LayerSimConfig>& layers,
                                           std::uint64_t seed, int queue_depth) {
    StaticDynamicReport report;
    std::uint64_t extra_cycles = 0, ideal_cycles = 0;

    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSimConfig& layer = layers[i];
        LayerComparison cmp;
        cmp.name = layer.name;
        cmp.pe_count = layer.pe_count;
        cmp.queue_count = layer.queue_count;
        cmp.sparsity = layer.sparsity;
        cmp.static_dsps_per_pe = layer.queue_count;
        cmp.dynamic_dsps_per_pe = choose_dsp_count(expected_valid(layer.sparsity),
                                                   layer.queue_count);
        cmp.static_dsps = std::int64_t{layer.pe_count} * cmp.static_dsps_per_pe;
        cmp.dynamic_dsps = std::int64_t{layer.pe_count} * cmp.dynamic_dsps_per_pe;

        const SubFilterStream stream =
            make_sparsity_stream(layer.queue_count, layer.events, layer.sparsity, seed + i);
        const SimStats dyn = simulate_dyn_pe(
            {layer.queue_count, cmp.dynamic_dsps_per_pe, queue_depth}, stream);
        const SimStats sta = simulate_dyn_pe(
            {layer.queue_count, cmp.static_dsps_per_pe, queue_depth}, stream);
        cmp.dynamic_efficiency = dyn.efficiency;
        cmp.static_efficiency = sta.efficiency;
        cmp.dynamic_delay_pct = dyn.max_delay_pct;
        cmp.dynamic_cycles = dyn.cycles;
        cmp.ideal_cycles = stream.events.size();

        report.max_delay_pct = std::max(report.max_delay_pct, dyn.max_delay_pct);
        extra_cycles += dyn.cycles - stream.events.size();
        ideal_cycles += stream.events.size();
        report.static_total += cmp.static_dsps;
        report.dynamic_total += cmp.dynamic_dsps;
        report.layers.push_back(std::move(cmp));
    }

    if (report.static_total > 0)
        report.reduction_pct = 100.0 *
                               static_cast<double>(report.static_total - report.dynamic_total) /
                               static_cast<double>(report.static_total);
    if (ideal_cycles > 0)
        report.aggregate_delay_pct =
            100.0 * static_cast<double>(extra_cycles) / static_cast<double>(ideal_cycles);
    return report;
}

std::vector<ScmAccess> scm_schedule(int rows, int out_channels, int kept_channels) {
    if (rows < 0 || out_channels < 0 || kept_channels < 0)
        throw ConfigError("schedule dims must be non-negative");
    constexpr int kColumns = 25;
    std::vector<ScmAccess> trace;
    trace.reserve(static_cast<std::size_t>(rows) * kColumns * out_channels * kept_channels);
    for (int h = 0; h < rows; ++h)
        for (int w = 0; w < kColumns; ++w)
            for (int oc = 0; oc < out_channels; ++oc)
                for (int line = 0; line < kept_channels; ++line)
                    trace.push_back({static_cast<std::uint32_t>(h),
                                     static_cast<std::uint32_t>(w),
                                     static_cast<std::uint32_t>(oc),
                                     static_cast<std::uint32_t>(line)});
    return trace;
}

ThroughputReport pipeline_throughput(const std::vector<std::uint64_t>& stage_cycles,
                                     double clock_hz, std::uint64_t mac_units) {
    if (stage_cycles.empty()) throw ConfigError("pipeline needs at least one stage");
    std::uint64_t slowest = 0;
    for (std::uint64_t c : stage_cycles) {
        if (c == 0) throw ConfigError("stage cycle count must be positive");
        slowest = std::max(slowest, c);
    }
    ThroughputReport report;
    report.fps = clock_hz / static_cast<double>(slowest);
    report.peak_ops = 2.0 * static_cast<double>(mac_units) * clock_hz;
    for (std::uint64_t c : stage_cycles)
        report.utilization.push_back(static_cast<double>(c) / static_cast<double>(slowest));
    return report;
}

}  // namespace hypgcn::sim

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hypgcn::sim {

/// Expected valid computations per sub-filter event at feature sparsity s,
/// evaluated exactly as published: 3(1-s)^3 + 3s^2(1-s) + 6s(1-s)^2.
double expected_valid(double s);

/// The polynomial's closed form, 3(1-s).
double expected_valid_closed(double s);

/// DSPs per PE: ceil(e_valid) clamped to [1, queue_count].
int choose_dsp_count(double e_valid, int queue_count);

/// Waiting-queue PE. The shipped cavity patterns give 4- or 6-queue PEs;
/// the simulator itself accepts 1..16 queues for scenario studies.
struct DynMultPEConfig {
    int queue_count = 6;
    int dsp_count = 6;
    int queue_depth = 8;  // total backlog bound; a full PE stalls the producer
};

/// Per-event joint feature/weight hot bits, one bit per waiting queue.
struct SubFilterStream {
    int queue_count = 6;
    std::vector<std::uint32_t> events;

    std::uint64_t popcount() const;
};

/// Random stream at the given sparsity: ceil(q/2) independent feature
/// positions, each nonzero with probability (1-s); an active position
/// enqueues into one of its two bonded queues. Deterministic per seed.
SubFilterStream make_sparsity_stream(int queue_count, std::size_t n_events, double sparsity,
                                     std::uint64_t seed);

struct SimStats {
    std::uint64_t cycles = 0;
    std::uint64_t useful_macs = 0;
    std::uint64_t stall_cycles = 0;
    double efficiency = 0.0;     // useful_macs / (dsp_count * cycles)
    double max_delay_pct = 0.0;  // extra cycles over the zero-stall schedule
};

/// Cycle loop: accept one event when the backlog is below queue_depth
/// (otherwise the front stalls), then dispatch up to dsp_count items from
/// distinct busy queues, round-robin starting after the last-served
/// queue; runs until drained.
SimStats simulate_dyn_pe(const DynMultPEConfig& cfg, const SubFilterStream& stream);

struct LayerSimConfig {
    std::string name;
    int pe_count = 1;
    int queue_count = 6;
    double sparsity = 0.0;
    std::size_t events = 20000;
};

struct LayerComparison {
    std::string name;
    int pe_count = 0;
    int queue_count = 0;
    double sparsity = 0.0;
    int static_dsps_per_pe = 0;
    int dynamic_dsps_per_pe = 0;
    std::int64_t static_dsps = 0;
    std::int64_t dynamic_dsps = 0;
    double static_efficiency = 0.0;
    double dynamic_efficiency = 0.0;
    double dynamic_delay_pct = 0.0;
    std::uint64_t dynamic_cycles = 0;
    std::uint64_t ideal_cycles = 0;
};

struct StaticDynamicReport {
    std::vector<LayerComparison> layers;
    std::int64_t static_total = 0;
    std::int64_t dynamic_total = 0;
    double reduction_pct = 0.0;
    double max_delay_pct = 0.0;        // worst layer
    double aggregate_delay_pct = 0.0;  // cycle-weighted across the pipeline
};

/// Static (dsp = queues) vs Eq.6-guided dynamic allocation, with one
/// simulated PE stream per layer for delay and efficiency.
StaticDynamicReport compare_static_dynamic(const std::vector<LayerSimConfig>& layers,
                                           std::uint64_t seed, int queue_depth = 8);

/// One feature-buffer access in the channel-first spatial schedule.
struct ScmAccess {
    std::uint32_t row = 0;          // feature row h
    std::uint32_t column = 0;       // graph column w
    std::uint32_t out_channel = 0;  // oc
    std::uint32_t line = 0;         // buffer line (kept-channel index)
};

/// Exact nested order: rows, then 25 graph columns, then output channels,
/// consuming every kept buffer line. Length = rows*25*oc*kept_channels.
std::vector<ScmAccess> scm_schedule(int rows, int out_channels, int kept_channels);

struct ThroughputReport {
    double fps = 0.0;
    double peak_ops = 0.0;  // 2 * mac_units * clock
    std::vector<double> utilization;
};

/// Bottleneck law for the layer pipeline: fps = clock / max(stage cycles).
ThroughputReport pipeline_throughput(const std::vector<std::uint64_t>& stage_cycles,
                                     double clock_hz, std::uint64_t mac_units);

}  // namespace hypgcn::sim

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hypgcn/pe_sim.hpp"
#include "hypgcn/prune.hpp"
#include "hypgcn/rfc_codec.hpp"

namespace hypgcn {

/// `key = value` config file with '#' comments.
std::map<std::string, std::string> load_keyvalue_file(const std::string& path);

/// Prune spec file: a global `pattern` and `input_skip`, then
/// `blockN.drop_rate` (and optional `blockN.pattern`) per block.
PruneSpec load_prune_spec(const std::string& path, int block_count);

struct Scenario {
    double clock_hz = 172e6;
    int queue_depth = 8;
    std::size_t events = 20000;
    std::vector<sim::LayerSimConfig> layers;
};

/// Scenario file: `clock_hz`, `queue_depth`, `events`, then per layer
/// `layerN.pes`, `layerN.queues` and one sparsity source — `sparsity`
/// (scalar) or `sparsity_hist` (four comma-separated category fractions,
/// mapped through the category density midpoints).
Scenario load_scenario(const std::string& path);

/// Histogram CSV: header then rows
/// `layer,cat1,cat2,cat3,cat4,vectors,lines_per_vector`.
std::vector<rfc::LayerStorageInput> load_histogram_csv(const std::string& path);

}  // namespace hypgcn

#include "hypgcn/config_io.hpp"

#include <fstream>
#include <sstream>

#include "hypgcn/errors.hpp"

namespace hypgcn {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value '" + v + "' for " + key);
    }
}

long parse_long(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const long n = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value '" + v + "' for " + key);
    }
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean value '" + v + "' for " + key);
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), key));
    return out;
}

}  // namespace

std::map<std::string, std::string> load_keyvalue_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

PruneSpec load_prune_spec(const std::string& path, int block_count) {
    const auto kv = load_keyvalue_file(path);
    PruneSpec spec;
    std::string default_pattern = "all-keep";
    if (auto it = kv.find("pattern"); it != kv.end()) default_pattern = it->second;
    if (auto it = kv.find("input_skip"); it != kv.end())
        spec.input_skip = parse_bool(it->second, "input_skip");

    for (int b = 1; b <= block_count; ++b) {
        BlockPruneSpec bs;
        bs.pattern = default_pattern;
        const std::string prefix = "block" + std::to_string(b) + ".";
        if (auto it = kv.find(prefix + "drop_rate"); it != kv.end())
            bs.drop_rate = parse_double(it->second, prefix + "drop_rate");
        if (auto it = kv.find(prefix + "pattern"); it != kv.end()) bs.pattern = it->second;
        if (bs.drop_rate < 0.0 || bs.drop_rate >= 1.0)
            throw ConfigError(path + ": block " + std::to_string(b) +
                              ": drop rate must be in [0, 1)");
        (void)pattern_by_name(bs.pattern);  // fail fast on unknown names
        spec.blocks.push_back(std::move(bs));
    }
    if (!spec.blocks.empty() && spec.blocks.front().drop_rate != 0.0)
        throw ConfigError(path + ": block 1 must keep drop_rate = 0");

    for (const auto& [key, value] : kv) {
        if (key == "pattern" || key == "input_skip") continue;
        if (key.rfind("block", 0) != 0)
            throw ConfigError(path + ": unknown key '" + key + "'");
        const auto dot = key.find('.');
        if (dot == std::string::npos)
            throw ConfigError(path + ": unknown key '" + key + "'");
        const long b = parse_long(key.substr(5, dot - 5), key);
        if (b < 1 || b > block_count)
            throw ConfigError(path + ": key '" + key + "' names block " + std::to_string(b) +
                              " but the model has " + std::to_string(block_count) + " blocks");
        const std::string field = key.substr(dot + 1);
        if (field != "drop_rate" && field != "pattern")
            throw ConfigError(path + ": unknown key '" + key + "'");
    }
    return spec;
}

Scenario load_scenario(const std::string& path) {
    const auto kv = load_keyvalue_file(path);
    Scenario scenario;
    if (auto it = kv.find("clock_hz"); it != kv.end())
        scenario.clock_hz = parse_double(it->second, "clock_hz");
    if (auto it = kv.find("queue_depth"); it != kv.end())
        scenario.queue_depth = static_cast<int>(parse_long(it->second, "queue_depth"));
    if (auto it = kv.find("events"); it != kv.end())
        scenario.events = static_cast<std::size_t>(parse_long(it->second, "events"));

    // density midpoints of the four sparsity categories
    constexpr double kSparsityMid[4] = {0.875, 0.625, 0.375, 0.125};

    for (int n = 1;; ++n) {
        const std::string prefix = "layer" + std::to_string(n) + ".";
        const auto pes = kv.find(prefix + "pes");
        if (pes == kv.end()) break;
        sim::LayerSimConfig layer;
        layer.name = "layer" + std::to_string(n);
        layer.pe_count = static_cast<int>(parse_long(pes->second, prefix + "pes"));
        if (auto it = kv.find(prefix + "queues"); it != kv.end())
            layer.queue_count = static_cast<int>(parse_long(it->second, prefix + "queues"));
        layer.events = scenario.events;

        const auto scalar = kv.find(prefix + "sparsity");
        const auto hist = kv.find(prefix + "sparsity_hist");
        if (scalar != kv.end()) {
            layer.sparsity = parse_double(scalar->second, prefix + "sparsity");
        } else if (hist != kv.end()) {
            const auto fracs = parse_list(hist->second, prefix + "sparsity_hist");
            if (fracs.size() != 4)
                throw ConfigError(path + ": " + prefix + "sparsity_hist needs four fractions");
            rfc::SparsityHistogram h;
            for (int c = 0; c < 4; ++c) h[c] = fracs[c];
            rfc::validate_histogram(h);
            double s = 0.0;
            for (int c = 0; c < 4; ++c) s += fracs[c] * kSparsityMid[c];
            layer.sparsity = s;
        } else {
            throw ConfigError(path + ": " + prefix +
                              "sparsity or sparsity_hist is required");
        }
        if (layer.sparsity < 0.0 || layer.sparsity > 1.0)
            throw ConfigError(path + ": " + prefix + "sparsity out of [0, 1]");
        if (layer.pe_count < 1)
            throw ConfigError(path + ": " + prefix + "pes must be positive");
        scenario.layers.push_back(std::move(layer));
    }
    if (scenario.layers.empty()) throw ConfigError(path + ": no layers defined");
    return scenario;
}

std::vector<rfc::LayerStorageInput> load_histogram_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open histogram file '" + path + "'");
    std::vector<rfc::LayerStorageInput> layers;
    std::string line;
    bool header = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            if (line.rfind("layer,", 0) == 0) continue;  // header row
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (cells.size() != 7)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected layer,cat1..cat4,vectors,lines_per_vector");
        rfc::LayerStorageInput layer;
        layer.name = cells[0];
        for (int c = 0; c < 4; ++c) layer.hist[c] = parse_double(cells[1 + c], "category");
        rfc::validate_histogram(layer.hist);
        layer.vectors = static_cast<std::size_t>(parse_long(cells[5], "vectors"));
        layer.lines_per_vector = static_cast<std::size_t>(parse_long(cells[6], "lines"));
        layers.push_back(std::move(layer));
    }
    if (layers.empty()) throw ConfigError(path + ": no histogram rows");
    return layers;
}

}  // namespace hypgcn

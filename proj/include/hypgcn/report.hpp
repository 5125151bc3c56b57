#pragma once

#include <string>
#include <vector>

namespace hypgcn {

/// One CSV cell group; every emitted number carries a provenance tag,
/// either "measured" (from a simulated/executed run) or "analytic"
/// (closed-form from dims or configuration).
struct ReportRow {
    std::string metric;
    std::string layer;
    double value = 0.0;
    std::string units;
    std::string provenance;
};

/// Fixed %.9g formatting so equal runs produce byte-identical files.
std::string format_value(double v);

void write_csv(const std::string& path, const std::vector<ReportRow>& rows);

}  // namespace hypgcn

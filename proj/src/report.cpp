#include "hypgcn/report.hpp"

#include <cstdio>
#include <fstream>

#include "hypgcn/errors.hpp"

namespace hypgcn {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<ReportRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "metric,layer,value,units,provenance\n";
    for (const ReportRow& row : rows)
        out << row.metric << ',' << row.layer << ',' << format_value(row.value) << ','
            << row.units << ',' << row.provenance << '\n';
}

}  // namespace hypgcn

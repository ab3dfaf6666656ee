#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "vactof/arrival.hpp"
#include "vactof/errors.hpp"

namespace vactof {

inline constexpr const char* tool_version = "vactof 1.0.0";

/// Fixed-format double rendering so identical runs produce byte-identical files.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

/// CSV with '#'-prefixed metadata lines followed by a header row; UTF-8,
/// comma separated.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw config_error("cannot open output file: " + path);
        out_ << "# " << tool_version << "\n";
    }

    void metadata(const std::string& key, const std::string& value) {
        out_ << "# " << key << " = " << value << "\n";
    }

    void header(const std::vector<std::string>& cols) { line(cols); }
    void row(const std::vector<std::string>& cols) { line(cols); }

    void comment(const std::string& text) { out_ << "# " << text << "\n"; }

private:
    void line(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out_ << ',';
            out_ << cols[i];
        }
        out_ << "\n";
    }

    std::ofstream out_;
};

/// Two-column export of a tabulated arrival distribution.
inline void export_distribution(const ArrivalDistribution& dist, CsvWriter& csv) {
    csv.metadata("mean_seconds", fmt(dist.mean()));
    csv.metadata("std_seconds", fmt(dist.stddev()));
    csv.metadata("mass_captured", fmt(dist.mass_captured()));
    csv.header({"tau_seconds", "density_per_second"});
    const auto& tau = dist.tau_grid();
    const auto& f = dist.density();
    for (std::size_t i = 0; i < tau.size(); ++i) csv.row({fmt(tau[i]), fmt(f[i])});
}

} // namespace vactof

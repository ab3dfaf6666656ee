#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vactof/errors.hpp"
#include "vactof/source.hpp"

namespace vactof {

/// Resolved experiment configuration. Defaults mirror the simulation
/// parameter table: V0 = 65.96 V, V1 = -65.96 V, V2 in {-950, -1000, -1050} V,
/// T = 300 K, L in {0.632, 0.8, 1} m, ion masses {1.007, 14.006, 39.94, 78} amu.
struct RunConfig {
    std::vector<std::string> species_names{"hydrogen", "nitrogen", "argon", "benzene"};

    // Source / geometry
    double V0 = 65.96;
    double V1 = -65.96;
    double default_V2 = -1000.0;
    double d1 = 0.0116;
    double d2 = 0.0100;
    double default_L = 0.6236;
    double x0_mean = std::numeric_limits<double>::quiet_NaN(); // NaN -> d1/2
    double sigma_x = 1.0e-4;
    double sigma_t = 2.0e-9;
    double temperature = 300.0;

    // Sweeps
    std::vector<double> v2_values{-950.0, -1000.0, -1050.0};
    std::vector<double> drift_lengths{0.632, 0.8, 1.0};
    std::vector<double> zero_field_lengths; // empty -> 1..20 m in 1 m steps

    // Wien filter
    double wien_E = 4000.0;   // V/m
    double wien_b = 0.3937;   // m
    double wien_l = 3.45;     // m
    std::vector<double> apertures{1.0e-4, 2.0e-4, 5.0e-4, 1.0e-3, 2.0e-3, 5.0e-3};

    // Link simulation
    long long n_bits = 100000;
    double prior_p1 = 0.5;
    std::uint64_t seed = 42;

    std::string out_dir = ".";
    int quadrature_max_order = 64;

    double resolved_x0_mean() const { return std::isnan(x0_mean) ? 0.5 * d1 : x0_mean; }

    std::vector<double> resolved_zero_field_lengths() const {
        if (!zero_field_lengths.empty()) return zero_field_lengths;
        std::vector<double> v;
        for (int i = 1; i <= 20; ++i) v.push_back(double(i));
        return v;
    }

    SourceConfig source(double V2, double L) const {
        SourceConfig c;
        c.V0 = V0;
        c.V1 = V1;
        c.V2 = V2;
        c.d1 = d1;
        c.d2 = d2;
        c.L = L;
        c.x0_mean = resolved_x0_mean();
        c.sigma_x = sigma_x;
        c.sigma_t = sigma_t;
        c.temperature = temperature;
        c.validate();
        return c;
    }

    SourceConfig default_source() const { return source(default_V2, default_L); }

    SourceConfig zero_field_source(double L) const {
        SourceConfig c = source(default_V2, L); // validate geometry first
        c.V0 = c.V1 = c.V2 = 0.0;
        return c;
    }

    /// One-line record of the resolved configuration for CSV metadata.
    std::string summary() const {
        std::ostringstream os;
        os << "V0=" << V0 << " V1=" << V1 << " V2=" << default_V2 << " d1=" << d1 << " d2=" << d2
           << " L=" << default_L << " x0_mean=" << resolved_x0_mean() << " sigma_x=" << sigma_x
           << " sigma_t=" << sigma_t << " T=" << temperature << " wien_E=" << wien_E
           << " wien_b=" << wien_b << " wien_l=" << wien_l << " n_bits=" << n_bits
           << " prior_p1=" << prior_p1 << " seed=" << seed
           << " quad_order=" << quadrature_max_order;
        return os.str();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw config_error("line " + std::to_string(line) + ": field '" + key +
                           "': not a number: '" + v + "'");
    }
}

inline std::vector<double> parse_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, line, key));
    }
    if (out.empty())
        throw config_error("line " + std::to_string(line) + ": field '" + key + "': empty list");
    return out;
}

inline std::vector<std::string> parse_names(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace detail

/// Flat key-value config file with [section] headers. Unknown keys are
/// rejected with line diagnostics. Flags applied afterwards win over the file,
/// and the file wins over defaults.
inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::string section = "";
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("line " + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string qualified = section.empty() ? key : section + "." + key;

        auto num = [&]() { return detail::parse_double(value, lineno, qualified); };
        auto list = [&]() { return detail::parse_list(value, lineno, qualified); };

        if (qualified == "source.V0") base.V0 = num();
        else if (qualified == "source.V1") base.V1 = num();
        else if (qualified == "source.V2") base.default_V2 = num();
        else if (qualified == "source.d1") base.d1 = num();
        else if (qualified == "source.d2") base.d2 = num();
        else if (qualified == "source.L") base.default_L = num();
        else if (qualified == "source.x0_mean") base.x0_mean = num();
        else if (qualified == "source.sigma_x") base.sigma_x = num();
        else if (qualified == "source.sigma_t") base.sigma_t = num();
        else if (qualified == "source.temperature") base.temperature = num();
        else if (qualified == "sweep.species") base.species_names = detail::parse_names(value);
        else if (qualified == "sweep.V2_values") base.v2_values = list();
        else if (qualified == "sweep.L_values") base.drift_lengths = list();
        else if (qualified == "sweep.zero_field_lengths") base.zero_field_lengths = list();
        else if (qualified == "wien.E") base.wien_E = num();
        else if (qualified == "wien.b") base.wien_b = num();
        else if (qualified == "wien.l") base.wien_l = num();
        else if (qualified == "wien.apertures") base.apertures = list();
        else if (qualified == "sim.n_bits") base.n_bits = static_cast<long long>(num());
        else if (qualified == "sim.prior_p1") base.prior_p1 = num();
        else if (qualified == "sim.seed") base.seed = static_cast<std::uint64_t>(num());
        else if (qualified == "output.dir") base.out_dir = value;
        else
            throw config_error("line " + std::to_string(lineno) + ": unknown field '" + qualified +
                               "'");
    }
    return base;
}

} // namespace vactof

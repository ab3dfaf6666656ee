#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace vactof {

/// Geometry and potentials of the two-field accelerating source plus the
/// ionization spreads. Field magnitudes E1 = (V0 - V1)/d1 and
/// E2 = (V1 - V2)/d2 point toward the receiver; decelerating configurations
/// are rejected at construction. Setting all three voltages to zero selects
/// the field-free (thermal drift) mode.
struct SourceConfig {
    double V0 = 65.96;     // volts, grid G0
    double V1 = -65.96;    // volts, grid G1
    double V2 = -1000.0;   // volts, grid G2
    double d1 = 0.0116;    // m, G0 -> G1
    double d2 = 0.0100;    // m, G1 -> G2
    double L = 0.6236;     // m, drift region
    double x0_mean = 0.0058;  // m, mean ionization distance from G1 (default d1/2)
    double sigma_x = 1.0e-4;  // m, spatial spread of the ionization source
    double sigma_t = 2.0e-9;  // s, temporal spread of the ionization source
    double temperature = 300.0; // K, thermal velocity spread

    SourceConfig() = default;

    SourceConfig(double V0_, double V1_, double V2_, double d1_, double d2_, double L_,
                 double x0_mean_, double sigma_x_, double sigma_t_, double temperature_)
        : V0(V0_), V1(V1_), V2(V2_), d1(d1_), d2(d2_), L(L_),
          x0_mean(x0_mean_), sigma_x(sigma_x_), sigma_t(sigma_t_), temperature(temperature_) {
        validate();
    }

    bool zero_field() const { return V0 == 0.0 && V1 == 0.0 && V2 == 0.0; }

    double e1() const { return (V0 - V1) / d1; } // V/m, magnitude toward receiver
    double e2() const { return (V1 - V2) / d2; }

    // Total accelerating potential seen by an ion born at x0.
    double potential_drop(double x0) const { return x0 * e1() + d2 * e2(); }

    void validate() const {
        if (!(d1 > 0.0) || !(d2 > 0.0) || !(L > 0.0))
            throw std::domain_error("SourceConfig: d1, d2 and L must be positive");
        if (!(temperature > 0.0))
            throw std::domain_error("SourceConfig: temperature must be positive");
        if (sigma_x < 0.0 || sigma_t < 0.0)
            throw std::domain_error("SourceConfig: sigma_x and sigma_t must be non-negative");
        if (!(x0_mean > 0.0) || !(x0_mean < d1))
            throw std::domain_error("SourceConfig: x0_mean must lie strictly inside region 1");
        if (!(x0_mean + 3.0 * sigma_x < d1))
            throw std::domain_error(
                "SourceConfig: x0_mean + 3*sigma_x must stay inside region 1 (got " +
                std::to_string(x0_mean + 3.0 * sigma_x) + " >= d1 = " + std::to_string(d1) + ")");
        if (!zero_field() && (e1() < 0.0 || e2() < 0.0))
            throw std::domain_error(
                "SourceConfig: decelerating field configuration rejected (E1 or E2 < 0)");
    }
};

/// Per-ion initial condition: distance x0 from grid G1, signed initial
/// velocity v0 (positive = toward receiver), ionization time offset t0.
struct InitialState {
    double x0 = 0.0; // m
    double v0 = 0.0; // m/s
    double t0 = 0.0; // s
};

// Table I operating point of the simulated systems.
inline SourceConfig table_defaults() { return SourceConfig{}; }

inline SourceConfig zero_field_config(double drift_length) {
    SourceConfig c;
    c.V0 = c.V1 = c.V2 = 0.0;
    c.L = drift_length;
    return c;
}

} // namespace vactof

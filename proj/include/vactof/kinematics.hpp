#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "vactof/constants.hpp"
#include "vactof/source.hpp"
#include "vactof/species.hpp"

namespace vactof {

/// Standard deviation of the one-dimensional thermal (Maxwell-Boltzmann)
/// velocity component: sqrt(k_B T / m).
inline double thermal_velocity_sigma(const IonSpecies& species, double temperature) {
    if (!(temperature > 0.0))
        throw std::domain_error("thermal_velocity_sigma: temperature must be positive");
    return std::sqrt(constants::boltzmann * temperature / species.mass_kg());
}

/// Final speed after both accelerating regions, from energy conservation:
/// v = sqrt(v0^2 + (2q/m)(x0*E1 + d2*E2)).
inline double accelerated_speed(const IonSpecies& species, const SourceConfig& config,
                                double x0, double v0) {
    if (!(x0 > 0.0) || !(x0 < config.d1))
        throw std::domain_error("accelerated_speed: x0 must lie strictly inside region 1");
    const double two_q_over_m = 2.0 * species.charge_coulombs() / species.mass_kg();
    return std::sqrt(v0 * v0 + two_q_over_m * config.potential_drop(x0));
}

/// Total time of flight in exact SI kinematics: region-1 time (with the
/// turnaround contribution for v0 < 0 arising automatically from
/// t1 = (v1 - v0)/a1), region-2 time, and the field-free drift time L/v2.
/// Returns nullopt ("never arrives") in zero-field mode when v0 <= 0.
inline std::optional<double> time_of_flight(const IonSpecies& species, const SourceConfig& config,
                                            const InitialState& state) {
    if (!(state.x0 > 0.0) || !(state.x0 < config.d1))
        throw std::domain_error("time_of_flight: x0 must lie strictly inside region 1");

    if (config.zero_field()) {
        if (state.v0 <= 0.0) return std::nullopt;
        return state.t0 + (state.x0 + config.d2 + config.L) / state.v0;
    }

    const double q_over_m = species.charge_coulombs() / species.mass_kg();
    const double a1 = q_over_m * config.e1();
    const double a2 = q_over_m * config.e2();

    double t1, v1;
    if (a1 > 0.0) {
        v1 = std::sqrt(state.v0 * state.v0 + 2.0 * a1 * state.x0);
        t1 = (v1 - state.v0) / a1;
    } else {
        if (state.v0 <= 0.0) return std::nullopt; // no restoring field in region 1
        v1 = state.v0;
        t1 = state.x0 / state.v0;
    }

    double t2, v2;
    if (a2 > 0.0) {
        v2 = std::sqrt(v1 * v1 + 2.0 * a2 * config.d2);
        t2 = (v2 - v1) / a2;
    } else {
        if (v1 <= 0.0) return std::nullopt;
        v2 = v1;
        t2 = config.d2 / v1;
    }

    return state.t0 + t1 + t2 + config.L / v2;
}

/// Time of flight evaluated in the rounded-constant Wiley-McLaren convention
/// (mass in amu, energies in eV, distances in cm, times in microseconds, with
/// the 1.02 prefactor). Returned in seconds. Cross-check path only; the
/// production path is the SI form above.
inline std::optional<double> wiley_mclaren_time_of_flight(const IonSpecies& species,
                                                          const SourceConfig& config,
                                                          const InitialState& state) {
    if (config.zero_field()) return time_of_flight(species, config, state);
    if (!(state.x0 > 0.0) || !(state.x0 < config.d1))
        throw std::domain_error("wiley_mclaren_time_of_flight: x0 outside region 1");
    if (!(config.e1() > 0.0) || !(config.e2() > 0.0))
        throw std::domain_error("wiley_mclaren_time_of_flight: requires both fields nonzero");

    const double m = species.mass_amu();
    const double q = static_cast<double>(species.charge_multiple());
    // Initial kinetic energy in eV.
    const double u0 = 0.5 * species.mass_kg() * state.v0 * state.v0 / constants::elementary_charge;
    const double e1_vcm = config.e1() / 100.0; // V/cm
    const double e2_vcm = config.e2() / 100.0;
    const double x0_cm = state.x0 * 100.0;
    const double d2_cm = config.d2 * 100.0;
    const double l_cm = config.L * 100.0;

    const double u1 = u0 + q * x0_cm * e1_vcm; // energy entering region 2, eV
    const double u = u1 + q * d2_cm * e2_vcm;  // total energy entering the drift, eV

    const double k = constants::wiley_mclaren_factor;
    const double sign_v0 = (state.v0 >= 0.0) ? 1.0 : -1.0;
    const double t1 = k * (std::sqrt(2.0 * m * u1) - sign_v0 * std::sqrt(2.0 * m * u0)) / (q * e1_vcm);
    const double t2 = k * std::sqrt(2.0 * m) * (std::sqrt(u) - std::sqrt(u1)) / (q * e2_vcm);
    const double t3 = k * std::sqrt(2.0 * m) * l_cm / (2.0 * std::sqrt(u));

    return state.t0 + (t1 + t2 + t3) * 1.0e-6;
}

} // namespace vactof

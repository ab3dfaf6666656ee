#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "vactof/kinematics.hpp"
#include "vactof/quadrature.hpp"
#include "vactof/source.hpp"
#include "vactof/species.hpp"

namespace vactof {

/// Crossed-field velocity selector: fields, plate geometry and the downstream
/// aperture. kappa = 2*V*d / (l*b*E) must be < 1 for the admitted band to be
/// bounded.
struct WienConfig {
    double E_field;             // V/m between the deflection plates
    double B_field;             // T
    double plate_length_b;      // m
    double center_to_aperture_l; // m
    double aperture_d;          // m
    double accel_voltage_V;     // V, total accelerating potential of the source

    WienConfig(double E, double B, double b, double l, double d, double V)
        : E_field(E), B_field(B), plate_length_b(b), center_to_aperture_l(l),
          aperture_d(d), accel_voltage_V(V) {
        if (!(E > 0.0) || !(B > 0.0) || !(b > 0.0) || !(l > 0.0) || !(d > 0.0) || !(V > 0.0))
            throw config_error_msg("all Wien filter parameters must be positive");
        if (!(kappa() < 1.0))
            throw config_error_msg("aperture admits unbounded band (kappa = " +
                                   std::to_string(kappa()) + " >= 1)");
    }

    double kappa() const { return kappa_of(accel_voltage_V, aperture_d, center_to_aperture_l,
                                            plate_length_b, E_field); }

    static double kappa_of(double V, double d, double l, double b, double E) {
        return 2.0 * V * d / (l * b * E);
    }

    /// Fields tuned so the undeflected velocity equals the mean accelerated
    /// speed sqrt(2qV/m) of the given species: B = E / v_s.
    static WienConfig for_species(const IonSpecies& species, double E, double b, double l,
                                  double d, double accel_voltage) {
        const double v_s = std::sqrt(2.0 * species.charge_coulombs() * accel_voltage /
                                     species.mass_kg());
        return WienConfig(E, E / v_s, b, l, d, accel_voltage);
    }

private:
    static std::invalid_argument config_error_msg(const std::string& what) {
        return std::invalid_argument("WienConfig: " + what);
    }
};

/// Velocity interval admitted by the aperture; 0 < v_low < v_s < v_high.
struct VelocityBand {
    double v_low;
    double v_high;

    bool contains(double v) const { return v >= v_low && v <= v_high; }
    double width() const { return v_high - v_low; }
};

/// Undeflected (selected) velocity E/B from the force balance q v B = q E.
inline double selected_velocity(const WienConfig& config) {
    return config.E_field / config.B_field;
}

/// Net transverse force on an ion crossing the filter at speed v; zero at v_s.
inline double net_filter_force(const IonSpecies& species, const WienConfig& config, double v) {
    return species.charge_coulombs() * (v * config.B_field - config.E_field);
}

/// Radius of the circular path of an off-velocity ion, r = 2V / (E (v/v_s - 1)).
/// Sign conveys the deflection direction; nullopt means undeflected (v == v_s).
inline std::optional<double> deflection_radius(const WienConfig& config, double v) {
    const double v_s = selected_velocity(config);
    if (v == v_s) return std::nullopt;
    return 2.0 * config.accel_voltage_V / (config.E_field * (v / v_s - 1.0));
}

/// Transverse displacement at the aperture plane, d(v) = l b E (v_s - v) / (2 V v).
inline double aperture_displacement(const WienConfig& config, double v) {
    const double v_s = selected_velocity(config);
    return config.center_to_aperture_l * config.plate_length_b * config.E_field *
           (v_s - v) / (2.0 * config.accel_voltage_V * v);
}

/// Inverts |displacement| <= aperture_d: (v_s - v)/v in [-kappa, kappa], i.e.
/// [v_s/(1+kappa), v_s/(1-kappa)].
inline VelocityBand pass_band(const WienConfig& config) {
    const double kappa = config.kappa();
    if (!(kappa < 1.0))
        throw std::invalid_argument("pass_band: aperture admits unbounded band");
    const double v_s = selected_velocity(config);
    return VelocityBand{v_s / (1.0 + kappa), v_s / (1.0 - kappa)};
}

namespace detail {

/// x0 window admitted by the band at fixed v0, for accelerating sources with
/// E1 > 0. The potential drop is linear in x0, c(x0) = alpha + beta x0, so
/// v = sqrt(v0^2 + c(x0)) in band maps to a fixed-width interval in x0.
/// Integrating v0 outermost keeps every inner integrand smooth even when the
/// band is far narrower than the x0-induced speed spread.
struct BandX0Window {
    double lo;
    double hi;
};

inline BandX0Window band_x0_window(const IonSpecies& species, const SourceConfig& config,
                                   double v0, const VelocityBand& band) {
    const double two_q_over_m = 2.0 * species.charge_coulombs() / species.mass_kg();
    const double alpha = two_q_over_m * config.d2 * config.e2();
    const double beta = two_q_over_m * config.e1();
    return {(band.v_low * band.v_low - v0 * v0 - alpha) / beta,
            (band.v_high * band.v_high - v0 * v0 - alpha) / beta};
}

} // namespace detail

enum class PassMode {
    // Integrate the 1-D thermal velocity distribution over the band, as the
    // band selection is written in the source model.
    paper_literal,
    // Integrate the post-acceleration speed distribution induced by the
    // thermal velocity and the spatial spread over the band.
    post_acceleration,
};

/// Probability that an ion's speed falls inside the admitted band.
inline double pass_probability(const IonSpecies& species, const SourceConfig& config,
                               const WienConfig& wien, PassMode mode = PassMode::post_acceleration,
                               int x0_order = 64) {
    const VelocityBand band = pass_band(wien);
    const double sigma_v = thermal_velocity_sigma(species, config.temperature);

    if (mode == PassMode::paper_literal) {
        const double p = normal_cdf(band.v_high / sigma_v) - normal_cdf(band.v_low / sigma_v);
        return std::clamp(p, 0.0, 1.0);
    }

    // Post-acceleration: v = sqrt(v0^2 + c(x0)), c(x0) = (2q/m)(x0 E1 + d2 E2).
    // Given x0, v in band iff |v0| lies in [a, b]; the v0 integral is a
    // difference of Gaussian CDFs, leaving a smooth one-dimensional quadrature
    // over x0.
    const double two_q_over_m = 2.0 * species.charge_coulombs() / species.mass_kg();
    auto band_mass_at = [&](double x0) {
        const double c = two_q_over_m * config.potential_drop(x0);
        const double hi2 = band.v_high * band.v_high - c;
        if (hi2 <= 0.0) return 0.0;
        const double lo2 = band.v_low * band.v_low - c;
        const double b = std::sqrt(hi2);
        const double a = lo2 > 0.0 ? std::sqrt(lo2) : 0.0;
        const double pos = normal_cdf(b / sigma_v) - normal_cdf(a / sigma_v);
        const double neg = normal_cdf(-a / sigma_v) - normal_cdf(-b / sigma_v);
        return pos + neg;
    };

    double p = 0.0;
    if (config.sigma_x == 0.0 || config.e1() == 0.0) {
        // The band-admitted v0 set does not vary with x0 (or x0 is fixed), so
        // the closed form at a single x0 suffices.
        p = band_mass_at(config.x0_mean);
    } else {
        // v0 outermost with the closed-form x0 window (see band_x0_window).
        const QuadRule& rule = gauss_hermite(x0_order);
        const double scale = std::sqrt(2.0) * sigma_v;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double v0 = scale * rule.nodes[i];
            auto win = detail::band_x0_window(species, config, v0, band);
            win.lo = std::max(win.lo, 0.0);
            win.hi = std::min(win.hi, config.d1);
            if (!(win.hi > win.lo)) continue;
            p += rule.weights[i] * (normal_cdf((win.hi - config.x0_mean) / config.sigma_x) -
                                    normal_cdf((win.lo - config.x0_mean) / config.sigma_x));
        }
        p /= std::sqrt(M_PI);
    }
    return std::clamp(p, 0.0, 1.0);
}

} // namespace vactof

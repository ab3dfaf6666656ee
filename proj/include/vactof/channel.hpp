#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "vactof/arrival.hpp"
#include "vactof/wien.hpp"

namespace vactof {

/// Per-operating-point communication metrics. rate_R is always 1/slot_T;
/// info_rate, when present, is mutual_info/slot_T.
struct ChannelReport {
    double slot_T = 0.0;  // s
    double P_d = 0.0;     // missed-detection probability
    double rate_R = 0.0;  // bit/s
    std::optional<double> p_v;          // filter pass probability
    std::optional<double> mutual_info;  // bits per channel use
    std::optional<double> info_rate;    // bit/s
};

/// P_d = 1 - integral of the tabulated density over the detection window.
/// False alarms are structurally impossible in this model.
inline double missed_detection(const ArrivalDistribution& dist, const DetectionWindow& window) {
    if (!(window.length >= 0.0))
        throw std::invalid_argument("missed_detection: window length must be non-negative");
    if (window.length == 0.0) return 1.0;
    const double p = dist.integrate(window.start, window.start + window.length);
    return std::clamp(1.0 - p, 0.0, 1.0);
}

inline double ook_rate(double slot_T) {
    if (!(slot_T > 0.0)) throw std::domain_error("ook_rate: slot length must be positive");
    return 1.0 / slot_T;
}

/// Conditional probabilities p(y|x) of the on-off timing channel with pass
/// probability p_v: a Z-channel (no false alarms).
struct LikelihoodTable {
    double p[2][2]; // p[x][y]

    double operator()(int y, int x) const {
        if ((x != 0 && x != 1) || (y != 0 && y != 1))
            throw std::domain_error("LikelihoodTable: binary indices expected");
        return p[x][y];
    }
};

inline LikelihoodTable likelihood_table(double p_v) {
    if (!(p_v >= 0.0) || !(p_v <= 1.0))
        throw std::domain_error("likelihood_table: p_v must lie in [0, 1]");
    LikelihoodTable t;
    t.p[0][0] = 1.0;
    t.p[0][1] = 0.0;
    t.p[1][1] = p_v;
    t.p[1][0] = 1.0 - p_v;
    return t;
}

/// Binary entropy in bits, with 0 log(1/0) = 0.
inline double binary_entropy(double p) {
    if (!(p >= 0.0) || !(p <= 1.0))
        throw std::domain_error("binary_entropy: p must lie in [0, 1]");
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

/// I(X;Y) = H(Y) - H(Y|X) in bits, with p_Y(1) = p_x1 * p_v and
/// H(Y|X) = p_x1 * H(p_v).
inline double mutual_information(double p_v, double p_x1) {
    if (!(p_v >= 0.0) || !(p_v <= 1.0) || !(p_x1 >= 0.0) || !(p_x1 <= 1.0))
        throw std::domain_error("mutual_information: probabilities must lie in [0, 1]");
    return binary_entropy(p_x1 * p_v) - p_x1 * binary_entropy(p_v);
}

struct PriorResult {
    double p_x1;
    double mutual_info; // bits, at the returned prior
};

/// Capacity-achieving prior of the Z-channel by golden-section search.
inline PriorResult optimal_prior(double p_v) {
    if (!(p_v > 0.0) || !(p_v <= 1.0))
        throw std::domain_error("optimal_prior: p_v must lie in (0, 1]");
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = 1.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = mutual_information(p_v, c);
    double fd = mutual_information(p_v, d);
    while (b - a > 1.0e-9) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = mutual_information(p_v, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = mutual_information(p_v, d);
        }
    }
    const double p = 0.5 * (a + b);
    return {p, mutual_information(p_v, p)};
}

/// Slot length after the velocity gate: the arrival distribution is rebuilt
/// with the ion speed truncated to the Wien pass band, and the detection
/// window is applied to the result.
inline double filtered_slot(const IonSpecies& species, const SourceConfig& config,
                            const WienConfig& wien, const SpreadModel& spread,
                            const QuadratureSpec& quad = {},
                            WindowPolicy policy = WindowPolicy::automatic) {
    const VelocityBand band = pass_band(wien);
    if (!(band.width() > 0.0)) throw std::invalid_argument("filtered_slot: empty pass band");
    const ArrivalDistribution dist =
        build_distribution(species, config, spread, GridSpec{}, quad, band);
    return detection_window(dist, policy).length;
}

/// Assembles a ChannelReport from a slot length and optional filter data.
inline ChannelReport make_report(double slot_T, double P_d,
                                 std::optional<double> p_v = std::nullopt,
                                 std::optional<double> prior_p1 = std::nullopt) {
    ChannelReport r;
    r.slot_T = slot_T;
    r.P_d = P_d;
    r.rate_R = ook_rate(slot_T);
    if (p_v) {
        r.p_v = p_v;
        const double prior = prior_p1.value_or(0.5);
        r.mutual_info = mutual_information(*p_v, prior);
        r.info_rate = *r.mutual_info / slot_T;
    }
    return r;
}

} // namespace vactof

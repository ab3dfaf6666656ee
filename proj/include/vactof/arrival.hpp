#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "vactof/errors.hpp"
#include "vactof/kinematics.hpp"
#include "vactof/quadrature.hpp"
#include "vactof/rng.hpp"
#include "vactof/source.hpp"
#include "vactof/species.hpp"
#include "vactof/wien.hpp"

namespace vactof {

/// Gaussian spread model over the per-ion initial conditions (x0, v0, t0).
/// Geometry and fields still come from the SourceConfig; this struct is the
/// single source of truth for the randomness parameters.
struct SpreadModel {
    double x0_mean;      // m
    double sigma_x;      // m, >= 0
    double v0_mean = 0.0; // m/s
    double sigma_v;      // m/s, > 0
    double t0_mean = 0.0; // s
    double sigma_t;      // s, >= 0

    void validate() const {
        if (!(sigma_v > 0.0)) throw std::domain_error("SpreadModel: sigma_v must be positive");
        if (sigma_x < 0.0 || sigma_t < 0.0)
            throw std::domain_error("SpreadModel: sigma_x and sigma_t must be non-negative");
    }

    static SpreadModel from_temperature(const IonSpecies& species, const SourceConfig& config,
                                        double temperature) {
        SpreadModel s;
        s.x0_mean = config.x0_mean;
        s.sigma_x = config.sigma_x;
        s.sigma_t = config.sigma_t;
        s.sigma_v = thermal_velocity_sigma(species, temperature);
        s.validate();
        return s;
    }

    static SpreadModel from_config(const IonSpecies& species, const SourceConfig& config) {
        return from_temperature(species, config, config.temperature);
    }
};

struct QuadratureSpec {
    int min_order = 16;   // starting Gauss-Hermite order over x0
    int max_order = 64;   // escalation limit (order doubles each step)
    double rel_tol = 1.0e-6; // convergence threshold between successive orders
    int kernel_order = 32;   // Gauss-Legendre order for the inner v0 integral
    double kernel_halfwidth = 12.0; // temporal kernel window in units of sigma_t
    double velocity_halfwidth = 12.0; // v0 clip in units of sigma_v
};

struct GridSpec {
    bool automatic = true;
    double tau_min = 0.0;
    double tau_max = 0.0;
    int points = 4097;
    int pilot_samples = 10000;
    std::uint64_t pilot_seed = 0x5eedf00dULL;

    static GridSpec manual(double lo, double hi, int n = 4097) {
        GridSpec g;
        g.automatic = false;
        g.tau_min = lo;
        g.tau_max = hi;
        g.points = n;
        return g;
    }
};

namespace detail {

/// Time of flight as a strictly decreasing function of v0 at fixed x0, with
/// analytic derivative and a bracketed-Newton inverse. The cancellation-free
/// forms t1 = 2 x0/(v1 + v0) (v0 > 0) and t2 = 2 d2/(v2 + v1) are used.
class TofCurve {
public:
    TofCurve(const IonSpecies& species, const SourceConfig& config, double x0)
        : x0_(x0), d2_(config.d2), L_(config.L), zero_field_(config.zero_field()) {
        if (zero_field_) {
            drift_ = x0 + config.d2 + config.L;
        } else {
            const double q_over_m = species.charge_coulombs() / species.mass_kg();
            a1_ = q_over_m * config.e1();
            a2_ = q_over_m * config.e2();
        }
    }

    // Open lower bound of the admissible v0 domain.
    double domain_min() const {
        return (zero_field_ || a1_ == 0.0) ? 0.0 : -std::numeric_limits<double>::infinity();
    }

    double tof(double v0) const {
        if (zero_field_) return drift_ / v0;
        double v1, t1;
        if (a1_ > 0.0) {
            v1 = std::sqrt(v0 * v0 + 2.0 * a1_ * x0_);
            t1 = v0 > 0.0 ? 2.0 * x0_ / (v1 + v0) : (v1 - v0) / a1_;
        } else {
            v1 = v0;
            t1 = x0_ / v0;
        }
        double v2, t2;
        if (a2_ > 0.0) {
            v2 = std::sqrt(v1 * v1 + 2.0 * a2_ * d2_);
            t2 = 2.0 * d2_ / (v2 + v1);
        } else {
            v2 = v1;
            t2 = d2_ / v1;
        }
        return t1 + t2 + L_ / v2;
    }

    double dtof(double v0) const {
        if (zero_field_) return -drift_ / (v0 * v0);
        double v1, dv1, dt1;
        if (a1_ > 0.0) {
            v1 = std::sqrt(v0 * v0 + 2.0 * a1_ * x0_);
            dv1 = v0 / v1;
            dt1 = (dv1 - 1.0) / a1_;
        } else {
            v1 = v0;
            dv1 = 1.0;
            dt1 = -x0_ / (v0 * v0);
        }
        double v2, dv2, dt2;
        if (a2_ > 0.0) {
            v2 = std::sqrt(v1 * v1 + 2.0 * a2_ * d2_);
            dv2 = v1 * dv1 / v2;
            dt2 = (dv2 - dv1) / a2_;
        } else {
            v2 = v1;
            dv2 = dv1;
            dt2 = -d2_ * dv1 / (v1 * v1);
        }
        return dt1 + dt2 - L_ * dv2 / (v2 * v2);
    }

    /// Solve tof(v0) = t for v0 > domain_min; t must be positive.
    double invert(double t, double guess) const {
        if (!(t > 0.0)) throw std::domain_error("TofCurve::invert: target time must be positive");
        if (zero_field_) return drift_ / t;

        const double dmin = domain_min();
        double v = std::isfinite(guess) ? guess : 1.0;
        if (v <= dmin) v = dmin + 1.0;

        // Bracket the root; tof is strictly decreasing.
        double lo, hi;
        double step = std::max(1.0, 0.5 * std::abs(v));
        if (tof(v) > t) { // need larger v
            lo = v;
            hi = v + step;
            while (tof(hi) > t) {
                lo = hi;
                step *= 2.0;
                hi += step;
                if (hi > 1.0e18) return hi; // beyond any physical velocity
            }
        } else {
            hi = v;
            if (std::isfinite(dmin)) {
                lo = dmin + 0.5 * (v - dmin);
                while (tof(lo) < t) {
                    hi = lo;
                    lo = dmin + 0.5 * (lo - dmin);
                    if (lo - dmin < 1.0e-300) return lo;
                }
            } else {
                lo = v - step;
                while (tof(lo) < t) {
                    hi = lo;
                    step *= 2.0;
                    lo -= step;
                    if (lo < -1.0e18) return lo;
                }
            }
        }

        for (int iter = 0; iter < 200; ++iter) {
            const double f = tof(v) - t;
            if (std::abs(f) <= 1.0e-14 * t) break;
            if (f > 0.0) lo = std::max(lo, v); else hi = std::min(hi, v);
            const double d = dtof(v);
            double vn = v - f / d;
            if (!(vn > lo) || !(vn < hi)) vn = 0.5 * (lo + hi);
            if (hi - lo <= 1.0e-14 * (std::abs(v) + 1.0)) { v = vn; break; }
            v = vn;
        }
        return v;
    }

private:
    double x0_;
    double d2_;
    double L_;
    bool zero_field_;
    double a1_ = 0.0;
    double a2_ = 0.0;
    double drift_ = 0.0;
};

struct WeightedNode {
    double value;
    double weight;
};

inline std::vector<WeightedNode> x0_quadrature(const SourceConfig& config,
                                               const SpreadModel& spread, int order) {
    std::vector<WeightedNode> nodes;
    if (spread.sigma_x == 0.0) {
        nodes.push_back({spread.x0_mean, 1.0});
        return nodes;
    }
    const QuadRule& rule = gauss_hermite(order);
    const double scale = std::sqrt(2.0) * spread.sigma_x;
    nodes.reserve(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x0 = spread.x0_mean + scale * rule.nodes[i];
        if (x0 <= 0.0 || x0 >= config.d1) continue; // outside region 1; negligible mass
        nodes.push_back({x0, rule.weights[i] / std::sqrt(M_PI)});
    }
    return nodes;
}

struct Interval {
    double lo;
    double hi;
    bool empty() const { return !(hi > lo); }
};

/// v0 intervals admitted by the filter band at fixed x0 (both signs), before
/// clipping; without a band, the whole axis.
inline std::vector<Interval> band_v0_intervals(const IonSpecies& species,
                                               const SourceConfig& config, double x0,
                                               const std::optional<VelocityBand>& band) {
    const double inf = std::numeric_limits<double>::infinity();
    if (!band) return {{-inf, inf}};
    const double two_q_over_m = 2.0 * species.charge_coulombs() / species.mass_kg();
    const double c = config.zero_field() ? 0.0 : two_q_over_m * config.potential_drop(x0);
    const double hi2 = band->v_high * band->v_high - c;
    if (hi2 <= 0.0) return {};
    const double lo2 = band->v_low * band->v_low - c;
    const double b = std::sqrt(hi2);
    const double a = lo2 > 0.0 ? std::sqrt(lo2) : 0.0;
    if (a == 0.0) return {{-b, b}};
    return {{-b, -a}, {a, b}};
}

inline Interval intersect(const Interval& u, const Interval& v) {
    return {std::max(u.lo, v.lo), std::min(u.hi, v.hi)};
}

/// Tabulates the arrival-time density (unconditional, i.e. integrating to the
/// captured probability mass) on `taus` for sigma_t > 0, at a given x0
/// quadrature order. The inner v0 integral is taken adaptively over the
/// region where the temporal kernel is active, using the monotone inverse of
/// the time-of-flight curve.
inline std::vector<double> density_kernel_path(const IonSpecies& species,
                                               const SourceConfig& config,
                                               const SpreadModel& spread,
                                               const std::vector<double>& taus, int x0_order,
                                               const std::optional<VelocityBand>& band,
                                               const QuadratureSpec& quad) {
    std::vector<double> out(taus.size(), 0.0);
    const auto x0_nodes = x0_quadrature(config, spread, x0_order);
    const QuadRule& gl = gauss_legendre(quad.kernel_order);
    const double st = spread.sigma_t;
    const double khw = quad.kernel_halfwidth * st;
    const Interval vclip{spread.v0_mean - quad.velocity_halfwidth * spread.sigma_v,
                         spread.v0_mean + quad.velocity_halfwidth * spread.sigma_v};

    for (const auto& xn : x0_nodes) {
        TofCurve curve(species, config, xn.value);
        auto allowed = band_v0_intervals(species, config, xn.value, band);
        const double dmin = curve.domain_min();
        for (auto& iv : allowed) {
            iv = intersect(iv, vclip);
            iv.lo = std::max(iv.lo, std::nextafter(dmin, std::numeric_limits<double>::infinity()));
        }
        if (allowed.empty()) continue;

        double warm_lo = spread.v0_mean, warm_hi = spread.v0_mean;
        for (std::size_t k = 0; k < taus.size(); ++k) {
            const double target = taus[k] - spread.t0_mean; // required mean flight time
            const double t_hi = target + khw;
            if (t_hi <= 0.0) continue; // flight times are positive
            const double t_lo = target - khw;
            const double v_lo = curve.invert(t_hi, warm_lo);
            const double v_hi = t_lo > 0.0 ? curve.invert(t_lo, warm_hi)
                                           : std::numeric_limits<double>::infinity();
            warm_lo = v_lo;
            if (std::isfinite(v_hi)) warm_hi = v_hi;
            const Interval kernel_window{v_lo, v_hi};

            double acc = 0.0;
            for (const auto& base : allowed) {
                const Interval iv = intersect(base, kernel_window);
                if (iv.empty()) continue;
                const double half = 0.5 * (iv.hi - iv.lo);
                const double mid = 0.5 * (iv.hi + iv.lo);
                for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
                    const double v0 = mid + half * gl.nodes[j];
                    const double tt = curve.tof(v0);
                    acc += gl.weights[j] * half *
                           normal_pdf(target, tt, st) *
                           normal_pdf(v0, spread.v0_mean, spread.sigma_v);
                }
            }
            out[k] += xn.weight * acc;
        }
    }
    return out;
}

/// Weighted flight-time atoms from tensor quadrature; used for the sigma_t = 0
/// kernel-free construction.
inline std::vector<WeightedNode> tof_atoms(const IonSpecies& species, const SourceConfig& config,
                                           const SpreadModel& spread, int order,
                                           const std::optional<VelocityBand>& band,
                                           const QuadratureSpec& quad) {
    std::vector<WeightedNode> atoms;
    if (band && spread.sigma_x > 0.0 && !config.zero_field() && config.e1() > 0.0) {
        // v0 outermost with the fixed-width x0 window (see band_x0_window);
        // the x0-outer form would have square-root edges GH cannot resolve
        // when the band is narrower than the x0-induced speed spread. v0 is
        // oversampled: it dominates the flight-time variation and the atom
        // spacing must stay below sigma_t for kernel smoothing. 128 nodes
        // suffice for every species at the reference geometry, and the node
        // solver is only reliable to about that order.
        const QuadRule& gh = gauss_hermite(std::min(4 * order, 128));
        const QuadRule& gl = gauss_legendre(order);
        const double vscale = std::sqrt(2.0) * spread.sigma_v;
        const double xclip = quad.velocity_halfwidth * spread.sigma_x;
        for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
            const double v0 = spread.v0_mean + vscale * gh.nodes[j];
            const double wv = gh.weights[j] / std::sqrt(M_PI);
            auto win = band_x0_window(species, config, v0, *band);
            win.lo = std::max({win.lo, 0.0, spread.x0_mean - xclip});
            win.hi = std::min({win.hi, config.d1, spread.x0_mean + xclip});
            if (!(win.hi > win.lo)) continue;
            const double half = 0.5 * (win.hi - win.lo);
            const double mid = 0.5 * (win.hi + win.lo);
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
                const double x0 = mid + half * gl.nodes[i];
                const auto t = time_of_flight(species, config, {x0, v0, 0.0});
                if (!t) continue;
                atoms.push_back({*t + spread.t0_mean,
                                 wv * gl.weights[i] * half *
                                     normal_pdf(x0, spread.x0_mean, spread.sigma_x)});
            }
        }
        return atoms;
    }
    const auto x0_nodes = x0_quadrature(config, spread, order);
    for (const auto& xn : x0_nodes) {
        if (!band) {
            const QuadRule& gh = gauss_hermite(order);
            const double scale = std::sqrt(2.0) * spread.sigma_v;
            for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
                const double v0 = spread.v0_mean + scale * gh.nodes[j];
                const auto t = time_of_flight(species, config, {xn.value, v0, 0.0});
                if (!t) continue; // never arrives
                atoms.push_back({*t + spread.t0_mean, xn.weight * gh.weights[j] / std::sqrt(M_PI)});
            }
        } else {
            TofCurve curve(species, config, xn.value);
            const double dmin = curve.domain_min();
            const QuadRule& gl = gauss_legendre(order);
            for (auto iv : band_v0_intervals(species, config, xn.value, band)) {
                iv.lo = std::max(iv.lo, std::nextafter(dmin, std::numeric_limits<double>::infinity()));
                iv = intersect(iv, {spread.v0_mean - quad.velocity_halfwidth * spread.sigma_v,
                                    spread.v0_mean + quad.velocity_halfwidth * spread.sigma_v});
                if (iv.empty()) continue;
                const double half = 0.5 * (iv.hi - iv.lo);
                const double mid = 0.5 * (iv.hi + iv.lo);
                for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
                    const double v0 = mid + half * gl.nodes[j];
                    atoms.push_back({curve.tof(v0) + spread.t0_mean,
                                     xn.weight * gl.weights[j] * half *
                                         normal_pdf(v0, spread.v0_mean, spread.sigma_v)});
                }
            }
        }
    }
    return atoms;
}

/// Monotone cubic (Fritsch-Carlson) interpolant evaluation of a CDF built from
/// sorted weighted atoms; returns cell-averaged densities on a uniform grid.
class AtomCdf {
public:
    AtomCdf(std::vector<WeightedNode> atoms) {
        if (atoms.empty())
            throw numeric_error("AtomCdf: quadrature produced no arriving mass");
        std::sort(atoms.begin(), atoms.end(),
                  [](const WeightedNode& a, const WeightedNode& b) { return a.value < b.value; });
        // Merge coincident atoms.
        std::vector<double> t, w;
        for (const auto& a : atoms) {
            if (!t.empty() && a.value - t.back() <= 1.0e-15 * std::abs(a.value)) {
                w.back() += a.weight;
            } else {
                t.push_back(a.value);
                w.push_back(a.weight);
            }
        }
        double cum = 0.0;
        t_.reserve(t.size() + 2);
        c_.reserve(t.size() + 2);
        const double span = std::max(t.back() - t.front(), 1.0e-15 * std::abs(t.back()));
        t_.push_back(t.front() - 1.0e-3 * span);
        c_.push_back(0.0);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t_.push_back(t[i]);
            c_.push_back(cum + 0.5 * w[i]);
            cum += w[i];
        }
        total_ = cum;
        t_.push_back(t.back() + 1.0e-3 * span);
        c_.push_back(cum);
        compute_slopes();
    }

    double total() const { return total_; }

    double cdf(double x) const {
        if (x <= t_.front()) return 0.0;
        if (x >= t_.back()) return total_;
        const auto it = std::upper_bound(t_.begin(), t_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
        const double h = t_[i + 1] - t_[i];
        const double s = (x - t_[i]) / h;
        const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        const double h10 = s * (1.0 - s) * (1.0 - s);
        const double h01 = s * s * (3.0 - 2.0 * s);
        const double h11 = s * s * (s - 1.0);
        return h00 * c_[i] + h10 * h * m_[i] + h01 * c_[i + 1] + h11 * h * m_[i + 1];
    }

private:
    void compute_slopes() {
        const std::size_t n = t_.size();
        std::vector<double> delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (c_[i + 1] - c_[i]) / (t_[i + 1] - t_[i]);
        m_.assign(n, 0.0);
        m_[0] = delta[0];
        m_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) {
                m_[i] = 0.0;
            } else {
                const double w1 = 2.0 * (t_[i + 1] - t_[i]) + (t_[i] - t_[i - 1]);
                const double w2 = (t_[i + 1] - t_[i]) + 2.0 * (t_[i] - t_[i - 1]);
                m_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        // Clamp endpoint slopes for monotonicity.
        for (std::size_t i : {std::size_t(0), n - 1}) {
            const double d = (i == 0) ? delta[0] : delta[n - 2];
            if (m_[i] * d <= 0.0) m_[i] = 0.0;
            else if (std::abs(m_[i]) > 3.0 * std::abs(d)) m_[i] = 3.0 * d;
        }
    }

    std::vector<double> t_, c_, m_;
    double total_ = 0.0;
};

/// Gaussian-kernel smoothing of weighted flight-time atoms:
/// f(tau) = sum w_i N(tau - T_i; sigma_t). Valid once the atom spacing is
/// below sigma_t, which the oversampled v0 rule in tof_atoms guarantees.
inline std::vector<double> density_atom_kernel(std::vector<WeightedNode> atoms, double sigma_t,
                                               const std::vector<double>& taus,
                                               const QuadratureSpec& quad) {
    std::sort(atoms.begin(), atoms.end(),
              [](const WeightedNode& a, const WeightedNode& b) { return a.value < b.value; });
    std::vector<double> out(taus.size(), 0.0);
    const double khw = quad.kernel_halfwidth * sigma_t;
    std::size_t first = 0;
    for (std::size_t k = 0; k < taus.size(); ++k) {
        while (first < atoms.size() && atoms[first].value < taus[k] - khw) ++first;
        for (std::size_t j = first; j < atoms.size() && atoms[j].value <= taus[k] + khw; ++j)
            out[k] += atoms[j].weight * normal_pdf(taus[k], atoms[j].value, sigma_t);
    }
    return out;
}

} // namespace detail

/// Tabulated marginal arrival-time distribution. The density is unconditional:
/// its integral equals the probability that an ion arrives (and, for filtered
/// builds, passes the velocity gate), recorded as mass_captured. Mean, std and
/// quantiles refer to the distribution conditioned on capture.
class ArrivalDistribution {
public:
    ArrivalDistribution(std::vector<double> tau_grid, std::vector<double> density,
                        double mass_captured, bool heavy_tailed)
        : tau_(std::move(tau_grid)), f_(std::move(density)), mass_captured_(mass_captured),
          heavy_tailed_(heavy_tailed) {
        if (tau_.size() != f_.size() || tau_.size() < 2)
            throw std::invalid_argument("ArrivalDistribution: grid/density size mismatch");
        for (std::size_t i = 1; i < tau_.size(); ++i)
            if (!(tau_[i] > tau_[i - 1]))
                throw std::invalid_argument("ArrivalDistribution: grid must be strictly increasing");
        for (auto& v : f_) v = std::max(v, 0.0);
        cum_.assign(tau_.size(), 0.0);
        for (std::size_t i = 1; i < tau_.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * (f_[i] + f_[i - 1]) * (tau_[i] - tau_[i - 1]);
        total_ = cum_.back();
        if (!(total_ > 0.0))
            throw numeric_error("ArrivalDistribution: tabulated density carries no mass");
        if (total_ < 0.995 * mass_captured_ || total_ > 1.005 * mass_captured_) {
            std::ostringstream os;
            os << "ArrivalDistribution: normalization check failed (integral " << total_
               << " vs captured mass " << mass_captured_ << "); refine the tau grid";
            throw numeric_error(os.str());
        }
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 1; i < tau_.size(); ++i) {
            const double dt = tau_[i] - tau_[i - 1];
            m1 += 0.5 * (f_[i] * tau_[i] + f_[i - 1] * tau_[i - 1]) * dt;
            m2 += 0.5 * (f_[i] * tau_[i] * tau_[i] + f_[i - 1] * tau_[i - 1] * tau_[i - 1]) * dt;
        }
        mean_ = m1 / total_;
        const double var = std::max(m2 / total_ - mean_ * mean_, 0.0);
        std_ = std::sqrt(var);
    }

    const std::vector<double>& tau_grid() const { return tau_; }
    const std::vector<double>& density() const { return f_; }
    double mean() const { return mean_; }
    double stddev() const { return std_; }
    double mass_captured() const { return mass_captured_; }
    bool heavy_tailed() const { return heavy_tailed_; }
    double support_min() const { return tau_.front(); }
    double support_max() const { return tau_.back(); }

    double pdf(double tau) const {
        if (tau <= tau_.front() || tau >= tau_.back()) return 0.0;
        const std::size_t i = index_of(tau);
        const double s = (tau - tau_[i]) / (tau_[i + 1] - tau_[i]);
        return f_[i] * (1.0 - s) + f_[i + 1] * s;
    }

    /// CDF of the captured (conditional) distribution, in [0, 1].
    double cdf(double tau) const {
        if (tau <= tau_.front()) return 0.0;
        if (tau >= tau_.back()) return 1.0;
        return integral_to(tau) / total_;
    }

    /// Conditional quantile by monotone interpolation of the cumulative integral.
    double quantile(double p) const {
        if (!(p >= 0.0) || !(p <= 1.0))
            throw std::domain_error("ArrivalDistribution::quantile: p outside [0, 1]");
        const double target = p * total_;
        if (target <= 0.0) return tau_.front();
        if (target >= total_) return tau_.back();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
        std::size_t i = static_cast<std::size_t>(it - cum_.begin());
        i = std::min(std::max<std::size_t>(i, 1), cum_.size() - 1) - 1;
        // Invert the trapezoid segment; fall back to linear when flat.
        const double c0 = cum_[i], f0 = f_[i], f1 = f_[i + 1];
        const double h = tau_[i + 1] - tau_[i];
        const double need = target - c0;
        const double slope = (f1 - f0) / h;
        double ds;
        if (std::abs(slope) * h < 1.0e-12 * (f0 + f1 + 1.0e-300)) {
            ds = f0 > 0.0 ? need / f0 : h;
        } else {
            const double disc = f0 * f0 + 2.0 * slope * need;
            ds = (std::sqrt(std::max(disc, 0.0)) - f0) / slope;
        }
        return tau_[i] + std::clamp(ds, 0.0, h);
    }

    /// Unconditional probability mass on [lo, hi]; the window must lie within
    /// the tabulated support.
    double integrate(double lo, double hi) const {
        if (lo > hi) throw std::invalid_argument("ArrivalDistribution::integrate: lo > hi");
        const double eps = 1.0e-12 * (tau_.back() - tau_.front());
        if (lo < tau_.front() - eps || hi > tau_.back() + eps)
            throw std::invalid_argument(
                "ArrivalDistribution::integrate: window outside tabulated support");
        lo = std::clamp(lo, tau_.front(), tau_.back());
        hi = std::clamp(hi, tau_.front(), tau_.back());
        return integral_to(hi) - integral_to(lo);
    }

    double total_mass() const { return total_; }

private:
    std::size_t index_of(double tau) const {
        const auto it = std::upper_bound(tau_.begin(), tau_.end(), tau);
        std::size_t i = static_cast<std::size_t>(it - tau_.begin());
        return std::min(std::max<std::size_t>(i, 1), tau_.size() - 1) - 1;
    }

    double integral_to(double tau) const {
        if (tau <= tau_.front()) return 0.0;
        if (tau >= tau_.back()) return total_;
        const std::size_t i = index_of(tau);
        const double s = tau - tau_[i];
        const double f_at = pdf(tau);
        return cum_[i] + 0.5 * (f_[i] + f_at) * s;
    }

    std::vector<double> tau_, f_, cum_;
    double mass_captured_;
    bool heavy_tailed_;
    double total_ = 0.0;
    double mean_ = 0.0;
    double std_ = 0.0;
};

enum class FilterHandling {
    absorb,    // out-of-band ions are absorbed (counted as lost)
    condition, // sample conditionally on passing the band
};

/// Draws per-ion arrivals t0 + time_of_flight with x0 truncated to (0, d1) by
/// rejection. Returns nullopt when the ion never arrives (zero-field v0 <= 0)
/// or is absorbed by the velocity filter.
class ArrivalSampler {
public:
    ArrivalSampler(IonSpecies species, SourceConfig config, SpreadModel spread,
                   std::optional<VelocityBand> band = std::nullopt,
                   FilterHandling handling = FilterHandling::absorb)
        : species_(std::move(species)), config_(std::move(config)), spread_(spread),
          band_(band), handling_(handling) {
        spread_.validate();
    }

    std::optional<double> operator()(std::mt19937_64& rng) {
        ++draws_;
        if (handling_ == FilterHandling::condition && band_) return sample_conditional(rng);
        const double x0 = sample_x0(rng);
        std::normal_distribution<double> nv(spread_.v0_mean, spread_.sigma_v);
        const double v0 = nv(rng);
        if (band_) {
            const double speed = config_.zero_field()
                                     ? std::abs(v0)
                                     : accelerated_speed(species_, config_, x0, v0);
            if (!band_->contains(speed)) {
                ++filter_absorbed_;
                return std::nullopt;
            }
        }
        const double t0 = sample_t0(rng);
        const auto t = time_of_flight(species_, config_, {x0, v0, t0});
        if (!t) ++never_arrived_;
        return t;
    }

    long long draws() const { return draws_; }
    long long filter_absorbed() const { return filter_absorbed_; }
    long long never_arrived() const { return never_arrived_; }
    double x0_rejection_rate() const {
        return x0_attempts_ > 0 ? double(x0_rejects_) / double(x0_attempts_) : 0.0;
    }
    bool x0_rejection_warning() const { return x0_rejection_rate() > 0.01; }

private:
    double sample_x0(std::mt19937_64& rng) {
        if (spread_.sigma_x == 0.0) return spread_.x0_mean;
        std::normal_distribution<double> nx(spread_.x0_mean, spread_.sigma_x);
        for (int i = 0; i < 100000; ++i) {
            ++x0_attempts_;
            const double x0 = nx(rng);
            if (x0 > 0.0 && x0 < config_.d1) return x0;
            ++x0_rejects_;
        }
        throw numeric_error("ArrivalSampler: x0 rejection sampling failed to land inside region 1");
    }

    double sample_t0(std::mt19937_64& rng) {
        if (spread_.sigma_t == 0.0) return spread_.t0_mean;
        std::normal_distribution<double> nt(spread_.t0_mean, spread_.sigma_t);
        return nt(rng);
    }

    // Inverse-CDF sampling of v0 restricted to the band-admitted set, used for
    // pilot grids and method-agreement checks where the pass probability may be
    // small.
    std::optional<double> sample_conditional(std::mt19937_64& rng) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int attempt = 0; attempt < 100000; ++attempt) {
            const double x0 = sample_x0(rng);
            auto intervals = detail::band_v0_intervals(species_, config_, x0, band_);
            double weights[2] = {0.0, 0.0};
            double total = 0.0;
            std::size_t n = std::min<std::size_t>(intervals.size(), 2);
            for (std::size_t i = 0; i < n; ++i) {
                if (config_.zero_field()) intervals[i].lo = std::max(intervals[i].lo, 0.0);
                if (intervals[i].empty()) continue;
                weights[i] = normal_cdf((intervals[i].hi - spread_.v0_mean) / spread_.sigma_v) -
                             normal_cdf((intervals[i].lo - spread_.v0_mean) / spread_.sigma_v);
                total += weights[i];
            }
            if (total <= 0.0) continue; // this x0 admits no velocity; retry
            // Accept x0 with probability equal to its admitted v0 mass, so the
            // joint (x0, v0) law is the true band-conditioned distribution.
            if (uni(rng) > total) continue;
            double pick = uni(rng) * total;
            std::size_t chosen = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (pick <= weights[i] || i == n - 1) { chosen = i; break; }
                pick -= weights[i];
            }
            const auto& iv = intervals[chosen];
            const double plo = normal_cdf((iv.lo - spread_.v0_mean) / spread_.sigma_v);
            const double phi = normal_cdf((iv.hi - spread_.v0_mean) / spread_.sigma_v);
            double u = plo + uni(rng) * (phi - plo);
            u = std::clamp(u, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
            const double v0 = spread_.v0_mean + spread_.sigma_v * inverse_normal_cdf(u);
            const double t0 = sample_t0(rng);
            const auto t = time_of_flight(species_, config_, {x0, v0, t0});
            if (t) return t;
            ++never_arrived_;
        }
        throw numeric_error("ArrivalSampler: conditional band sampling failed");
    }

    IonSpecies species_;
    SourceConfig config_;
    SpreadModel spread_;
    std::optional<VelocityBand> band_;
    FilterHandling handling_;
    long long draws_ = 0;
    long long x0_attempts_ = 0;
    long long x0_rejects_ = 0;
    long long filter_absorbed_ = 0;
    long long never_arrived_ = 0;
};

/// One Monte-Carlo arrival draw (convenience wrapper around ArrivalSampler).
inline std::optional<double> sample_arrival(const IonSpecies& species, const SourceConfig& config,
                                            const SpreadModel& spread, std::mt19937_64& rng) {
    ArrivalSampler sampler(species, config, spread);
    return sampler(rng);
}

namespace detail {

/// Analytic captured-mass bookkeeping: P(x0 in region 1) x P(v0 in the
/// admitted, arriving set), with the x0 dependence of the band handled by
/// quadrature.
inline double capture_mass(const IonSpecies& species, const SourceConfig& config,
                           const SpreadModel& spread, const std::optional<VelocityBand>& band) {
    const double px0 =
        spread.sigma_x == 0.0
            ? 1.0
            : normal_cdf((config.d1 - spread.x0_mean) / spread.sigma_x) -
                  normal_cdf((0.0 - spread.x0_mean) / spread.sigma_x);

    auto v_mass_at = [&](double x0) {
        auto intervals = band_v0_intervals(species, config, x0, band);
        double total = 0.0;
        for (auto iv : intervals) {
            if (config.zero_field()) iv.lo = std::max(iv.lo, 0.0);
            if (iv.empty()) continue;
            const double hi_z = (iv.hi - spread.v0_mean) / spread.sigma_v;
            const double lo_z = (iv.lo - spread.v0_mean) / spread.sigma_v;
            total += normal_cdf(std::min(hi_z, 40.0)) - normal_cdf(std::max(lo_z, -40.0));
        }
        return total;
    };

    double pv;
    if (spread.sigma_x == 0.0 || !band || config.zero_field() || config.e1() == 0.0) {
        // Either x0 is fixed or the admitted v0 set does not depend on x0.
        pv = v_mass_at(spread.x0_mean);
    } else {
        // v0 outermost with the closed-form x0 window (see band_x0_window).
        pv = 0.0;
        const QuadRule& rule = gauss_hermite(64);
        const double scale = std::sqrt(2.0) * spread.sigma_v;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double v0 = spread.v0_mean + scale * rule.nodes[i];
            auto win = band_x0_window(species, config, v0, *band);
            win.lo = std::max(win.lo, 0.0);
            win.hi = std::min(win.hi, config.d1);
            if (!(win.hi > win.lo)) continue;
            pv += rule.weights[i] / std::sqrt(M_PI) *
                  (normal_cdf((win.hi - spread.x0_mean) / spread.sigma_x) -
                   normal_cdf((win.lo - spread.x0_mean) / spread.sigma_x));
        }
        return pv; // x0 truncation already folded into the window clipping
    }
    return px0 * pv;
}

/// Zero-field, sigma_t = 0 density has a closed form per x0: tau = D/v0 with
/// D = x0 + d2 + L, so f(tau) = phi(D/tau') * D / tau'^2 on v0 > 0.
inline std::vector<double> density_zero_field_exact(const IonSpecies& species,
                                                    const SourceConfig& config,
                                                    const SpreadModel& spread,
                                                    const std::vector<double>& taus, int x0_order,
                                                    const std::optional<VelocityBand>& band) {
    std::vector<double> out(taus.size(), 0.0);
    const auto x0_nodes = x0_quadrature(config, spread, x0_order);
    for (const auto& xn : x0_nodes) {
        const double D = xn.value + config.d2 + config.L;
        auto intervals = band_v0_intervals(species, config, xn.value, band);
        for (std::size_t k = 0; k < taus.size(); ++k) {
            const double tp = taus[k] - spread.t0_mean;
            if (tp <= 0.0) continue;
            const double v0 = D / tp;
            bool admitted = false;
            for (auto iv : intervals) {
                iv.lo = std::max(iv.lo, 0.0);
                if (!iv.empty() && v0 >= iv.lo && v0 <= iv.hi) { admitted = true; break; }
            }
            if (!admitted) continue;
            out[k] += xn.weight * normal_pdf(v0, spread.v0_mean, spread.sigma_v) * D / (tp * tp);
        }
    }
    return out;
}

} // namespace detail

/// Pointwise marginal arrival-time density by nested Gauss-Hermite quadrature
/// with order doubling. Requires sigma_t > 0; the degenerate case is handled
/// by build_distribution's kernel-free construction.
inline double marginal_pdf(const IonSpecies& species, const SourceConfig& config,
                           const SpreadModel& spread, double tau,
                           const QuadratureSpec& quad = {}) {
    spread.validate();
    if (!(spread.sigma_t > 0.0))
        throw std::invalid_argument(
            "marginal_pdf: sigma_t must be positive (use build_distribution for sigma_t = 0)");
    const std::vector<double> taus{tau};
    const double floor = 1.0e-9 / (std::sqrt(2.0 * M_PI) * spread.sigma_t);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int order = quad.min_order; order <= quad.max_order; order *= 2) {
        const double cur =
            detail::density_kernel_path(species, config, spread, taus, order, std::nullopt, quad)[0];
        if (spread.sigma_x == 0.0) return cur; // single node; nothing to escalate
        if (!std::isnan(prev) && std::abs(cur - prev) <= quad.rel_tol * std::max(std::abs(cur), floor))
            return cur;
        prev = cur;
    }
    std::ostringstream os;
    os << "marginal_pdf: quadrature did not converge at tau = " << tau << " (order "
       << quad.max_order << ", last delta " << std::abs(prev) << ")";
    throw numeric_error(os.str());
}

/// Builds the tabulated arrival distribution, optionally restricted to a Wien
/// pass band (the tabulated density then integrates to the pass probability).
inline ArrivalDistribution build_distribution(const IonSpecies& species, const SourceConfig& config,
                                              const SpreadModel& spread, GridSpec grid_spec = {},
                                              const QuadratureSpec& quad = {},
                                              std::optional<VelocityBand> band = std::nullopt) {
    spread.validate();
    const bool heavy = config.zero_field();

    std::vector<double> grid;
    if (grid_spec.automatic && band) {
        // Band builds bound the support from the quadrature atoms directly; a
        // conditional Monte-Carlo pilot is wasteful when the pass probability
        // is small.
        const auto atoms = detail::tof_atoms(species, config, spread, 32, band, quad);
        if (atoms.empty())
            throw numeric_error("build_distribution: velocity band admits no arriving mass");
        double lo = atoms.front().value, hi = atoms.front().value;
        for (const auto& a : atoms) {
            lo = std::min(lo, a.value);
            hi = std::max(hi, a.value);
        }
        const double pad =
            std::max(quad.kernel_halfwidth * spread.sigma_t + 0.05 * (hi - lo), 1.0e-15);
        lo -= pad;
        hi += pad;
        grid.resize(grid_spec.points);
        for (int i = 0; i < grid_spec.points; ++i)
            grid[i] = lo + (hi - lo) * i / double(grid_spec.points - 1);
    } else if (grid_spec.automatic) {
        // Monte-Carlo pilot to locate the support.
        ArrivalSampler pilot(species, config, spread, band, FilterHandling::condition);
        auto rng = make_stream(grid_spec.pilot_seed, StreamPurpose::pilot);
        std::vector<double> samples;
        samples.reserve(grid_spec.pilot_samples);
        long long attempts = 0;
        while (static_cast<int>(samples.size()) < grid_spec.pilot_samples) {
            if (++attempts > 100LL * grid_spec.pilot_samples)
                throw numeric_error("build_distribution: pilot sampling starved (no arrivals)");
            const auto t = pilot(rng);
            if (t) samples.push_back(*t);
        }
        std::sort(samples.begin(), samples.end());
        double lo, hi;
        if (heavy) {
            const auto q = [&](double p) {
                return samples[std::min(samples.size() - 1,
                                        static_cast<std::size_t>(p * samples.size()))];
            };
            lo = std::max(1.0e-300, 0.5 * q(0.0002));
            hi = 1.5 * q(0.9998);
        } else {
            double m = 0.0;
            for (double s : samples) m += s;
            m /= samples.size();
            double v = 0.0;
            for (double s : samples) v += (s - m) * (s - m);
            const double sd = std::sqrt(v / samples.size());
            const double width = std::max({8.0 * sd, 1.0e-12 * std::abs(m), 1.0e-15});
            lo = m - width;
            hi = m + width;
        }
        grid.resize(grid_spec.points);
        if (heavy) {
            // Log spacing: the 1/v0 map concentrates the peak near the lower
            // end while the tail spans decades.
            const double llo = std::log(lo), lhi = std::log(hi);
            for (int i = 0; i < grid_spec.points; ++i)
                grid[i] = std::exp(llo + (lhi - llo) * i / double(grid_spec.points - 1));
        } else {
            for (int i = 0; i < grid_spec.points; ++i)
                grid[i] = lo + (hi - lo) * i / double(grid_spec.points - 1);
        }
    } else {
        if (!(grid_spec.tau_max > grid_spec.tau_min) || grid_spec.points < 2)
            throw std::invalid_argument("build_distribution: invalid manual grid");
        grid.resize(grid_spec.points);
        for (int i = 0; i < grid_spec.points; ++i)
            grid[i] = grid_spec.tau_min +
                      (grid_spec.tau_max - grid_spec.tau_min) * i / double(grid_spec.points - 1);
    }

    const double mass = detail::capture_mass(species, config, spread, band);

    auto density_at_order = [&](int order) -> std::vector<double> {
        if (spread.sigma_t > 0.0) {
            if (band)
                return detail::density_atom_kernel(
                    detail::tof_atoms(species, config, spread, order, band, quad),
                    spread.sigma_t, grid, quad);
            return detail::density_kernel_path(species, config, spread, grid, order, band, quad);
        }
        if (heavy)
            return detail::density_zero_field_exact(species, config, spread, grid, order, band);
        // Kernel-free construction: cell-averaged derivative of the monotone
        // CDF interpolant through the quadrature atoms.
        detail::AtomCdf cdf(detail::tof_atoms(species, config, spread, order, band, quad));
        std::vector<double> out(grid.size(), 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double h = i + 1 < grid.size() ? grid[i + 1] - grid[i] : grid[i] - grid[i - 1];
            out[i] = (cdf.cdf(grid[i] + 0.5 * h) - cdf.cdf(grid[i] - 0.5 * h)) / h;
        }
        return out;
    };

    std::vector<double> best = density_at_order(quad.min_order);
    // With sigma_t > 0 the only order dependence is the x0 rule, so a point
    // source needs no escalation.
    bool converged = spread.sigma_x == 0.0 && spread.sigma_t > 0.0;
    double worst = 0.0;
    // For atom-based constructions (sigma_t = 0, or any band build) the
    // successive-order comparison is made on the implied CDF rather than
    // pointwise densities: atom positions shift between orders, which perturbs
    // the density pointwise but not the carried mass.
    const bool compare_cdf = !(spread.sigma_t > 0.0) || band.has_value();
    const double tol = compare_cdf ? std::max(quad.rel_tol, 1.0e-4) : quad.rel_tol;
    for (int order = quad.min_order * 2; order <= quad.max_order && !converged; order *= 2) {
        const std::vector<double> next = density_at_order(order);
        double peak = 0.0;
        for (double v : next) peak = std::max(peak, v);
        worst = 0.0;
        if (compare_cdf) {
            double ca = 0.0, cb = 0.0;
            for (std::size_t i = 1; i < next.size(); ++i) {
                const double h = grid[i] - grid[i - 1];
                ca += 0.5 * (best[i] + best[i - 1]) * h;
                cb += 0.5 * (next[i] + next[i - 1]) * h;
                worst = std::max(worst, std::abs(ca - cb));
            }
            converged = worst <= tol * std::max(mass, 1.0e-300);
        } else {
            for (std::size_t i = 0; i < next.size(); ++i)
                worst = std::max(worst, std::abs(next[i] - best[i]));
            converged = worst <= tol * std::max(peak, 1.0e-300);
        }
        best = std::move(next);
    }
    if (!converged) {
        std::ostringstream os;
        os << "build_distribution: quadrature did not converge (max order " << quad.max_order
           << ", residual " << worst << "); increase the order or refine the grid";
        throw numeric_error(os.str());
    }

    return ArrivalDistribution(std::move(grid), std::move(best), mass, heavy);
}

struct DetectionWindow {
    double start;  // s
    double length; // s
};

enum class WindowPolicy {
    six_sigma,    // [mean - 3 sigma, mean + 3 sigma]
    quantile_099, // central interval of captured mass 0.99
    automatic,    // six_sigma unless the distribution is heavy-tailed
};

/// Detection window for one slot. Heavy-tailed (zero-field) distributions
/// force the quantile policy regardless of the request.
inline DetectionWindow detection_window(const ArrivalDistribution& dist,
                                        WindowPolicy policy = WindowPolicy::automatic) {
    const bool quantile = dist.heavy_tailed() || policy == WindowPolicy::quantile_099;
    if (quantile) {
        const double lo = dist.quantile(0.005);
        const double hi = dist.quantile(0.995);
        return {lo, hi - lo};
    }
    return {dist.mean() - 3.0 * dist.stddev(), 6.0 * dist.stddev()};
}

} // namespace vactof

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vactof/arrival.hpp"
#include "vactof/rng.hpp"
#include "vactof/wien.hpp"

namespace vactof {

enum class LinkMode { unfiltered, wien_filtered };

/// Monte-Carlo link configuration. The receiver opens its window
/// window_start after the slot's release instant; an ion whose propagation
/// delay falls outside (window_start, window_start + slot_T) is a miss, and
/// late ions are removed, never credited to later slots.
struct SimConfig {
    long long n_bits = 0;
    double prior_p1 = 0.5;
    std::uint64_t seed = 42;
    double slot_T = 0.0;       // s
    double window_start = 0.0; // s, receiver offset relative to release
    LinkMode mode = LinkMode::unfiltered;

    void validate() const {
        if (n_bits <= 0) throw std::invalid_argument("SimConfig: n_bits must be positive");
        if (!(prior_p1 >= 0.0) || !(prior_p1 <= 1.0))
            throw std::invalid_argument("SimConfig: prior_p1 must lie in [0, 1]");
        if (!(slot_T > 0.0)) throw std::invalid_argument("SimConfig: slot_T must be positive");
    }
};

struct TranscriptRow {
    long long slot_index;
    int bit;
    double release_time;                 // s
    std::optional<double> arrival_time;  // s; nullopt = never arrived / absorbed
    bool detected;
};

struct SimResult {
    long long sent_ones = 0;
    long long detected_ones = 0;
    long long filter_absorbed = 0; // subset of the misses, for p_v bookkeeping
    double empirical_Pd = 0.0;
    double empirical_rate = 0.0;         // bit/s, = 1/slot_T under the removal rule
    double confidence_halfwidth = 0.0;   // 95% binomial on empirical_Pd
};

/// Runs the OOK bitstream simulation. Each slot derives its own RNG substreams
/// from the root seed, so results are independent of evaluation order and a
/// fixed seed reproduces the transcript bit for bit.
inline SimResult run_link(const IonSpecies& species, const SourceConfig& config,
                          const SpreadModel& spread, const std::optional<WienConfig>& wien,
                          const SimConfig& sim, std::vector<TranscriptRow>* transcript = nullptr) {
    sim.validate();
    std::optional<VelocityBand> band;
    if (sim.mode == LinkMode::wien_filtered) {
        if (!wien) throw std::invalid_argument("run_link: wien-filtered mode needs a WienConfig");
        band = pass_band(*wien);
    }

    SimResult result;
    if (transcript) transcript->reserve(sim.n_bits);

    for (long long slot = 0; slot < sim.n_bits; ++slot) {
        auto bit_rng = make_stream(sim.seed, StreamPurpose::bits, slot);
        const int bit =
            std::uniform_real_distribution<double>(0.0, 1.0)(bit_rng) < sim.prior_p1 ? 1 : 0;
        const double release = slot * sim.slot_T;
        if (bit == 0) {
            // 0-bits release nothing; false alarms are impossible.
            if (transcript) transcript->push_back({slot, 0, release, std::nullopt, false});
            continue;
        }
        ++result.sent_ones;

        auto pos_rng = make_stream(sim.seed, StreamPurpose::position, slot);
        auto vel_rng = make_stream(sim.seed, StreamPurpose::velocity, slot);
        auto t0_rng = make_stream(sim.seed, StreamPurpose::ionization_time, slot);

        double x0 = spread.x0_mean;
        if (spread.sigma_x > 0.0) {
            std::normal_distribution<double> nx(spread.x0_mean, spread.sigma_x);
            bool ok = false;
            for (int i = 0; i < 100000; ++i) {
                x0 = nx(pos_rng);
                if (x0 > 0.0 && x0 < config.d1) { ok = true; break; }
            }
            if (!ok) throw numeric_error("run_link: x0 rejection sampling failed");
        }
        const double v0 =
            std::normal_distribution<double>(spread.v0_mean, spread.sigma_v)(vel_rng);
        const double t0 =
            spread.sigma_t > 0.0
                ? std::normal_distribution<double>(spread.t0_mean, spread.sigma_t)(t0_rng)
                : spread.t0_mean;

        std::optional<double> delay;
        bool absorbed = false;
        if (band) {
            const double speed = config.zero_field()
                                     ? std::abs(v0)
                                     : accelerated_speed(species, config, x0, v0);
            absorbed = !band->contains(speed);
        }
        if (!absorbed) delay = time_of_flight(species, config, {x0, v0, t0});
        if (absorbed) ++result.filter_absorbed;

        bool detected = false;
        if (delay) {
            const double offset = *delay - sim.window_start;
            detected = offset > 0.0 && offset < sim.slot_T;
        }
        if (detected) ++result.detected_ones;
        if (transcript)
            transcript->push_back({slot, 1, release,
                                   delay ? std::optional<double>(release + *delay) : std::nullopt,
                                   detected});
    }

    if (result.sent_ones > 0) {
        result.empirical_Pd =
            1.0 - double(result.detected_ones) / double(result.sent_ones);
        result.confidence_halfwidth =
            1.96 * std::sqrt(std::max(result.empirical_Pd * (1.0 - result.empirical_Pd), 0.0) /
                             double(result.sent_ones));
    }
    // Throughput identity under the removal rule: n_bits slots of length T.
    result.empirical_rate = double(sim.n_bits) / (double(sim.n_bits) * sim.slot_T);
    return result;
}

} // namespace vactof

#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "vactof/channel.hpp"
#include "vactof/csv.hpp"
#include "vactof/link.hpp"
#include "vactof/runconfig.hpp"

namespace vactof {

namespace detail {

inline std::string out_path(const RunConfig& run, const std::string& name) {
    std::filesystem::create_directories(run.out_dir);
    return (std::filesystem::path(run.out_dir) / name).string();
}

inline void common_metadata(CsvWriter& csv, const RunConfig& run) {
    csv.metadata("config", run.summary());
    csv.metadata("seed", fmt(run.seed));
}

inline QuadratureSpec quad_spec(const RunConfig& run) {
    QuadratureSpec q;
    q.max_order = run.quadrature_max_order;
    return q;
}

} // namespace detail

/// Arrival-time distributions over the (species, V2, L) grid: one density CSV
/// per point plus a summary table of means, spreads and detection windows.
inline void cmd_tof_dist(const RunConfig& run) {
    const QuadratureSpec quad = detail::quad_spec(run);
    CsvWriter summary(detail::out_path(run, "tof_summary.csv"));
    detail::common_metadata(summary, run);
    summary.metadata("units", "V2 volts, L meters, times seconds");
    summary.header({"species", "V2_volts", "L_meters", "mean_s", "std_s", "window_start_s",
                    "window_length_s"});
    for (const auto& name : run.species_names) {
        const IonSpecies ion = species::by_name(name);
        for (double V2 : run.v2_values) {
            for (double L : run.drift_lengths) {
                const SourceConfig cfg = run.source(V2, L);
                const SpreadModel spread = SpreadModel::from_config(ion, cfg);
                const ArrivalDistribution dist =
                    build_distribution(ion, cfg, spread, GridSpec{}, quad);
                const DetectionWindow win = detection_window(dist);

                std::ostringstream fname;
                fname << "tofdist_" << name << "_V2_" << fmt(V2) << "_L_" << fmt(L) << ".csv";
                CsvWriter dcsv(detail::out_path(run, fname.str()));
                detail::common_metadata(dcsv, run);
                dcsv.metadata("species", name);
                dcsv.metadata("V2_volts", fmt(V2));
                dcsv.metadata("L_meters", fmt(L));
                export_distribution(dist, dcsv);

                summary.row({name, fmt(V2), fmt(L), fmt(dist.mean()), fmt(dist.stddev()),
                             fmt(win.start), fmt(win.length)});
            }
        }
    }
}

/// Data-rate sweeps: secondary-voltage and drift-length sweeps of R = 1/T,
/// plus the field-free thermal-drift baseline (0.99-quantile window policy,
/// forced by the heavy 1/v0 tail).
inline void cmd_rate_sweep(const RunConfig& run) {
    const QuadratureSpec quad = detail::quad_spec(run);
    CsvWriter csv(detail::out_path(run, "rate_sweep.csv"));
    detail::common_metadata(csv, run);
    csv.metadata("units", "V2 volts, L meters, slot_T seconds, rate bits/second");
    csv.metadata("zero_field_window_policy", "quantile-0.99");
    csv.header({"species", "sweep", "V2_volts", "L_meters", "slot_T_s", "rate_bits_per_s"});

    for (const auto& name : run.species_names) {
        const IonSpecies ion = species::by_name(name);
        for (double V2 : run.v2_values) {
            const SourceConfig cfg = run.source(V2, run.default_L);
            const SpreadModel spread = SpreadModel::from_config(ion, cfg);
            const auto dist = build_distribution(ion, cfg, spread, GridSpec{}, quad);
            const double T = detection_window(dist).length;
            csv.row({name, "V2", fmt(V2), fmt(run.default_L), fmt(T), fmt(ook_rate(T))});
        }
        for (double L : run.drift_lengths) {
            const SourceConfig cfg = run.source(run.default_V2, L);
            const SpreadModel spread = SpreadModel::from_config(ion, cfg);
            const auto dist = build_distribution(ion, cfg, spread, GridSpec{}, quad);
            const double T = detection_window(dist).length;
            csv.row({name, "L", fmt(run.default_V2), fmt(L), fmt(T), fmt(ook_rate(T))});
        }
        for (double L : run.resolved_zero_field_lengths()) {
            const SourceConfig cfg = run.zero_field_source(L);
            const SpreadModel spread = SpreadModel::from_config(ion, cfg);
            const auto dist = build_distribution(ion, cfg, spread, GridSpec{}, quad);
            const double T = detection_window(dist, WindowPolicy::quantile_099).length;
            csv.row({name, "zero-field", "0", fmt(L), fmt(T), fmt(ook_rate(T))});
        }
    }
}

/// Wien-filter sweep over aperture sizes: pass band, pass probability in both
/// modes, filtered slot length, rate and information-theoretic rate.
inline void cmd_wien(const RunConfig& run, const std::string& mode_filter = "both") {
    const QuadratureSpec quad = detail::quad_spec(run);
    CsvWriter csv(detail::out_path(run, "wien_sweep.csv"));
    detail::common_metadata(csv, run);
    csv.metadata("units",
                 "aperture meters, slot_T seconds, rates bits/second, mutual_info bits");
    csv.header({"species", "aperture_m", "kappa", "mode", "p_v", "slot_T_s", "rate_bits_per_s",
                "mutual_info_bits", "info_rate_bits_per_s", "status"});

    for (const auto& name : run.species_names) {
        const IonSpecies ion = species::by_name(name);
        const SourceConfig cfg = run.default_source();
        const SpreadModel spread = SpreadModel::from_config(ion, cfg);
        const double accel_V = cfg.potential_drop(cfg.x0_mean);
        for (double d : run.apertures) {
            const double kappa =
                WienConfig::kappa_of(accel_V, d, run.wien_l, run.wien_b, run.wien_E);
            if (kappa >= 1.0) {
                csv.row({name, fmt(d), fmt(kappa), "-", "-", "-", "-", "-", "-",
                         "skipped_unbounded_band"});
                continue;
            }
            const WienConfig wien = WienConfig::for_species(ion, run.wien_E, run.wien_b,
                                                            run.wien_l, d, accel_V);
            const double T = filtered_slot(ion, cfg, wien, spread, quad);
            const double R = ook_rate(T);
            for (PassMode mode : {PassMode::paper_literal, PassMode::post_acceleration}) {
                const std::string mode_name =
                    mode == PassMode::paper_literal ? "paper-literal" : "post-acceleration";
                if (mode_filter != "both" && mode_filter != mode_name) continue;
                const double p_v = pass_probability(ion, cfg, wien, mode);
                const double I = mutual_information(p_v, run.prior_p1);
                csv.row({name, fmt(d), fmt(kappa), mode_name, fmt(p_v), fmt(T), fmt(R), fmt(I),
                         fmt(I / T), "ok"});
            }
        }
    }
}

/// Monte-Carlo link validation: empirical miss rate against the closed-form
/// missed-detection probability with a binomial agreement flag.
inline void cmd_link_sim(const RunConfig& run, bool write_transcript = false,
                         const std::string& mode = "unfiltered") {
    const QuadratureSpec quad = detail::quad_spec(run);
    if (run.n_bits <= 0) throw config_error("link-sim: n_bits must be positive");
    const bool filtered = mode == "wien-filtered";
    CsvWriter csv(detail::out_path(run, "link_sim.csv"));
    detail::common_metadata(csv, run);
    csv.metadata("mode", mode);
    csv.header({"species", "n_bits", "seed", "slot_T_s", "window_start_s", "Pd_closed_form",
                "Pd_empirical", "abs_diff", "tolerance_3se", "agreement"});

    for (const auto& name : run.species_names) {
        const IonSpecies ion = species::by_name(name);
        const SourceConfig cfg = run.default_source();
        const SpreadModel spread = SpreadModel::from_config(ion, cfg);

        std::optional<WienConfig> wien;
        std::optional<VelocityBand> band;
        if (filtered) {
            if (run.apertures.empty()) throw config_error("link-sim: no aperture configured");
            wien = WienConfig::for_species(ion, run.wien_E, run.wien_b, run.wien_l,
                                           run.apertures.front(),
                                           cfg.potential_drop(cfg.x0_mean));
            band = pass_band(*wien);
        }
        // With a band, the tabulated density integrates to the pass
        // probability, so the closed-form miss below already composes filter
        // absorption with the timing window.
        const auto dist = build_distribution(ion, cfg, spread, GridSpec{}, quad, band);
        const DetectionWindow win = detection_window(dist);
        const double pd = missed_detection(dist, win);

        SimConfig sim;
        sim.n_bits = run.n_bits;
        sim.prior_p1 = run.prior_p1;
        sim.seed = run.seed;
        sim.slot_T = win.length;
        sim.window_start = win.start;
        sim.mode = filtered ? LinkMode::wien_filtered : LinkMode::unfiltered;

        std::vector<TranscriptRow> transcript;
        const SimResult res =
            run_link(ion, cfg, spread, wien, sim, write_transcript ? &transcript : nullptr);
        const double se =
            res.sent_ones > 0
                ? std::sqrt(std::max(pd * (1.0 - pd), 1.0 / double(res.sent_ones)) /
                            double(res.sent_ones))
                : 0.0;
        const double tol = 3.0 * se;
        const double diff = std::abs(res.empirical_Pd - pd);
        csv.row({name, fmt(run.n_bits), fmt(run.seed), fmt(sim.slot_T), fmt(sim.window_start),
                 fmt(pd), fmt(res.empirical_Pd), fmt(diff), fmt(tol),
                 diff <= tol ? "pass" : "fail"});

        if (write_transcript) {
            CsvWriter tcsv(detail::out_path(run, "transcript_" + name + ".csv"));
            detail::common_metadata(tcsv, run);
            tcsv.header({"slot_index", "bit", "release_time_s", "arrival_time_s", "detected"});
            for (const auto& row : transcript)
                tcsv.row({fmt(row.slot_index), fmt(row.bit), fmt(row.release_time),
                          row.arrival_time ? fmt(*row.arrival_time) : std::string("NONE"),
                          row.detected ? "1" : "0"});
        }
    }
}

} // namespace vactof

// Command-line front end: tof-dist, rate-sweep, wien and link-sim experiment
// harnesses emitting CSV tables with reproducibility metadata.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numeric non-convergence.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vactof/vactof.hpp"

namespace {

struct CommonOpts {
    std::string config_file;
    std::string out_dir;
    long long seed = -1;
    int quadrature_order = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "flat key-value config file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "root RNG seed");
    cmd->add_option("--quadrature-order", opts.quadrature_order,
                    "maximum Gauss-Hermite order (default 64)");
}

vactof::RunConfig resolve(const CommonOpts& opts) {
    vactof::RunConfig run;
    if (!opts.config_file.empty()) run = vactof::load_run_config(opts.config_file, run);
    // Flags win over the file.
    if (!opts.out_dir.empty()) run.out_dir = opts.out_dir;
    if (opts.seed >= 0) run.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.quadrature_order > 0) run.quadrature_max_order = opts.quadrature_order;
    return run;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vacuum drift-tube molecular communication simulator"};
    app.require_subcommand(1);

    CommonOpts tof_opts, rate_opts, wien_opts, link_opts;
    std::string wien_mode = "both";
    std::string link_mode = "unfiltered";
    bool transcript = false;

    auto* tof = app.add_subcommand("tof-dist", "arrival-time distributions over (species, V2, L)");
    add_common(tof, tof_opts);
    auto* rate = app.add_subcommand("rate-sweep", "data-rate sweeps incl. zero-field baseline");
    add_common(rate, rate_opts);
    auto* wien = app.add_subcommand("wien", "Wien-filter aperture sweep");
    add_common(wien, wien_opts);
    wien->add_option("--mode", wien_mode, "pass-probability mode: both|paper-literal|post-acceleration")
        ->check(CLI::IsMember({"both", "paper-literal", "post-acceleration"}));
    auto* link = app.add_subcommand("link-sim", "Monte-Carlo OOK link validation");
    add_common(link, link_opts);
    link->add_option("--mode", link_mode, "unfiltered|wien-filtered")
        ->check(CLI::IsMember({"unfiltered", "wien-filtered"}));
    link->add_flag("--transcript", transcript, "also write per-slot transcript CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (tof->parsed()) vactof::cmd_tof_dist(resolve(tof_opts));
        if (rate->parsed()) vactof::cmd_rate_sweep(resolve(rate_opts));
        if (wien->parsed()) vactof::cmd_wien(resolve(wien_opts), wien_mode);
        if (link->parsed()) vactof::cmd_link_sim(resolve(link_opts), transcript, link_mode);
    } catch (const vactof::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const vactof::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Command-line front end: Monte-Carlo runs from a config file, and
// pilot/guard overhead tables for the frame arrangements.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "otfs/otfs.hpp"

namespace {

int run_command(const std::string& config_path, std::uint64_t seed, bool seed_set,
                const std::string& out_path, int threads) {
    otfs::SimConfig cfg = otfs::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (threads > 0) cfg.threads = threads;
    cfg.validate();

    const auto rows = otfs::run_experiment(cfg);
    if (out_path.empty()) {
        std::cout << otfs::csv_string(rows);
    } else {
        otfs::write_csv(rows, out_path);
        std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
    }
    return 0;
}

int layout_command(const std::string& scheme_arg, int n, int m, int l_tau, int k_nu, int k_hat,
                   int streams, int pilot_k, int pilot_l) {
    const otfs::GridDims dims(n, m);
    std::vector<otfs::Scheme> schemes;
    if (scheme_arg == "all") {
        schemes = {otfs::Scheme::SisoInteger,       otfs::Scheme::SisoFracFull,
                   otfs::Scheme::SisoFracReduced,   otfs::Scheme::Mimo,
                   otfs::Scheme::MultiUserUplink,   otfs::Scheme::MultiUserDownlink};
    } else {
        schemes = {otfs::scheme_from_name(scheme_arg)};
    }
    for (otfs::Scheme s : schemes) {
        const bool multi = s == otfs::Scheme::Mimo || s == otfs::Scheme::MultiUserUplink ||
                           s == otfs::Scheme::MultiUserDownlink;
        const auto layout = otfs::build_layout(s, dims, {pilot_k, pilot_l}, l_tau, k_nu, k_hat,
                                               multi ? streams : 1);
        std::cout << otfs::format_summary(layout) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delay-Doppler modem laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::uint64_t seed = 0;
    int threads = 0;
    auto* run = app.add_subcommand("run", "run a Monte-Carlo experiment, emit CSV");
    run->add_option("--config", config_path, "key=value config file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_path, "CSV output path (default: stdout)");
    run->add_option("--threads", threads, "worker threads (default: hardware)");

    std::string scheme = "all";
    int n = 128, m = 512, l_tau = 20, k_nu = 4, k_hat = 0, streams = 3;
    int pilot_k = -1, pilot_l = -1;
    auto* layout = app.add_subcommand("layout", "print pilot/guard overhead per scheme");
    layout->add_option("--scheme", scheme,
                       "siso_integer|siso_frac_full|siso_frac_reduced|mimo|mu_uplink|"
                       "mu_downlink|all");
    layout->add_option("--n", n, "Doppler bins");
    layout->add_option("--m", m, "delay bins");
    layout->add_option("--l-tau", l_tau, "max delay tap");
    layout->add_option("--k-nu", k_nu, "max Doppler tap");
    layout->add_option("--k-hat", k_hat, "extra guard half-width");
    layout->add_option("--streams", streams, "antennas/users for the multi-stream schemes");
    layout->add_option("--pilot-k", pilot_k, "pilot Doppler row (default: centred)");
    layout->add_option("--pilot-l", pilot_l, "pilot delay column (default: centred)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_command(config_path, seed, seed_opt->count() > 0, out_path, threads);
        return layout_command(scheme, n, m, l_tau, k_nu, k_hat, streams, pilot_k, pilot_l);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

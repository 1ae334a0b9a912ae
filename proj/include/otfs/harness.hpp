#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "otfs/alphabet.hpp"
#include "otfs/channel.hpp"
#include "otfs/dd_io.hpp"
#include "otfs/detector.hpp"
#include "otfs/estimator.hpp"
#include "otfs/layout.hpp"

namespace otfs {

enum class CsiMode { Estimated, Ideal };
enum class DetectorKind { Mp, Exhaustive };

/**
 * One Monte-Carlo experiment: frame geometry, arrangement scheme, channel,
 * SNR sweep, estimation and detection settings. Parsed from a flat
 * key=value config file; every field has a config key of the same name.
 */
struct SimConfig {
    int n = 16;
    int m = 128;
    double delta_f_hz = 15e3;
    Scheme scheme = Scheme::SisoInteger;
    int l_tau = 4;
    int k_nu = 1;
    int k_hat = 0;
    int n_streams = 1;
    int pilot_k = -1;  // -1: centre placement clipped to the bounds
    int pilot_l = -1;
    int qam_order = 4;
    Pulse pulse = Pulse::Ideal;
    DopplerMode doppler = DopplerMode::Integer;
    std::string profile = "eva";  // eva | flat4 | identity | path to a table
    double speed_kmph = 120.0;
    double carrier_hz = 4e9;
    std::vector<double> snr_d_db = {10.0};
    double snr_p_db = 35.0;
    double threshold_mult = 3.0;
    CsiMode csi = CsiMode::Estimated;
    DetectorKind detector = DetectorKind::Mp;
    int trials = 10;
    std::uint64_t seed = 1;
    int mp_max_iter = 30;
    double mp_damping = 0.6;
    double frac_trunc_rel = 1e-3;
    int threads = 0;  // 0: hardware concurrency

    GridDims dims() const { return GridDims(n, m, delta_f_hz); }

    bool identity_channel() const { return profile == "identity"; }

    std::vector<ProfileEntry> resolve_profile() const {
        if (profile == "eva") return eva_profile();
        if (profile == "flat4") return flat_profile(4, 1e9 * dims().delay_res_s());
        if (identity_channel()) return {{0.0, 0.0}};
        return load_profile(profile);
    }

    /// Validates every cross-field constraint; throws before any trial runs.
    FrameLayout validate() const {
        if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
        if (snr_d_db.empty()) throw std::invalid_argument("config: snr_d_db list is empty");
        if (threshold_mult < 0.0) throw std::invalid_argument("config: threshold_mult < 0");
        if (pulse == Pulse::Rectangular && doppler == DopplerMode::Fractional)
            throw std::invalid_argument(
                "config: no rectangular-pulse fractional-Doppler relation is available");
        if (scheme != Scheme::SisoInteger && scheme != Scheme::SisoFracFull &&
            scheme != Scheme::SisoFracReduced)
            throw std::invalid_argument(
                "config: end-to-end simulation covers the SISO schemes; use the layout "
                "subcommand for multi-stream arrangements");
        if (doppler == DopplerMode::Fractional && scheme == Scheme::SisoInteger)
            throw std::invalid_argument(
                "config: fractional Doppler needs a fractional-guard scheme");
        Alphabet::qam(qam_order);
        resolve_profile();
        return build_layout(scheme, dims(), {pilot_k, pilot_l}, l_tau, k_nu, k_hat, n_streams);
    }
};

/// One CSV row of aggregated results for a single data-SNR point.
struct MetricsRow {
    double snr_d_db = 0.0;
    double snr_p_db = 0.0;
    double threshold_mult = 0.0;
    std::string scheme;
    std::string csi;
    long frames = 0;
    long bits = 0;
    long bit_errors = 0;
    double ber = 0.0;
    double miss_rate = 0.0;
    double false_alarm_rate = 0.0;
    double mean_mp_iterations = 0.0;
    double wall_time_s = 0.0;
};

/// Hamming error fraction between two equal-length bit strings.
inline double ber(const std::vector<std::uint8_t>& tx, const std::vector<std::uint8_t>& rx) {
    if (tx.size() != rx.size())
        throw std::invalid_argument("ber: length mismatch " + std::to_string(tx.size()) + " vs " +
                                    std::to_string(rx.size()));
    long errors = 0;
    for (std::size_t i = 0; i < tx.size(); ++i) errors += (tx[i] ^ rx[i]) & 1;
    return tx.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(tx.size());
}

namespace detail {

struct TrialResult {
    long bits = 0;
    long errors = 0;
    std::size_t misses = 0;
    std::size_t true_paths = 0;
    std::size_t false_alarms = 0;
    std::size_t noise_cells = 0;
    int mp_iterations = 0;
};

inline TrialResult run_trial(const SimConfig& cfg, const FrameLayout& layout,
                             const std::vector<ProfileEntry>& profile, const Alphabet& alphabet,
                             std::size_t snr_index, int trial) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(snr_index), static_cast<std::uint64_t>(trial));
    const NoiseModel noise = NoiseModel::from_snr(cfg.snr_d_db[snr_index], cfg.snr_p_db);
    const cplx pilot_amp = noise.pilot_amp();

    // Channel realization.
    TapSet taps;
    if (cfg.identity_channel()) {
        taps.mode = cfg.doppler;
        taps.taps.push_back({cplx{1.0, 0.0}, 0, 0, 0.0});
    } else {
        const auto paths = sample_channel(profile, cfg.speed_kmph, cfg.carrier_hz,
                                          static_cast<int>(profile.size()), rng);
        taps = tap_quantize(paths, layout.dims, cfg.doppler);
    }

    // Transmit frame.
    TrialResult res;
    std::vector<std::uint8_t> tx_bits(layout.data_count(0) *
                                      static_cast<std::size_t>(alphabet.bit_width()));
    for (auto& b : tx_bits) b = rng.bit();
    const DDFrame tx = place_symbols(layout, pilot_amp, modulate_bits(tx_bits, alphabet));

    // Channel and noise.
    DDFrame rx(layout.dims);
    if (cfg.doppler == DopplerMode::Fractional)
        rx = apply_ideal_fractional(tx, taps);
    else if (cfg.pulse == Pulse::Rectangular)
        rx = apply_rect_integer(tx, taps);
    else
        rx = apply_ideal_integer(tx, taps);
    rx = add_awgn(rx, noise, rng);

    const SplitRx split = split_rx(layout, rx);

    // Channel knowledge.
    BuildOptions opts;
    opts.pulse = cfg.pulse;
    opts.frac_trunc_rel = cfg.frac_trunc_rel;
    SparseSystem sys;
    if (cfg.csi == CsiMode::Estimated) {
        const double threshold = cfg.threshold_mult * noise.sigma();
        EstimatedChannel est;
        if (cfg.doppler == DopplerMode::Fractional)
            est = estimate_fractional(split.est[0], layout, pilot_amp, threshold);
        else
            est = estimate_integer(split.est[0], layout, 0, pilot_amp, threshold, cfg.pulse);
        const EstimatorDiagnostics diag = compare_with_truth(est, taps, layout);
        res.misses = diag.misses;
        res.true_paths = diag.true_paths;
        res.false_alarms = diag.false_alarms;
        res.noise_cells = diag.noise_cells;
        sys = build_system(est, layout, split.det, pilot_amp, noise.sigma2, alphabet, opts);
    } else {
        sys = build_system(taps, layout, split.det, pilot_amp, noise.sigma2, alphabet, opts);
    }

    // Detection and bit accounting.
    std::vector<int> decisions;
    if (cfg.detector == DetectorKind::Mp) {
        const MpResult mp = mp_detect(sys, cfg.mp_max_iter, cfg.mp_damping);
        decisions = mp.decisions;
        res.mp_iterations = mp.iterations;
    } else {
        decisions = map_detect_exhaustive(sys);
    }
    std::vector<std::uint8_t> rx_bits(tx_bits.size());
    for (std::size_t i = 0; i < decisions.size(); ++i)
        alphabet.index_to_bits(decisions[i],
                               rx_bits.data() + i * static_cast<std::size_t>(alphabet.bit_width()));

    res.bits = static_cast<long>(tx_bits.size());
    for (std::size_t i = 0; i < tx_bits.size(); ++i) res.errors += (tx_bits[i] ^ rx_bits[i]) & 1;
    return res;
}

}  // namespace detail

/**
 * Run the configured sweep. Trials use per-(point, trial) substreams of the
 * seed, so results are bit-identical for a fixed config regardless of the
 * worker count, and extending `trials` never perturbs earlier trials.
 */
inline std::vector<MetricsRow> run_experiment(const SimConfig& cfg) {
    const FrameLayout layout = cfg.validate();
    const Alphabet alphabet = Alphabet::qam(cfg.qam_order);
    const std::vector<ProfileEntry> profile = cfg.resolve_profile();

    int workers = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, cfg.trials));

    std::vector<MetricsRow> rows;
    for (std::size_t p = 0; p < cfg.snr_d_db.size(); ++p) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<detail::TrialResult> results(static_cast<std::size_t>(cfg.trials));
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
                results[static_cast<std::size_t>(t)] =
                    detail::run_trial(cfg, layout, profile, alphabet, p, t);
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();

        MetricsRow row;
        row.snr_d_db = cfg.snr_d_db[p];
        row.snr_p_db = cfg.snr_p_db;
        row.threshold_mult = cfg.threshold_mult;
        row.scheme = scheme_name(cfg.scheme);
        row.csi = cfg.csi == CsiMode::Estimated ? "estimated" : "ideal";
        row.frames = cfg.trials;
        std::size_t misses = 0, true_paths = 0, fas = 0, noise_cells = 0;
        long iter_sum = 0;
        for (const auto& r : results) {
            row.bits += r.bits;
            row.bit_errors += r.errors;
            misses += r.misses;
            true_paths += r.true_paths;
            fas += r.false_alarms;
            noise_cells += r.noise_cells;
            iter_sum += r.mp_iterations;
        }
        row.ber = row.bits ? static_cast<double>(row.bit_errors) / row.bits : 0.0;
        row.miss_rate = true_paths ? static_cast<double>(misses) / true_paths : 0.0;
        row.false_alarm_rate = noise_cells ? static_cast<double>(fas) / noise_cells : 0.0;
        row.mean_mp_iterations = static_cast<double>(iter_sum) / cfg.trials;
        row.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(std::move(row));
    }
    return rows;
}

inline const char* csv_header() {
    return "snr_d_db,snr_p_db,threshold_mult,scheme,csi,frames,bits,bit_errors,ber,"
           "miss_rate,false_alarm_rate,mean_mp_iterations,wall_time_s";
}

inline std::string csv_string(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    os << csv_header() << "\n";
    os << std::setprecision(6);
    for (const MetricsRow& r : rows)
        os << r.snr_d_db << "," << r.snr_p_db << "," << r.threshold_mult << "," << r.scheme << ","
           << r.csi << "," << r.frames << "," << r.bits << "," << r.bit_errors << "," << r.ber
           << "," << r.miss_rate << "," << r.false_alarm_rate << "," << r.mean_mp_iterations
           << "," << r.wall_time_s << "\n";
    return os.str();
}

inline void write_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << csv_string(rows);
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

// --- flat key=value config --------------------------------------------------

inline SimConfig parse_config(std::istream& in) {
    SimConfig cfg;
    std::string line;
    int line_no = 0;
    auto bad = [&](const std::string& what) {
        return std::invalid_argument("config line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw bad("expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t\r");
            const std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw bad("empty key or value");

        auto to_int = [&](const std::string& v) {
            std::size_t pos = 0;
            int x = 0;
            try {
                x = std::stoi(v, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != v.size()) throw bad("cannot parse integer '" + v + "' for key '" + key + "'");
            return x;
        };
        auto to_double = [&](const std::string& v) {
            std::size_t pos = 0;
            double x = 0.0;
            try {
                x = std::stod(v, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != v.size()) throw bad("cannot parse number '" + v + "' for key '" + key + "'");
            return x;
        };
        auto to_u64 = [&](const std::string& v) {
            std::size_t pos = 0;
            std::uint64_t x = 0;
            try {
                x = std::stoull(v, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != v.size()) throw bad("cannot parse seed '" + v + "'");
            return x;
        };

        if (key == "n") cfg.n = to_int(value);
        else if (key == "m") cfg.m = to_int(value);
        else if (key == "delta_f_hz") cfg.delta_f_hz = to_double(value);
        else if (key == "scheme") cfg.scheme = scheme_from_name(value);
        else if (key == "l_tau") cfg.l_tau = to_int(value);
        else if (key == "k_nu") cfg.k_nu = to_int(value);
        else if (key == "k_hat") cfg.k_hat = to_int(value);
        else if (key == "n_streams") cfg.n_streams = to_int(value);
        else if (key == "pilot_k") cfg.pilot_k = to_int(value);
        else if (key == "pilot_l") cfg.pilot_l = to_int(value);
        else if (key == "qam_order") cfg.qam_order = to_int(value);
        else if (key == "pulse") {
            if (value == "ideal") cfg.pulse = Pulse::Ideal;
            else if (value == "rectangular") cfg.pulse = Pulse::Rectangular;
            else throw bad("pulse must be ideal or rectangular");
        } else if (key == "doppler") {
            if (value == "integer") cfg.doppler = DopplerMode::Integer;
            else if (value == "fractional") cfg.doppler = DopplerMode::Fractional;
            else throw bad("doppler must be integer or fractional");
        } else if (key == "profile") cfg.profile = value;
        else if (key == "speed_kmph") cfg.speed_kmph = to_double(value);
        else if (key == "carrier_hz") cfg.carrier_hz = to_double(value);
        else if (key == "snr_d_db") {
            cfg.snr_d_db.clear();
            std::istringstream vs(value);
            std::string item;
            while (std::getline(vs, item, ',')) cfg.snr_d_db.push_back(to_double(trim(item)));
        } else if (key == "snr_p_db") cfg.snr_p_db = to_double(value);
        else if (key == "threshold_mult") cfg.threshold_mult = to_double(value);
        else if (key == "csi") {
            if (value == "estimated") cfg.csi = CsiMode::Estimated;
            else if (value == "ideal") cfg.csi = CsiMode::Ideal;
            else throw bad("csi must be estimated or ideal");
        } else if (key == "detector") {
            if (value == "mp") cfg.detector = DetectorKind::Mp;
            else if (value == "exhaustive") cfg.detector = DetectorKind::Exhaustive;
            else throw bad("detector must be mp or exhaustive");
        } else if (key == "trials") cfg.trials = to_int(value);
        else if (key == "seed") cfg.seed = to_u64(value);
        else if (key == "mp_max_iter") cfg.mp_max_iter = to_int(value);
        else if (key == "mp_damping") cfg.mp_damping = to_double(value);
        else if (key == "frac_trunc_rel") cfg.frac_trunc_rel = to_double(value);
        else if (key == "threads") cfg.threads = to_int(value);
        else throw bad("unknown key '" + key + "'");
    }
    return cfg;
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    return parse_config(in);
}

}  // namespace otfs

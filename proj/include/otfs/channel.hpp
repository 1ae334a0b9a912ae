#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "otfs/grid.hpp"

namespace otfs {

/// One physical propagation path.
struct PathSpec {
    cplx gain;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
};

enum class DopplerMode { Integer, Fractional };

/// One path quantized to the grid: Doppler tap k', delay tap l', and the
/// fractional Doppler offset kappa in (-1/2, 1/2] (zero in integer mode).
struct Tap {
    cplx gain;
    int doppler_tap = 0;
    int delay_tap = 0;
    double doppler_frac = 0.0;
};

struct TapSet {
    DopplerMode mode = DopplerMode::Integer;
    std::vector<Tap> taps;

    int max_delay_tap() const {
        int worst = 0;
        for (const Tap& t : taps) worst = std::max(worst, t.delay_tap);
        return worst;
    }
    int max_abs_doppler_tap() const {
        int worst = 0;
        for (const Tap& t : taps) worst = std::max(worst, std::abs(t.doppler_tap));
        return worst;
    }
};

struct ProfileEntry {
    double delay_ns = 0.0;
    double power_db = 0.0;
};

/// Extended Vehicular A power-delay profile (3GPP TS 36.101, annex B.2.1).
inline const std::vector<ProfileEntry>& eva_profile() {
    static const std::vector<ProfileEntry> profile = {
        {0.0, 0.0},     {30.0, -1.5},    {150.0, -1.4},
        {310.0, -3.6},  {370.0, -0.6},   {710.0, -9.1},
        {1090.0, -7.0}, {1730.0, -12.0}, {2510.0, -16.9},
    };
    return profile;
}

/// Synthetic equal-power profile: `paths` taps spaced `spacing_ns` apart.
inline std::vector<ProfileEntry> flat_profile(int paths, double spacing_ns) {
    if (paths < 1) throw std::invalid_argument("flat_profile: need at least one path");
    std::vector<ProfileEntry> out;
    for (int i = 0; i < paths; ++i) out.push_back({i * spacing_ns, 0.0});
    return out;
}

/// Parse a profile table: one "delay_ns power_db" pair per line, '#' comments.
inline std::vector<ProfileEntry> parse_profile(std::istream& in) {
    std::vector<ProfileEntry> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        double delay_ns = 0.0, power_db = 0.0;
        if (!(ls >> delay_ns)) continue;  // blank line
        if (!(ls >> power_db))
            throw std::invalid_argument("profile line " + std::to_string(line_no) +
                                        ": expected 'delay_ns power_db'");
        out.push_back({delay_ns, power_db});
    }
    if (out.empty()) throw std::invalid_argument("profile: no entries");
    return out;
}

inline std::vector<ProfileEntry> load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("profile: cannot open " + path);
    return parse_profile(in);
}

/// Maximum Doppler shift for a given speed and carrier.
inline double max_doppler_hz(double speed_kmph, double carrier_hz) {
    return carrier_hz * (speed_kmph / 3.6) / kSpeedOfLight;
}

inline double jakes_doppler(double nu_max_hz, double theta) { return nu_max_hz * std::cos(theta); }

/**
 * Draw one channel realization: per-tap Rayleigh gains with the profile's
 * power split (normalized to unit total power) and one Doppler shift per tap,
 * nu = nu_max * cos(theta) with theta uniform on [-pi, pi].
 */
inline std::vector<PathSpec> sample_channel(const std::vector<ProfileEntry>& profile,
                                            double speed_kmph, double carrier_hz, int paths,
                                            Rng& rng) {
    if (profile.empty()) throw std::invalid_argument("sample_channel: empty profile");
    if (paths != static_cast<int>(profile.size()))
        throw std::invalid_argument("sample_channel: path count " + std::to_string(paths) +
                                    " != profile entries " + std::to_string(profile.size()));
    if (speed_kmph <= 0.0 || carrier_hz <= 0.0)
        throw std::invalid_argument("sample_channel: speed and carrier must be positive");

    double total = 0.0;
    std::vector<double> linear(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        linear[i] = std::pow(10.0, profile[i].power_db / 10.0);
        total += linear[i];
    }

    const double nu_max = max_doppler_hz(speed_kmph, carrier_hz);
    std::vector<PathSpec> out(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        out[i].gain = rng.complex_gaussian(linear[i] / total);
        out[i].delay_s = profile[i].delay_ns * 1e-9;
        out[i].doppler_hz = jakes_doppler(nu_max, rng.uniform(-kPi, kPi));
    }
    return out;
}

/// Round with half-integer ties toward the lower tap, so the fractional part
/// lands in (-1/2, 1/2].
inline int round_half_down(double x) { return static_cast<int>(std::ceil(x - 0.5)); }

/**
 * Quantize physical paths to grid taps: l = round(tau * M * delta_f) and
 * k + kappa = nu * N * T. Integer mode zeroes kappa and merges paths landing
 * on the same (k, l) by complex gain addition; bounds are reported by the
 * TapSet accessors, never enforced here.
 */
inline TapSet tap_quantize(const std::vector<PathSpec>& paths, const GridDims& dims,
                           DopplerMode mode) {
    TapSet out;
    out.mode = mode;
    for (const PathSpec& p : paths) {
        Tap t;
        t.gain = p.gain;
        t.delay_tap = static_cast<int>(std::lround(p.delay_s / dims.delay_res_s()));
        const double doppler_bins = p.doppler_hz / dims.doppler_res_hz();
        t.doppler_tap = round_half_down(doppler_bins);
        t.doppler_frac = mode == DopplerMode::Fractional ? doppler_bins - t.doppler_tap : 0.0;
        if (mode == DopplerMode::Integer) {
            auto same = std::find_if(out.taps.begin(), out.taps.end(), [&](const Tap& u) {
                return u.delay_tap == t.delay_tap && u.doppler_tap == t.doppler_tap;
            });
            if (same != out.taps.end()) {
                same->gain += t.gain;
                continue;
            }
        }
        out.taps.push_back(t);
    }
    return out;
}

}  // namespace otfs

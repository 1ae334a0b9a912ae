#pragma once

#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "otfs/dd_io.hpp"
#include "otfs/layout.hpp"

namespace otfs {

enum class Pulse { Ideal, Rectangular };

inline const char* pulse_name(Pulse p) { return p == Pulse::Ideal ? "ideal" : "rectangular"; }

struct IntegerTapEstimate {
    int doppler_tap = 0;  // k' relative to the pilot row
    int delay_tap = 0;    // l' relative to the pilot column
    cplx gain;
};

/**
 * Threshold-detected channel. Integer mode keeps one entry per retained
 * (Doppler, delay) tap. Fractional mode keeps, per delay offset l' in
 * [0, l_tau], the presence flag and a dense Doppler-bin gain column (bin
 * j = [k - k_p]_N; zeros where below threshold or outside the observed rows).
 */
struct EstimatedChannel {
    DopplerMode mode = DopplerMode::Integer;
    double threshold = 0.0;
    std::vector<IntegerTapEstimate> entries;        // integer mode
    std::vector<std::uint8_t> delay_present;        // fractional: b[l'], size l_tau+1
    std::vector<std::vector<cplx>> doppler_gains;   // fractional: [l'][bin], bins = N

    std::size_t detected_cells() const {
        if (mode == DopplerMode::Integer) return entries.size();
        std::size_t count = 0;
        for (const auto& col : doppler_gains)
            for (const cplx& g : col)
                if (g != cplx{}) ++count;
        return count;
    }
};

/**
 * Integer-Doppler threshold estimation over one stream's estimation region:
 * cells with |y| >= threshold become taps with gain y / x_p. For rectangular
 * pulses the known per-cell phase is divided out as well, so the stored gain
 * feeds the same detection coefficients for either pulse.
 */
inline EstimatedChannel estimate_integer(const std::vector<cplx>& est_values,
                                         const FrameLayout& layout, int stream, cplx x_p,
                                         double threshold, Pulse pulse = Pulse::Ideal) {
    if (x_p == cplx{}) throw std::invalid_argument("estimate_integer: pilot amplitude is zero");
    if (threshold < 0.0) throw std::invalid_argument("estimate_integer: negative threshold");
    const auto& region = layout.est_region(stream);
    if (est_values.size() != region.size())
        throw std::invalid_argument("estimate_integer: value count does not match the region");

    EstimatedChannel out;
    out.mode = DopplerMode::Integer;
    out.threshold = threshold;
    const int k_p = layout.pilot_k(stream), l_p = layout.pilot_l(stream);
    for (std::size_t i = 0; i < region.size(); ++i) {
        const cplx y = est_values[i];
        if (std::abs(y) < threshold) continue;
        const auto [k, l] = layout.cell_of(region[i]);
        IntegerTapEstimate e;
        e.doppler_tap = k - k_p;
        e.delay_tap = l - l_p;
        cplx denom = x_p;
        if (pulse == Pulse::Rectangular)
            denom *= rect_phase(k, l, e.doppler_tap, e.delay_tap, layout.dims);
        e.gain = y / denom;
        out.entries.push_back(e);
    }
    return out;
}

/**
 * Fractional-Doppler threshold estimation (full or reduced guard): cells with
 * |y| >= threshold store gain y / x_p at Doppler bin [k - k_p]_N of delay
 * column l - l_p, and flag that delay as occupied. The reduced-guard scheme
 * applies the same rule on its narrower row range, treating residual data
 * interference as noise.
 */
inline EstimatedChannel estimate_fractional(const std::vector<cplx>& est_values,
                                            const FrameLayout& layout, cplx x_p,
                                            double threshold) {
    if (x_p == cplx{}) throw std::invalid_argument("estimate_fractional: pilot amplitude is zero");
    if (threshold < 0.0) throw std::invalid_argument("estimate_fractional: negative threshold");
    if (layout.scheme != Scheme::SisoFracFull && layout.scheme != Scheme::SisoFracReduced)
        throw std::invalid_argument("estimate_fractional: layout scheme is not fractional");
    const auto& region = layout.est_region(0);
    if (est_values.size() != region.size())
        throw std::invalid_argument("estimate_fractional: value count does not match the region");

    EstimatedChannel out;
    out.mode = DopplerMode::Fractional;
    out.threshold = threshold;
    out.delay_present.assign(static_cast<std::size_t>(layout.l_tau) + 1, 0);
    out.doppler_gains.assign(static_cast<std::size_t>(layout.l_tau) + 1,
                             std::vector<cplx>(static_cast<std::size_t>(layout.dims.n), cplx{}));
    const int k_p = layout.pilot_k(0), l_p = layout.pilot_l(0);
    for (std::size_t i = 0; i < region.size(); ++i) {
        const cplx y = est_values[i];
        if (std::abs(y) < threshold) continue;
        const auto [k, l] = layout.cell_of(region[i]);
        const int bin = mod_floor(k - k_p, layout.dims.n);
        const int dl = l - l_p;
        out.doppler_gains[static_cast<std::size_t>(dl)][static_cast<std::size_t>(bin)] = y / x_p;
        out.delay_present[static_cast<std::size_t>(dl)] = 1;
    }
    return out;
}

/// Detection bookkeeping against a known tap set; never used by the estimator.
struct EstimatorDiagnostics {
    std::size_t true_paths = 0;
    std::size_t detected = 0;
    std::size_t misses = 0;
    std::size_t false_alarms = 0;
    std::size_t noise_cells = 0;  // region cells carrying no path
    double miss_rate = 0.0;
    double false_alarm_rate = 0.0;
};

inline EstimatorDiagnostics compare_with_truth(const EstimatedChannel& est, const TapSet& truth,
                                               const FrameLayout& layout) {
    EstimatorDiagnostics d;
    if (est.mode == DopplerMode::Integer) {
        std::set<std::pair<int, int>> true_set, found;
        for (const Tap& t : truth.taps) true_set.insert({t.doppler_tap, t.delay_tap});
        for (const auto& e : est.entries) found.insert({e.doppler_tap, e.delay_tap});
        d.true_paths = true_set.size();
        d.detected = found.size();
        for (const auto& t : true_set)
            if (!found.count(t)) ++d.misses;
        for (const auto& f : found)
            if (!true_set.count(f)) ++d.false_alarms;
        const int est_half = layout.k_nu + layout.k_hat;
        std::size_t true_in_region = 0;
        for (const auto& [k, l] : true_set)
            if (k >= -est_half && k <= est_half && l >= 0 && l <= layout.l_tau) ++true_in_region;
        d.noise_cells = layout.est_region(0).size() - true_in_region;
    } else {
        std::set<int> true_delays, found_delays;
        for (const Tap& t : truth.taps) true_delays.insert(t.delay_tap);
        for (std::size_t l = 0; l < est.delay_present.size(); ++l)
            if (est.delay_present[l]) found_delays.insert(static_cast<int>(l));
        d.true_paths = true_delays.size();
        d.detected = found_delays.size();
        for (int t : true_delays)
            if (!found_delays.count(t)) ++d.misses;
        // Cells in columns with no true path are pure noise.
        const std::size_t rows = layout.est_region(0).size() /
                                 (static_cast<std::size_t>(layout.l_tau) + 1);
        std::size_t noise_cols = 0;
        for (int l = 0; l <= layout.l_tau; ++l)
            if (!true_delays.count(l)) ++noise_cols;
        d.noise_cells = noise_cols * rows;
        for (std::size_t l = 0; l < est.doppler_gains.size(); ++l) {
            if (true_delays.count(static_cast<int>(l))) continue;
            for (const cplx& g : est.doppler_gains[l])
                if (g != cplx{}) ++d.false_alarms;
        }
    }
    d.miss_rate = d.true_paths ? static_cast<double>(d.misses) / d.true_paths : 0.0;
    d.false_alarm_rate =
        d.noise_cells ? static_cast<double>(d.false_alarms) / d.noise_cells : 0.0;
    return d;
}

/// Plain-text tap list for inspection: "mode k l bin re im" per line. The k
/// column is the signed Doppler tap (fractional bins report the signed alias).
inline std::string format_tap_list(const EstimatedChannel& est, int doppler_bins) {
    std::ostringstream os;
    os.precision(12);
    if (est.mode == DopplerMode::Integer) {
        for (const auto& e : est.entries)
            os << "integer " << e.doppler_tap << " " << e.delay_tap << " "
               << mod_floor(e.doppler_tap, doppler_bins) << " " << e.gain.real() << " "
               << e.gain.imag() << "\n";
    } else {
        for (std::size_t l = 0; l < est.doppler_gains.size(); ++l)
            for (std::size_t bin = 0; bin < est.doppler_gains[l].size(); ++bin) {
                const cplx g = est.doppler_gains[l][bin];
                if (g == cplx{}) continue;
                const int signed_k = static_cast<int>(bin) > doppler_bins / 2
                                         ? static_cast<int>(bin) - doppler_bins
                                         : static_cast<int>(bin);
                os << "fractional " << signed_k << " " << l << " " << bin << " " << g.real()
                   << " " << g.imag() << "\n";
            }
    }
    return os.str();
}

}  // namespace otfs

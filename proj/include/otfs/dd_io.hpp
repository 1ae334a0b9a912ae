#pragma once

#include <cmath>
#include <stdexcept>

#include "otfs/channel.hpp"
#include "otfs/grid.hpp"

namespace otfs {

/**
 * Noise model: per-cell complex noise variance sigma2 and the derived pilot
 * amplitude |x_p| = sigma * 10^(SNR_p/20). With unit total channel power and
 * unit-energy constellations, SNR_d = 1/sigma2.
 */
struct NoiseModel {
    double sigma2 = 0.0;
    double snr_d_db = 0.0;
    double snr_p_db = 0.0;

    static NoiseModel from_snr(double snr_d_db, double snr_p_db) {
        NoiseModel nm;
        nm.snr_d_db = snr_d_db;
        nm.snr_p_db = snr_p_db;
        nm.sigma2 = std::pow(10.0, -snr_d_db / 10.0);
        return nm;
    }
    static NoiseModel noiseless() { return NoiseModel{}; }

    double sigma() const { return std::sqrt(sigma2); }
    double pilot_amp() const { return sigma() * std::pow(10.0, snr_p_db / 20.0); }
};

/// Per-path gain of the ideal-pulse relation: h * e^{-j2pi (k'/NT)(l'/(M df))}.
/// With T*delta_f = 1 the phase reduces to -2pi k'l'/(NM).
inline cplx integer_tap_gain(cplx h, int doppler_tap, int delay_tap, const GridDims& dims) {
    const double phase = -2.0 * kPi * doppler_tap * delay_tap /
                         (static_cast<double>(dims.n) * dims.m * dims.time_bandwidth());
    return h * unit_phasor(phase);
}

/**
 * Ideal-pulse, integer-Doppler relation: each path circularly shifts the
 * frame by its (Doppler, delay) taps and scales by integer_tap_gain.
 */
inline DDFrame apply_ideal_integer(const DDFrame& x, const TapSet& taps) {
    if (taps.mode != DopplerMode::Integer)
        throw std::invalid_argument(
            "apply_ideal_integer: fractional taps, use apply_ideal_fractional");
    DDFrame y(x.dims());
    const int n = x.n(), m = x.m();
    for (const Tap& t : taps.taps) {
        const cplx g = integer_tap_gain(t.gain, t.doppler_tap, t.delay_tap, x.dims());
        for (int k = 0; k < n; ++k) {
            const int ks = mod_floor(k - t.doppler_tap, n);
            for (int l = 0; l < m; ++l) y.at(k, l) += g * x.at(ks, mod_floor(l - t.delay_tap, m));
        }
    }
    return y;
}

/**
 * Doppler-spread gain of the ideal-pulse fractional relation for offset
 * q in [0, N):
 *
 *   hbar(q) = (e^{j2pi(-q-kappa)} - 1) / (N e^{j(2pi/N)(-q-kappa)} - N)
 *             * h * e^{-j2pi ((k'+kappa)/NT)(l'/(M df))}
 *
 * The q = 0, kappa = 0 point is a removable singularity with limit value
 * equal to the integer-case gain.
 */
inline cplx fractional_gain(cplx h, int doppler_tap, int delay_tap, double kappa, int q,
                            const GridDims& dims) {
    const double nm_tb = static_cast<double>(dims.n) * dims.m * dims.time_bandwidth();
    const cplx base =
        h * unit_phasor(-2.0 * kPi * (doppler_tap + kappa) * delay_tap / nm_tb);
    if (std::abs(q + kappa) < 1e-12) return base;
    const double z = -(q + kappa);
    const cplx num = unit_phasor(2.0 * kPi * z) - 1.0;
    const cplx den = static_cast<double>(dims.n) * (unit_phasor(2.0 * kPi * z / dims.n) - 1.0);
    return (num / den) * base;
}

/**
 * Ideal-pulse, fractional-Doppler relation: each path spreads over all N
 * Doppler offsets q with gains fractional_gain(q).
 */
inline DDFrame apply_ideal_fractional(const DDFrame& x, const TapSet& taps) {
    if (taps.mode != DopplerMode::Fractional)
        throw std::invalid_argument(
            "apply_ideal_fractional: integer taps, use apply_ideal_integer");
    DDFrame y(x.dims());
    const int n = x.n(), m = x.m();
    for (const Tap& t : taps.taps) {
        for (int q = 0; q < n; ++q) {
            const cplx g = fractional_gain(t.gain, t.doppler_tap, t.delay_tap, t.doppler_frac, q,
                                           x.dims());
            const int shift = t.doppler_tap - q;  // x index is [k - k' + q]_N
            for (int k = 0; k < n; ++k) {
                const int ks = mod_floor(k - shift, n);
                for (int l = 0; l < m; ++l)
                    y.at(k, l) += g * x.at(ks, mod_floor(l - t.delay_tap, m));
            }
        }
    }
    return y;
}

/**
 * Known per-cell phase of the rectangular-pulse relation. For received cell
 * (k, l) and path taps (k', l'):
 *
 *   l' <= l < M : e^{j2pi ((l-l')/M)(k'/N)}
 *   0 <= l < l' : ((N-1)/N) e^{j2pi ((l-l')/M)(k'/N)} e^{-j2pi [k-k']_N / N}
 *
 * The second branch approximates the frame-wrap factor; its modulus is
 * (N-1)/N where the exact cyclic-boundary factor has modulus 1.
 */
inline cplx rect_phase(int k, int l, int doppler_tap, int delay_tap, const GridDims& dims) {
    const cplx base =
        unit_phasor(2.0 * kPi * (static_cast<double>(l - delay_tap) / dims.m) *
                    (static_cast<double>(doppler_tap) / dims.n));
    if (l >= delay_tap) return base;
    const double wrap = -2.0 * kPi * mod_floor(k - doppler_tap, dims.n) / dims.n;
    return (static_cast<double>(dims.n - 1) / dims.n) * base * unit_phasor(wrap);
}

/**
 * Rectangular-pulse, integer-Doppler relation. The per-path factor is the
 * bare gain h times rect_phase; the delay-dependent phase of the ideal-pulse
 * gain does not arise with rectangular pulses (the full time-frequency chain
 * reproduces this relation exactly on cells with l >= l').
 */
inline DDFrame apply_rect_integer(const DDFrame& x, const TapSet& taps) {
    if (taps.mode != DopplerMode::Integer)
        throw std::invalid_argument("apply_rect_integer: integer-mode taps required");
    DDFrame y(x.dims());
    const int n = x.n(), m = x.m();
    for (const Tap& t : taps.taps) {
        for (int k = 0; k < n; ++k) {
            const int ks = mod_floor(k - t.doppler_tap, n);
            for (int l = 0; l < m; ++l)
                y.at(k, l) += t.gain * rect_phase(k, l, t.doppler_tap, t.delay_tap, x.dims()) *
                              x.at(ks, mod_floor(l - t.delay_tap, m));
        }
    }
    return y;
}

/// Add i.i.d. CN(0, sigma2) noise per cell; sigma2 = 0 is the identity.
inline DDFrame add_awgn(const DDFrame& y, const NoiseModel& noise, Rng& rng) {
    if (noise.sigma2 < 0.0) throw std::invalid_argument("add_awgn: negative variance");
    DDFrame out = y;
    if (noise.sigma2 == 0.0) return out;
    for (cplx& c : out.cells()) c += rng.complex_gaussian(noise.sigma2);
    return out;
}

}  // namespace otfs

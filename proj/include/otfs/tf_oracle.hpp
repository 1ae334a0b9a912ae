#pragma once

#include <stdexcept>
#include <vector>

#include "otfs/dd_io.hpp"
#include "otfs/grid.hpp"

namespace otfs {

/// Time-frequency samples X[n, m]: N time slots by M subcarriers, row-major.
struct TFGrid {
    GridDims dims{};
    std::vector<cplx> samples;

    TFGrid() = default;
    explicit TFGrid(const GridDims& d) : dims(d), samples(d.cells(), cplx{}) {}
    cplx& at(int n, int m) { return samples[static_cast<std::size_t>(n) * dims.m + m]; }
    const cplx& at(int n, int m) const {
        return samples[static_cast<std::size_t>(n) * dims.m + m];
    }
};

/// Baseband samples at rate M*delta_f; cp_len leading samples are a cyclic
/// prefix, so the frame body starts at sample index cp_len.
struct TimeSignal {
    GridDims dims{};
    std::vector<cplx> samples;
    int cp_len = 0;
};

namespace detail {

/// Twiddle table for a direct unitary DFT of one length (oracle-scale grids).
struct Dft {
    int size;
    std::vector<cplx> w;  // w[r] = e^{-j 2 pi r / size}

    explicit Dft(int n) : size(n), w(static_cast<std::size_t>(n)) {
        for (int r = 0; r < n; ++r)
            w[static_cast<std::size_t>(r)] = unit_phasor(-2.0 * kPi * r / n);
    }
    cplx twiddle(long r, bool inverse) const {
        const cplx t = w[static_cast<std::size_t>(r % size)];
        return inverse ? std::conj(t) : t;
    }
};

}  // namespace detail

/**
 * Inverse symplectic finite Fourier transform:
 *   X[n,m] = (1/sqrt(NM)) sum_{k,l} x[k,l] e^{j2pi(nk/N - ml/M)}
 */
inline TFGrid isfft(const DDFrame& x) {
    const int n_bins = x.n(), m_bins = x.m();
    const detail::Dft dn(n_bins), dm(m_bins);
    TFGrid X(x.dims());
    std::vector<cplx> tmp(x.dims().cells());  // [n, l]
    for (int n = 0; n < n_bins; ++n)
        for (int l = 0; l < m_bins; ++l) {
            cplx acc = 0.0;
            for (int k = 0; k < n_bins; ++k)
                acc += x.at(k, l) * dn.twiddle(static_cast<long>(n) * k, true);
            tmp[static_cast<std::size_t>(n) * m_bins + l] = acc;
        }
    const double scale = 1.0 / std::sqrt(static_cast<double>(x.dims().cells()));
    for (int n = 0; n < n_bins; ++n)
        for (int m = 0; m < m_bins; ++m) {
            cplx acc = 0.0;
            for (int l = 0; l < m_bins; ++l)
                acc += tmp[static_cast<std::size_t>(n) * m_bins + l] *
                       dm.twiddle(static_cast<long>(m) * l, false);
            X.at(n, m) = acc * scale;
        }
    return X;
}

/**
 * Symplectic finite Fourier transform, the exact inverse of isfft:
 *   x[k,l] = (1/sqrt(NM)) sum_{n,m} X[n,m] e^{-j2pi(nk/N - ml/M)}
 */
inline DDFrame sfft(const TFGrid& X) {
    const int n_bins = X.dims.n, m_bins = X.dims.m;
    const detail::Dft dn(n_bins), dm(m_bins);
    DDFrame x(X.dims);
    std::vector<cplx> tmp(X.dims.cells());  // [k, m]
    for (int k = 0; k < n_bins; ++k)
        for (int m = 0; m < m_bins; ++m) {
            cplx acc = 0.0;
            for (int n = 0; n < n_bins; ++n)
                acc += X.at(n, m) * dn.twiddle(static_cast<long>(n) * k, false);
            tmp[static_cast<std::size_t>(k) * m_bins + m] = acc;
        }
    const double scale = 1.0 / std::sqrt(static_cast<double>(X.dims.cells()));
    for (int k = 0; k < n_bins; ++k)
        for (int l = 0; l < m_bins; ++l) {
            cplx acc = 0.0;
            for (int m = 0; m < m_bins; ++m)
                acc += tmp[static_cast<std::size_t>(k) * m_bins + m] *
                       dm.twiddle(static_cast<long>(m) * l, true);
            x.at(k, l) = acc * scale;
        }
    return x;
}

/**
 * Rectangular-pulse transmit synthesis: per slot n an M-point unitary
 * inverse DFT, slots concatenated. Assumes T*delta_f = 1.
 */
inline TimeSignal otfs_tx_rect(const TFGrid& X) {
    const int n_bins = X.dims.n, m_bins = X.dims.m;
    const detail::Dft dm(m_bins);
    TimeSignal s;
    s.dims = X.dims;
    s.samples.assign(X.dims.cells(), cplx{});
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_bins));
    for (int n = 0; n < n_bins; ++n)
        for (int p = 0; p < m_bins; ++p) {
            cplx acc = 0.0;
            for (int m = 0; m < m_bins; ++m)
                acc += X.at(n, m) * dm.twiddle(static_cast<long>(m) * p, true);
            s.samples[static_cast<std::size_t>(n) * m_bins + p] = acc * scale;
        }
    return s;
}

/// Rectangular-pulse receive analysis, the exact inverse of otfs_tx_rect.
inline TFGrid otfs_rx_rect(const TimeSignal& s) {
    if (s.cp_len != 0) throw std::invalid_argument("otfs_rx_rect: strip the cyclic prefix first");
    if (s.samples.size() != s.dims.cells())
        throw std::invalid_argument("otfs_rx_rect: sample count does not match the grid");
    const int n_bins = s.dims.n, m_bins = s.dims.m;
    const detail::Dft dm(m_bins);
    TFGrid Y(s.dims);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_bins));
    for (int n = 0; n < n_bins; ++n)
        for (int m = 0; m < m_bins; ++m) {
            cplx acc = 0.0;
            for (int p = 0; p < m_bins; ++p)
                acc += s.samples[static_cast<std::size_t>(n) * m_bins + p] *
                       dm.twiddle(static_cast<long>(m) * p, false);
            Y.at(n, m) = acc * scale;
        }
    return Y;
}

inline TimeSignal add_cyclic_prefix(const TimeSignal& s, int cp_len) {
    if (s.cp_len != 0) throw std::invalid_argument("add_cyclic_prefix: already prefixed");
    if (cp_len < 0 || cp_len > static_cast<int>(s.samples.size()))
        throw std::invalid_argument("add_cyclic_prefix: bad length");
    TimeSignal out;
    out.dims = s.dims;
    out.cp_len = cp_len;
    out.samples.reserve(s.samples.size() + static_cast<std::size_t>(cp_len));
    out.samples.insert(out.samples.end(), s.samples.end() - cp_len, s.samples.end());
    out.samples.insert(out.samples.end(), s.samples.begin(), s.samples.end());
    return out;
}

inline TimeSignal strip_cyclic_prefix(const TimeSignal& s) {
    TimeSignal out;
    out.dims = s.dims;
    out.samples.assign(s.samples.begin() + s.cp_len, s.samples.end());
    return out;
}

/**
 * Sampled time-domain channel. Each path delays by l_i samples and applies
 * the Doppler ramp e^{j2pi (k_i+kappa_i)(t - l_i)/(NM)} with t the sample
 * index relative to the frame body (the cyclic prefix occupies t < 0).
 * Cyclic mode wraps the delayed signal modulo the body length; otherwise the
 * history is zero-filled.
 */
inline TimeSignal td_channel(const TimeSignal& s, const TapSet& taps, bool cyclic) {
    const long body = static_cast<long>(s.dims.cells());
    if (cyclic && (s.cp_len != 0 || static_cast<long>(s.samples.size()) != body))
        throw std::invalid_argument("td_channel: cyclic mode expects a bare NM-sample frame");
    const double nm_tb = static_cast<double>(body) * s.dims.time_bandwidth();
    TimeSignal r;
    r.dims = s.dims;
    r.cp_len = s.cp_len;
    r.samples.assign(s.samples.size(), cplx{});
    const long total = static_cast<long>(s.samples.size());
    for (const Tap& t : taps.taps) {
        const double shift = t.doppler_tap + t.doppler_frac;
        for (long q = 0; q < total; ++q) {
            const long src = q - t.delay_tap;
            cplx sample;
            if (cyclic) {
                sample = s.samples[static_cast<std::size_t>(((src % body) + body) % body)];
            } else {
                if (src < 0) continue;
                sample = s.samples[static_cast<std::size_t>(src)];
            }
            const double time = static_cast<double>(q - s.cp_len - t.delay_tap);
            r.samples[static_cast<std::size_t>(q)] +=
                t.gain * unit_phasor(2.0 * kPi * shift * time / nm_tb) * sample;
        }
    }
    return r;
}

enum class ChainBoundary { CyclicPrefix, Cyclic };

/**
 * End-to-end reference chain: ISFFT, rectangular-pulse synthesis, sampled
 * time-domain channel, rectangular-pulse analysis, SFFT, then noise. The
 * default boundary prepends a cyclic prefix covering the longest delay tap,
 * which is equivalent to NM-cyclic convolution.
 */
inline DDFrame full_chain(const DDFrame& x, const TapSet& taps, const NoiseModel& noise, Rng& rng,
                          ChainBoundary boundary = ChainBoundary::CyclicPrefix) {
    TimeSignal s = otfs_tx_rect(isfft(x));
    TimeSignal r;
    if (boundary == ChainBoundary::Cyclic) {
        r = td_channel(s, taps, true);
    } else {
        const int cp = std::max(0, taps.max_delay_tap());
        r = strip_cyclic_prefix(td_channel(add_cyclic_prefix(s, cp), taps, false));
    }
    DDFrame y = sfft(otfs_rx_rect(r));
    return add_awgn(y, noise, rng);
}

}  // namespace otfs

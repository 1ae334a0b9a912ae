#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "otfs/common.hpp"

namespace otfs {

/**
 * Doppler-delay grid geometry: N Doppler bins (rows) by M delay bins
 * (columns), with slot duration T seconds and subcarrier spacing delta_f Hz.
 * The frame spans N*T seconds and M*delta_f Hz, so the Doppler resolution is
 * 1/(N*T) and the delay resolution 1/(M*delta_f). Critically sampled frames
 * have T*delta_f = 1, which is the default.
 */
struct GridDims {
    int n = 2;                  // Doppler bins
    int m = 2;                  // delay bins
    double delta_f_hz = 15e3;   // subcarrier spacing
    double t_s = 1.0 / 15e3;    // slot duration

    GridDims() = default;
    GridDims(int n_bins, int m_bins, double delta_f = 15e3)
        : GridDims(n_bins, m_bins, delta_f, 1.0 / delta_f) {}
    GridDims(int n_bins, int m_bins, double delta_f, double t)
        : n(n_bins), m(m_bins), delta_f_hz(delta_f), t_s(t) {
        if (n < 2 || m < 2) throw std::invalid_argument("GridDims: N and M must be >= 2");
        if (delta_f_hz <= 0.0 || t_s <= 0.0)
            throw std::invalid_argument("GridDims: delta_f and T must be positive");
    }

    std::size_t cells() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(m); }
    double doppler_res_hz() const { return 1.0 / (n * t_s); }
    double delay_res_s() const { return 1.0 / (m * delta_f_hz); }
    double time_bandwidth() const { return t_s * delta_f_hz; }

    bool same_shape(const GridDims& o) const { return n == o.n && m == o.m; }
};

/**
 * One frame of complex symbols on the Doppler-delay grid, indexed [k, l]
 * with k the Doppler row and l the delay column. Row-major storage.
 */
class DDFrame {
public:
    DDFrame() = default;
    explicit DDFrame(const GridDims& dims) : dims_(dims), cells_(dims.cells(), cplx{}) {}

    const GridDims& dims() const { return dims_; }
    int n() const { return dims_.n; }
    int m() const { return dims_.m; }

    std::size_t index(int k, int l) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(dims_.m) +
               static_cast<std::size_t>(l);
    }

    cplx& at(int k, int l) { return cells_[index(k, l)]; }
    const cplx& at(int k, int l) const { return cells_[index(k, l)]; }

    /// Access with cyclic index wrap on both axes.
    const cplx& at_mod(int k, int l) const {
        return cells_[index(mod_floor(k, dims_.n), mod_floor(l, dims_.m))];
    }

    std::vector<cplx>& cells() { return cells_; }
    const std::vector<cplx>& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }

private:
    GridDims dims_{};
    std::vector<cplx> cells_;
};

inline double max_abs_diff(const DDFrame& a, const DDFrame& b) {
    if (!a.dims().same_shape(b.dims()))
        throw std::invalid_argument("max_abs_diff: frame shapes differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.cells()[i] - b.cells()[i]));
    return worst;
}

inline double max_abs(const DDFrame& a) {
    double worst = 0.0;
    for (const cplx& c : a.cells()) worst = std::max(worst, std::abs(c));
    return worst;
}

}  // namespace otfs

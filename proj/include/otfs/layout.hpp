#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "otfs/grid.hpp"

namespace otfs {

enum class Scheme {
    SisoInteger,
    SisoFracFull,
    SisoFracReduced,
    Mimo,
    MultiUserUplink,
    MultiUserDownlink,
};

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::SisoInteger: return "siso_integer";
        case Scheme::SisoFracFull: return "siso_frac_full";
        case Scheme::SisoFracReduced: return "siso_frac_reduced";
        case Scheme::Mimo: return "mimo";
        case Scheme::MultiUserUplink: return "mu_uplink";
        case Scheme::MultiUserDownlink: return "mu_downlink";
    }
    return "?";
}

inline Scheme scheme_from_name(const std::string& name) {
    for (Scheme s : {Scheme::SisoInteger, Scheme::SisoFracFull, Scheme::SisoFracReduced,
                     Scheme::Mimo, Scheme::MultiUserUplink, Scheme::MultiUserDownlink})
        if (name == scheme_name(s)) return s;
    throw std::invalid_argument("unknown scheme: " + name);
}

enum class CellKind : std::uint8_t { Data, Pilot, Guard };

/**
 * Pilot/guard/data arrangement on the Doppler-delay grid, together with the
 * receive-side partition into channel-estimation regions (one per pilot) and
 * the data-detection region.
 *
 * Pilot+guard block per scheme:
 *   siso_integer      rows [k_p-2k_nu, k_p+2k_nu]                  x cols [l_p-l_tau, l_p+l_tau]
 *   siso_frac_full    all rows                                     x cols [l_p-l_tau, l_p+l_tau]
 *   siso_frac_reduced rows [k_p-2(k_nu+k_hat), k_p+2(k_nu+k_hat)]  x cols [l_p-l_tau, l_p+l_tau]
 *   mimo / mu_uplink  rows as reduced        x cols [l_p-l_tau, l_p+S*l_tau+S-1], S streams
 *   mu_downlink       block as siso_frac_reduced, plus guard columns between user data bands
 *
 * Stream s (0-based) places its pilot at (k_p, l_p + s*(l_tau+1)), so pilots
 * of distinct streams sit l_tau+1 delay bins apart.
 */
class FrameLayout {
public:
    Scheme scheme{};
    GridDims dims{};
    int l_tau = 0;
    int k_nu = 0;
    int k_hat = 0;
    int n_streams = 1;
    int downlink_guard_cols = 0;              // separator width between user bands
    std::vector<std::pair<int, int>> pilots;  // (k, l), one per pilot-bearing stream

    std::size_t index(int k, int l) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(dims.m) +
               static_cast<std::size_t>(l);
    }
    std::pair<int, int> cell_of(std::size_t flat) const {
        return {static_cast<int>(flat) / dims.m, static_cast<int>(flat) % dims.m};
    }

    const std::vector<CellKind>& kinds() const { return kind_; }
    CellKind kind_at(std::size_t flat) const { return kind_[flat]; }

    /// Data cells of one stream, sorted flat indices. For schemes where every
    /// stream transmits on every data cell (SISO, MIMO) the masks coincide.
    const std::vector<std::size_t>& data_cells(int stream = 0) const {
        return data_cells_[shared_data_ ? 0 : static_cast<std::size_t>(stream)];
    }
    std::size_t data_count(int stream = 0) const { return data_cells(stream).size(); }

    const std::vector<std::vector<std::size_t>>& est_regions() const { return est_regions_; }
    const std::vector<std::size_t>& est_region(int stream = 0) const {
        return est_regions_[static_cast<std::size_t>(stream)];
    }
    const std::vector<std::size_t>& det_region() const { return det_region_; }

    /// Cell count of the pilot+guard block (the closed-form overhead).
    std::size_t pilot_guard_block() const { return pilot_guard_block_; }

    int pilot_k(int stream = 0) const { return pilots[static_cast<std::size_t>(stream)].first; }
    int pilot_l(int stream = 0) const { return pilots[static_cast<std::size_t>(stream)].second; }

private:
    friend FrameLayout build_layout(Scheme, const GridDims&, std::pair<int, int>, int, int, int,
                                    int, int);
    friend FrameLayout uniform_data_layout(const GridDims&);

    std::vector<CellKind> kind_;
    std::vector<std::vector<std::size_t>> data_cells_;
    bool shared_data_ = true;
    std::vector<std::vector<std::size_t>> est_regions_;
    std::vector<std::size_t> det_region_;
    std::size_t pilot_guard_block_ = 0;
};

namespace detail {

inline void require(bool ok, const std::string& inequality) {
    if (!ok) throw std::invalid_argument("layout bound violated: " + inequality);
}

inline std::string eq(const char* text, long lhs) {
    return std::string(text) + " = " + std::to_string(lhs);
}

}  // namespace detail

/// Closed-form pilot+guard totals per scheme.
inline long overhead_closed_form(Scheme scheme, int n, int l_tau, int k_nu, int k_hat,
                                 int n_streams) {
    const long rows = 4L * (k_nu + k_hat) + 1;
    switch (scheme) {
        case Scheme::SisoInteger: return (2L * l_tau + 1) * (4L * k_nu + 1);
        case Scheme::SisoFracFull: return (2L * l_tau + 1) * n;
        case Scheme::SisoFracReduced: return (2L * l_tau + 1) * rows;
        case Scheme::Mimo:
        case Scheme::MultiUserUplink:
            return (static_cast<long>(n_streams + 1) * l_tau + n_streams) * rows;
        case Scheme::MultiUserDownlink: return (2L * l_tau + 1) * rows;
    }
    return 0;
}

/**
 * Build a frame layout. `pilot` is the (k_p, l_p) location of stream 0's
 * pilot; pass {-1, -1} for the default centre placement clipped to the bound
 * conditions. `downlink_guard_cols` < 0 selects the default separator width
 * l_tau for mu_downlink (the field is ignored by the other schemes).
 */
inline FrameLayout build_layout(Scheme scheme, const GridDims& dims, std::pair<int, int> pilot,
                                int l_tau, int k_nu, int k_hat = 0, int n_streams = 1,
                                int downlink_guard_cols = -1) {
    using detail::eq;
    using detail::require;

    const int n = dims.n, m = dims.m;
    if (l_tau < 0 || k_nu < 0 || k_hat < 0)
        throw std::invalid_argument("layout: l_tau, k_nu, k_hat must be nonnegative");

    const bool multi = scheme == Scheme::Mimo || scheme == Scheme::MultiUserUplink;
    const bool banded =
        scheme == Scheme::MultiUserUplink || scheme == Scheme::MultiUserDownlink;
    if (!multi && scheme != Scheme::MultiUserDownlink) n_streams = 1;
    if (n_streams < 1) throw std::invalid_argument("layout: n_streams must be >= 1");
    if (scheme == Scheme::SisoInteger || scheme == Scheme::SisoFracFull) k_hat = 0;

    const bool full_rows = scheme == Scheme::SisoFracFull;
    const int guard_half = 2 * (k_nu + k_hat);  // guard block half-height
    const int est_half = k_nu + k_hat;          // estimation region half-height
    const int block_right_span = multi ? (n_streams * l_tau + n_streams - 1) : l_tau;

    int k_p = pilot.first, l_p = pilot.second;
    if (l_p < 0) l_p = std::clamp(m / 2, l_tau, std::max(l_tau, m - 1 - block_right_span));
    if (k_p < 0)
        k_p = full_rows ? n / 2
                        : std::clamp(n / 2, guard_half, std::max(guard_half, n - 1 - guard_half));

    if (multi)
        require((n_streams + 1L) * l_tau + n_streams <= m,
                eq("(n_streams+1)*l_tau + n_streams", (n_streams + 1L) * l_tau + n_streams) +
                    " > M = " + std::to_string(m));
    require(k_p >= 0 && k_p <= n - 1, eq("k_p", k_p) + " outside [0, N-1]");
    require(l_p - l_tau >= 0, eq("l_p - l_tau", l_p - l_tau) + " < 0");
    require(l_p + block_right_span <= m - 1,
            eq(multi ? "l_p + n_streams*l_tau + n_streams - 1" : "l_p + l_tau",
               l_p + block_right_span) +
                " > M - 1 = " + std::to_string(m - 1));
    if (!full_rows) {
        require(k_p - guard_half >= 0, eq("k_p - 2*(k_nu + k_hat)", k_p - guard_half) + " < 0");
        require(k_p + guard_half <= n - 1, eq("k_p + 2*(k_nu + k_hat)", k_p + guard_half) +
                                               " > N - 1 = " + std::to_string(n - 1));
    }

    FrameLayout out;
    out.scheme = scheme;
    out.dims = dims;
    out.l_tau = l_tau;
    out.k_nu = k_nu;
    out.k_hat = k_hat;
    out.n_streams = n_streams;
    out.kind_.assign(dims.cells(), CellKind::Data);

    const int n_pilots = multi ? n_streams : 1;
    for (int s = 0; s < n_pilots; ++s) out.pilots.emplace_back(k_p, l_p + s * (l_tau + 1));

    const int row_lo = full_rows ? 0 : k_p - guard_half;
    const int row_hi = full_rows ? n - 1 : k_p + guard_half;
    std::size_t block_cells = 0;
    for (int k = row_lo; k <= row_hi; ++k)
        for (int l = l_p - l_tau; l <= l_p + block_right_span; ++l) {
            out.kind_[out.index(k, l)] = CellKind::Guard;
            ++block_cells;
        }
    for (auto [pk, pl] : out.pilots) out.kind_[out.index(pk, pl)] = CellKind::Pilot;
    out.pilot_guard_block_ = block_cells;

    const long closed = overhead_closed_form(scheme, n, l_tau, k_nu, k_hat, n_streams);
    if (static_cast<long>(block_cells) != closed)
        throw std::logic_error("layout: block cell count " + std::to_string(block_cells) +
                               " does not match the closed form " + std::to_string(closed));

    if (scheme == Scheme::MultiUserDownlink && n_streams > 1)
        out.downlink_guard_cols = downlink_guard_cols < 0 ? l_tau : downlink_guard_cols;

    if (banded && n_streams > 1) {
        // Orthogonal per-user allocation: contiguous delay-column bands of
        // near-equal width; mu_downlink additionally zeroes separator columns
        // between adjacent bands over the full Doppler span.
        out.shared_data_ = false;
        out.data_cells_.resize(static_cast<std::size_t>(n_streams));
        const int sep = out.downlink_guard_cols;
        const int usable = m - (n_streams - 1) * sep;
        require(usable >= n_streams, eq("M - (n_streams-1)*guard_cols", usable) +
                                         " < n_streams = " + std::to_string(n_streams));
        int col = 0;
        for (int u = 0; u < n_streams; ++u) {
            const int width = usable / n_streams + (u < usable % n_streams ? 1 : 0);
            for (int c = 0; c < width; ++c, ++col)
                for (int k = 0; k < n; ++k) {
                    const std::size_t f = out.index(k, col);
                    if (out.kind_[f] == CellKind::Data)
                        out.data_cells_[static_cast<std::size_t>(u)].push_back(f);
                }
            if (u + 1 < n_streams)
                for (int c = 0; c < sep; ++c, ++col)
                    for (int k = 0; k < n; ++k) {
                        const std::size_t f = out.index(k, col);
                        if (out.kind_[f] == CellKind::Data) out.kind_[f] = CellKind::Guard;
                    }
        }
        for (auto& cells : out.data_cells_) std::sort(cells.begin(), cells.end());
    } else {
        out.shared_data_ = true;
        out.data_cells_.resize(1);
        for (std::size_t f = 0; f < out.kind_.size(); ++f)
            if (out.kind_[f] == CellKind::Data) out.data_cells_[0].push_back(f);
    }

    const int est_row_lo = full_rows ? 0 : k_p - est_half;
    const int est_row_hi = full_rows ? n - 1 : k_p + est_half;
    out.est_regions_.resize(out.pilots.size());
    std::vector<std::uint8_t> in_est(dims.cells(), 0);
    for (std::size_t s = 0; s < out.pilots.size(); ++s) {
        const int pl = out.pilots[s].second;
        for (int k = est_row_lo; k <= est_row_hi; ++k)
            for (int l = pl; l <= pl + l_tau; ++l) {
                const std::size_t f = out.index(k, l);
                out.est_regions_[s].push_back(f);
                in_est[f] = 1;
            }
    }
    for (std::size_t f = 0; f < dims.cells(); ++f)
        if (!in_est[f]) out.det_region_.push_back(f);

    return out;
}

/// Degenerate layout with no pilot: every cell is a data cell and the whole
/// grid is the detection region. Handy for driving the detector on raw
/// systems outside any arrangement.
inline FrameLayout uniform_data_layout(const GridDims& dims) {
    FrameLayout out;
    out.scheme = Scheme::SisoInteger;
    out.dims = dims;
    out.kind_.assign(dims.cells(), CellKind::Data);
    out.data_cells_.resize(1);
    for (std::size_t f = 0; f < dims.cells(); ++f) {
        out.data_cells_[0].push_back(f);
        out.det_region_.push_back(f);
    }
    return out;
}

/// Pilot + guard symbol total; equals the closed-form expression per scheme.
inline long overhead_count(const FrameLayout& layout) {
    return static_cast<long>(layout.pilot_guard_block());
}

/**
 * Place the pilot, guard zeros, and one stream's data symbols into a transmit
 * frame. Data cells fill in row-major (k, then l) order over the stream's
 * data mask.
 */
inline DDFrame place_symbols(const FrameLayout& layout, cplx pilot_amp,
                             const std::vector<cplx>& data, int stream = 0) {
    if (data.size() != layout.data_count(stream))
        throw std::invalid_argument("place_symbols: got " + std::to_string(data.size()) +
                                    " data symbols, stream needs " +
                                    std::to_string(layout.data_count(stream)));
    DDFrame frame(layout.dims);
    if (stream < static_cast<int>(layout.pilots.size()))
        frame.at(layout.pilot_k(stream), layout.pilot_l(stream)) = pilot_amp;
    const auto& cells = layout.data_cells(stream);
    for (std::size_t i = 0; i < cells.size(); ++i) frame.cells()[cells[i]] = data[i];
    return frame;
}

/// Inverse of place_symbols over the stream's data mask.
inline std::vector<cplx> extract_data(const FrameLayout& layout, const DDFrame& frame,
                                      int stream = 0) {
    if (!frame.dims().same_shape(layout.dims))
        throw std::invalid_argument("extract_data: frame shape does not match layout");
    const auto& cells = layout.data_cells(stream);
    std::vector<cplx> out(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) out[i] = frame.cells()[cells[i]];
    return out;
}

struct SplitRx {
    std::vector<std::vector<cplx>> est;  // per stream, ordered as est_region(stream)
    std::vector<cplx> det;               // ordered as det_region()
};

/// Split a received frame into per-stream estimation values and detection values.
inline SplitRx split_rx(const FrameLayout& layout, const DDFrame& rx) {
    if (!rx.dims().same_shape(layout.dims))
        throw std::invalid_argument("split_rx: frame shape does not match layout");
    SplitRx out;
    out.est.resize(layout.est_regions().size());
    for (std::size_t s = 0; s < out.est.size(); ++s) {
        const auto& region = layout.est_region(static_cast<int>(s));
        out.est[s].reserve(region.size());
        for (std::size_t f : region) out.est[s].push_back(rx.cells()[f]);
    }
    out.det.reserve(layout.det_region().size());
    for (std::size_t f : layout.det_region()) out.det.push_back(rx.cells()[f]);
    return out;
}

/// One-line counts summary, e.g. for the CLI overhead table.
inline std::string format_summary(const FrameLayout& layout) {
    std::ostringstream os;
    const double total = static_cast<double>(layout.dims.cells());
    os << scheme_name(layout.scheme) << "  N=" << layout.dims.n << " M=" << layout.dims.m
       << "  l_tau=" << layout.l_tau << " k_nu=" << layout.k_nu << " k_hat=" << layout.k_hat
       << " streams=" << layout.n_streams << "  pilot+guard=" << overhead_count(layout) << " ("
       << 100.0 * static_cast<double>(overhead_count(layout)) / total << "%)";
    return os.str();
}

}  // namespace otfs

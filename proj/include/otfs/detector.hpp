#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "otfs/alphabet.hpp"
#include "otfs/estimator.hpp"
#include "otfs/layout.hpp"

namespace otfs {

/// One detection equation: observation value (with known pilot contributions
/// already moved to the left) and sparse coefficients over data-cell indices.
struct SystemRow {
    cplx observation;
    std::vector<std::pair<int, cplx>> coeffs;
};

struct SparseSystem {
    std::vector<SystemRow> rows;
    int n_vars = 0;
    double sigma2 = 0.0;
    const Alphabet* alphabet = nullptr;
};

struct BuildOptions {
    Pulse pulse = Pulse::Ideal;
    double frac_trunc_rel = 1e-3;  // drop fractional bins below this fraction of the peak
};

namespace detail {

/// Channel coefficients in a pulse-agnostic shape: either tap entries
/// (integer) or per-delay Doppler-bin columns (fractional).
struct ChannelCoeffs {
    DopplerMode mode = DopplerMode::Integer;
    std::vector<IntegerTapEstimate> entries;
    std::vector<std::vector<cplx>> doppler_gains;  // [l'][bin]
};

inline ChannelCoeffs coeffs_from(const EstimatedChannel& est) {
    ChannelCoeffs c;
    c.mode = est.mode;
    c.entries = est.entries;
    c.doppler_gains = est.doppler_gains;
    return c;
}

/// Ideal-CSI route: derive the same coefficient shapes from the true taps.
inline ChannelCoeffs coeffs_from(const TapSet& taps, const GridDims& dims, Pulse pulse) {
    ChannelCoeffs c;
    c.mode = taps.mode;
    if (taps.mode == DopplerMode::Integer) {
        for (const Tap& t : taps.taps) {
            IntegerTapEstimate e;
            e.doppler_tap = t.doppler_tap;
            e.delay_tap = t.delay_tap;
            // Rectangular rows re-apply the known per-cell phase, so the
            // stored gain stays bare; the ideal gain carries the tap phase.
            e.gain = pulse == Pulse::Rectangular
                         ? t.gain
                         : integer_tap_gain(t.gain, t.doppler_tap, t.delay_tap, dims);
            c.entries.push_back(e);
        }
    } else {
        const int l_tau = taps.max_delay_tap();
        c.doppler_gains.assign(static_cast<std::size_t>(l_tau) + 1,
                               std::vector<cplx>(static_cast<std::size_t>(dims.n), cplx{}));
        for (const Tap& t : taps.taps)
            for (int bin = 0; bin < dims.n; ++bin) {
                const int q = mod_floor(t.doppler_tap - bin, dims.n);
                c.doppler_gains[static_cast<std::size_t>(t.delay_tap)]
                               [static_cast<std::size_t>(bin)] +=
                    fractional_gain(t.gain, t.doppler_tap, t.delay_tap, t.doppler_frac, q, dims);
            }
    }
    return c;
}

inline SparseSystem assemble(const ChannelCoeffs& chan, const FrameLayout& layout,
                             const std::vector<cplx>& det_values, cplx pilot_amp, double sigma2,
                             const Alphabet& alphabet, const BuildOptions& opts) {
    if (layout.n_streams != 1)
        throw std::invalid_argument("build_system: single-stream layouts only");
    if (det_values.size() != layout.det_region().size())
        throw std::invalid_argument("build_system: value count does not match the det region");
    if (chan.mode == DopplerMode::Fractional && opts.pulse == Pulse::Rectangular)
        throw std::invalid_argument("build_system: no rectangular-pulse fractional relation");

    const GridDims& dims = layout.dims;
    std::vector<int> var_of(dims.cells(), -1);
    const auto& data = layout.data_cells(0);
    for (std::size_t i = 0; i < data.size(); ++i) var_of[data[i]] = static_cast<int>(i);

    // Retained (shift, gain-or-column) pairs after fractional truncation.
    struct FracBin {
        int bin;
        int delay;
        cplx gain;
    };
    std::vector<FracBin> frac_bins;
    if (chan.mode == DopplerMode::Fractional) {
        double peak = 0.0;
        for (const auto& col : chan.doppler_gains)
            for (const cplx& g : col) peak = std::max(peak, std::abs(g));
        for (std::size_t l = 0; l < chan.doppler_gains.size(); ++l)
            for (std::size_t bin = 0; bin < chan.doppler_gains[l].size(); ++bin) {
                const cplx g = chan.doppler_gains[l][bin];
                if (g == cplx{} || std::abs(g) < opts.frac_trunc_rel * peak) continue;
                frac_bins.push_back({static_cast<int>(bin), static_cast<int>(l), g});
            }
    }

    SparseSystem sys;
    sys.n_vars = static_cast<int>(data.size());
    sys.sigma2 = sigma2;
    sys.alphabet = &alphabet;
    sys.rows.resize(det_values.size());

    for (std::size_t r = 0; r < det_values.size(); ++r) {
        const auto [k, l] = layout.cell_of(layout.det_region()[r]);
        SystemRow& row = sys.rows[r];
        row.observation = det_values[r];
        auto add_ref = [&](int src_k, int src_l, cplx coeff) {
            const std::size_t f = layout.index(src_k, src_l);
            const int v = var_of[f];
            if (v >= 0) {
                row.coeffs.emplace_back(v, coeff);
            } else if (layout.kind_at(f) == CellKind::Pilot) {
                row.observation -= coeff * pilot_amp;
            }  // guard cells transmit zero
        };
        if (chan.mode == DopplerMode::Integer) {
            for (const auto& e : chan.entries) {
                cplx coeff = e.gain;
                if (opts.pulse == Pulse::Rectangular)
                    coeff *= rect_phase(k, l, e.doppler_tap, e.delay_tap, dims);
                add_ref(mod_floor(k - e.doppler_tap, dims.n), mod_floor(l - e.delay_tap, dims.m),
                        coeff);
            }
        } else {
            for (const FracBin& fb : frac_bins)
                add_ref(mod_floor(k - fb.bin, dims.n), mod_floor(l - fb.delay, dims.m), fb.gain);
        }
    }
    return sys;
}

}  // namespace detail

/// Detection system from an estimated channel over the detection region.
inline SparseSystem build_system(const EstimatedChannel& est, const FrameLayout& layout,
                                 const std::vector<cplx>& det_values, cplx pilot_amp,
                                 double sigma2, const Alphabet& alphabet,
                                 const BuildOptions& opts = {}) {
    return detail::assemble(detail::coeffs_from(est), layout, det_values, pilot_amp, sigma2,
                            alphabet, opts);
}

/// Detection system from the true taps (ideal channel knowledge).
inline SparseSystem build_system(const TapSet& taps, const FrameLayout& layout,
                                 const std::vector<cplx>& det_values, cplx pilot_amp,
                                 double sigma2, const Alphabet& alphabet,
                                 const BuildOptions& opts = {}) {
    return detail::assemble(detail::coeffs_from(taps, layout.dims, opts.pulse), layout,
                            det_values, pilot_amp, sigma2, alphabet, opts);
}

/// Residual ||y - H x||^2 of a decision vector (alphabet indices).
inline double residual(const SparseSystem& sys, const std::vector<int>& decisions) {
    double total = 0.0;
    for (const SystemRow& row : sys.rows) {
        cplx acc = row.observation;
        for (const auto& [v, h] : row.coeffs)
            acc -= h * sys.alphabet->point(decisions[static_cast<std::size_t>(v)]);
        total += std::norm(acc);
    }
    return total;
}

struct MpResult {
    std::vector<int> decisions;   // alphabet index per data cell
    int iterations = 0;           // iterations actually run
    bool converged = false;
    double belief_sum_error = 0.0;  // worst |sum(p) - 1| seen across messages
};

/**
 * Message-passing detection on the observation/variable graph. Observation
 * messages summarize interference-plus-noise as a Gaussian from the current
 * symbol beliefs; variable messages are damped probability vectors over the
 * alphabet. Stops when the largest belief change drops below 1e-6 or after
 * max_iter sweeps, and returns the per-variable argmax decisions either way.
 */
inline MpResult mp_detect(const SparseSystem& sys, int max_iter = 30, double damping = 0.6) {
    const Alphabet& a = *sys.alphabet;
    const int q_size = a.order();
    const double sigma2 = std::max(sys.sigma2, 1e-12);

    // Edge layout: flatten per-row coefficient lists and index them per variable.
    struct Edge {
        int row;
        int var;
        cplx h;
    };
    std::vector<Edge> edges;
    for (int r = 0; r < static_cast<int>(sys.rows.size()); ++r)
        for (const auto& [v, h] : sys.rows[static_cast<std::size_t>(r)].coeffs)
            edges.push_back({r, v, h});
    std::vector<std::vector<int>> var_edges(static_cast<std::size_t>(sys.n_vars));
    for (int e = 0; e < static_cast<int>(edges.size()); ++e)
        var_edges[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].var)].push_back(e);

    MpResult result;
    result.decisions.assign(static_cast<std::size_t>(sys.n_vars), 0);
    if (edges.empty()) return result;

    const std::size_t q_sz = static_cast<std::size_t>(q_size);
    std::vector<double> msg(edges.size() * q_sz, 1.0 / q_size);  // variable -> observation
    std::vector<double> loglik(edges.size() * q_sz, 0.0);        // observation -> variable
    std::vector<double> belief(static_cast<std::size_t>(sys.n_vars) * q_sz, 1.0 / q_size);

    // Per-edge symbol moments under the current message.
    std::vector<cplx> edge_mean(edges.size());
    std::vector<double> edge_e2(edges.size());

    std::vector<double> work(q_sz);
    for (int iter = 1; iter <= max_iter; ++iter) {
        result.iterations = iter;

        for (std::size_t e = 0; e < edges.size(); ++e) {
            cplx mean = 0.0;
            double e2 = 0.0;
            for (std::size_t s = 0; s < q_sz; ++s) {
                const double p = msg[e * q_sz + s];
                mean += p * a.point(static_cast<int>(s));
                e2 += p * std::norm(a.point(static_cast<int>(s)));
            }
            edge_mean[e] = mean;
            edge_e2[e] = e2;
        }

        // Gaussian interference summary per row, then leave-one-out per edge.
        std::vector<cplx> row_mean(sys.rows.size(), cplx{});
        std::vector<double> row_var(sys.rows.size(), 0.0);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const Edge& ed = edges[e];
            row_mean[static_cast<std::size_t>(ed.row)] += ed.h * edge_mean[e];
            row_var[static_cast<std::size_t>(ed.row)] +=
                std::norm(ed.h) * (edge_e2[e] - std::norm(edge_mean[e]));
        }
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const Edge& ed = edges[e];
            const SystemRow& row = sys.rows[static_cast<std::size_t>(ed.row)];
            const cplx mu = row_mean[static_cast<std::size_t>(ed.row)] - ed.h * edge_mean[e];
            const double var =
                std::max(row_var[static_cast<std::size_t>(ed.row)] -
                             std::norm(ed.h) * (edge_e2[e] - std::norm(edge_mean[e])),
                         0.0) +
                sigma2;
            for (std::size_t s = 0; s < q_sz; ++s) {
                const cplx res = row.observation - mu - ed.h * a.point(static_cast<int>(s));
                loglik[e * q_sz + s] = -std::norm(res) / var;
            }
        }

        // Variable updates: total log-likelihood, leave-one-out messages with
        // damping, and fresh beliefs.
        double max_change = 0.0;
        for (int v = 0; v < sys.n_vars; ++v) {
            const auto& incident = var_edges[static_cast<std::size_t>(v)];
            if (incident.empty()) continue;
            std::vector<double> total(q_sz, 0.0);
            for (int e : incident)
                for (std::size_t s = 0; s < q_sz; ++s)
                    total[s] += loglik[static_cast<std::size_t>(e) * q_sz + s];

            for (int e : incident) {
                double peak = -1e300;
                for (std::size_t s = 0; s < q_sz; ++s) {
                    work[s] = total[s] - loglik[static_cast<std::size_t>(e) * q_sz + s];
                    peak = std::max(peak, work[s]);
                }
                double norm_sum = 0.0;
                for (std::size_t s = 0; s < q_sz; ++s) {
                    work[s] = std::exp(work[s] - peak);
                    norm_sum += work[s];
                }
                double check = 0.0;
                for (std::size_t s = 0; s < q_sz; ++s) {
                    double& slot = msg[static_cast<std::size_t>(e) * q_sz + s];
                    slot = damping * (work[s] / norm_sum) + (1.0 - damping) * slot;
                    check += slot;
                }
                result.belief_sum_error = std::max(result.belief_sum_error, std::abs(check - 1.0));
            }

            double peak = -1e300;
            for (std::size_t s = 0; s < q_sz; ++s) peak = std::max(peak, total[s]);
            double norm_sum = 0.0;
            for (std::size_t s = 0; s < q_sz; ++s) {
                work[s] = std::exp(total[s] - peak);
                norm_sum += work[s];
            }
            for (std::size_t s = 0; s < q_sz; ++s) {
                const double b = work[s] / norm_sum;
                max_change =
                    std::max(max_change, std::abs(b - belief[static_cast<std::size_t>(v) * q_sz + s]));
                belief[static_cast<std::size_t>(v) * q_sz + s] = b;
            }
        }

        if (max_change < 1e-6) {
            result.converged = true;
            break;
        }
    }

    for (int v = 0; v < sys.n_vars; ++v) {
        int best = 0;
        double best_p = belief[static_cast<std::size_t>(v) * q_sz];
        for (int s = 1; s < q_size; ++s) {
            const double p = belief[static_cast<std::size_t>(v) * q_sz + static_cast<std::size_t>(s)];
            if (p > best_p) {
                best_p = p;
                best = s;
            }
        }
        result.decisions[static_cast<std::size_t>(v)] = best;
    }
    return result;
}

/**
 * Exact minimizer of ||y - H x||^2 by exhaustive enumeration, lexicographic
 * over variable indices with alphabet index order; the first best hypothesis
 * wins ties. Guarded to at most 12 variables.
 */
inline std::vector<int> map_detect_exhaustive(const SparseSystem& sys) {
    if (sys.n_vars > 12)
        throw std::invalid_argument("map_detect_exhaustive: " + std::to_string(sys.n_vars) +
                                    " variables exceeds the 12-variable guard");
    std::vector<int> current(static_cast<std::size_t>(sys.n_vars), 0);
    std::vector<int> best = current;
    double best_res = residual(sys, current);
    while (true) {
        // Odometer increment, least significant at the highest variable index.
        int pos = sys.n_vars - 1;
        while (pos >= 0 && current[static_cast<std::size_t>(pos)] == sys.alphabet->order() - 1) {
            current[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++current[static_cast<std::size_t>(pos)];
        const double r = residual(sys, current);
        if (r < best_res) {
            best_res = r;
            best = current;
        }
    }
    return best;
}

}  // namespace otfs

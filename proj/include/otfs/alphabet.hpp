#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "otfs/common.hpp"

namespace otfs {

/**
 * Gray-mapped square QAM with unit average symbol energy.
 *
 * A symbol index is its bit pattern read MSB-first: the first half of the
 * bits selects the in-phase level, the second half the quadrature level.
 * Per-axis levels are Gray ordered so that neighbouring levels differ in
 * exactly one bit:
 *   order 4:  code 0 -> +1, code 1 -> -1            (scaled by 1/sqrt(2))
 *   order 16: codes 00,01,11,10 -> -3,-1,+1,+3      (scaled by 1/sqrt(10))
 */
class Alphabet {
public:
    static Alphabet qam(int order) {
        if (order == 4) return Alphabet(order, {+1.0, -1.0}, 1.0 / std::sqrt(2.0));
        if (order == 16) return Alphabet(order, {-3.0, -1.0, +3.0, +1.0}, 1.0 / std::sqrt(10.0));
        throw std::invalid_argument("Alphabet: unsupported QAM order " + std::to_string(order));
    }

    int order() const { return order_; }
    int bit_width() const { return bit_width_; }
    const std::vector<cplx>& points() const { return points_; }
    const cplx& point(int index) const { return points_[static_cast<std::size_t>(index)]; }

    /// Bits of a symbol index, MSB first.
    void index_to_bits(int index, std::uint8_t* out) const {
        for (int b = 0; b < bit_width_; ++b)
            out[b] = static_cast<std::uint8_t>((index >> (bit_width_ - 1 - b)) & 1);
    }

    /// Nearest constellation point by Euclidean distance; lowest index wins ties.
    int nearest(cplx y) const {
        int best = 0;
        double best_d2 = std::norm(y - points_[0]);
        for (int i = 1; i < order_; ++i) {
            const double d2 = std::norm(y - points_[static_cast<std::size_t>(i)]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = i;
            }
        }
        return best;
    }

private:
    Alphabet(int order, std::vector<double> axis_levels, double scale) : order_(order) {
        bit_width_ = 0;
        while ((1 << bit_width_) < order) ++bit_width_;
        const int half = bit_width_ / 2;
        const int axis_size = 1 << half;
        points_.resize(static_cast<std::size_t>(order));
        for (int idx = 0; idx < order; ++idx) {
            const int code_i = idx >> half;
            const int code_q = idx & (axis_size - 1);
            points_[static_cast<std::size_t>(idx)] =
                cplx(axis_levels[static_cast<std::size_t>(code_i)],
                     axis_levels[static_cast<std::size_t>(code_q)]) *
                scale;
        }
    }

    int order_ = 0;
    int bit_width_ = 0;
    std::vector<cplx> points_;
};

/// Map a bit sequence to symbols, bit_width bits per symbol, MSB first.
inline std::vector<cplx> modulate_bits(const std::vector<std::uint8_t>& bits, const Alphabet& a) {
    const std::size_t w = static_cast<std::size_t>(a.bit_width());
    if (bits.size() % w != 0)
        throw std::invalid_argument("modulate_bits: bit count " + std::to_string(bits.size()) +
                                    " is not divisible by the symbol width " + std::to_string(w));
    std::vector<cplx> out;
    out.reserve(bits.size() / w);
    for (std::size_t i = 0; i < bits.size(); i += w) {
        int idx = 0;
        for (std::size_t b = 0; b < w; ++b) idx = (idx << 1) | (bits[i + b] & 1);
        out.push_back(a.point(idx));
    }
    return out;
}

/// Hard-decision demapping: nearest point, exact inverse of modulate_bits.
inline std::vector<std::uint8_t> demodulate(const std::vector<cplx>& symbols, const Alphabet& a) {
    std::vector<std::uint8_t> bits(symbols.size() * static_cast<std::size_t>(a.bit_width()));
    std::size_t pos = 0;
    for (const cplx& s : symbols) {
        a.index_to_bits(a.nearest(s), bits.data() + pos);
        pos += static_cast<std::size_t>(a.bit_width());
    }
    return bits;
}

}  // namespace otfs

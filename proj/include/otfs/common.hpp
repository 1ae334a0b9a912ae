#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace otfs {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Floor modulus: result in [0, n) for any integer a.
inline int mod_floor(int a, int n) {
    int r = a % n;
    return r < 0 ? r + n : r;
}

inline cplx unit_phasor(double angle) { return {std::cos(angle), std::sin(angle)}; }

/**
 * Deterministic random source. mt19937_64 output is fully specified by the
 * standard; the distributions below are hand-rolled because the standard
 * library distribution sequences are implementation-defined, which would
 * break the bit-exact reproducibility contract of the simulation harness.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Independent substream keyed by (seed, stream, substream).
    Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          static_cast<std::uint32_t>(substream),
                          static_cast<std::uint32_t>(substream >> 32)};
        gen_.seed(seq);
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// One random bit.
    std::uint8_t bit() { return static_cast<std::uint8_t>(gen_() >> 63); }

    /// Standard normal (Box-Muller; caches the second draw of each pair).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// Circularly symmetric complex Gaussian CN(0, variance).
    cplx complex_gaussian(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = gaussian();
        const double im = gaussian();
        return {s * re, s * im};
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace otfs

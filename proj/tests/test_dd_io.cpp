#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "otfs/dd_io.hpp"

using namespace otfs;

namespace {

// Independent naive evaluations of the three relations, written directly from
// their defining sums. These stay separate from the library path on purpose.

DDFrame oracle_integer(const DDFrame& x, const TapSet& taps) {
    const int n = x.n(), m = x.m();
    DDFrame y(x.dims());
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l) {
            cplx acc = 0.0;
            for (const Tap& t : taps.taps) {
                const cplx hh = t.gain * std::exp(cplx(0.0, -2.0 * kPi * t.doppler_tap *
                                                                t.delay_tap / (n * m)));
                acc += hh * x.at_mod(k - t.doppler_tap, l - t.delay_tap);
            }
            y.at(k, l) = acc;
        }
    return y;
}

cplx oracle_hbar(cplx h, int kp, int lp, double kappa, int q, int n, int m) {
    const cplx num = std::exp(cplx(0.0, 2.0 * kPi * (-q - kappa))) - 1.0;
    const cplx den = static_cast<double>(n) * std::exp(cplx(0.0, 2.0 * kPi * (-q - kappa) / n)) -
                     static_cast<double>(n);
    const cplx phase = std::exp(cplx(0.0, -2.0 * kPi * (kp + kappa) * lp / (n * m)));
    return (num / den) * h * phase;
}

DDFrame oracle_fractional(const DDFrame& x, const TapSet& taps) {
    const int n = x.n(), m = x.m();
    DDFrame y(x.dims());
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l) {
            cplx acc = 0.0;
            for (const Tap& t : taps.taps)
                for (int q = 0; q < n; ++q) {
                    cplx g;
                    if (q == 0 && t.doppler_frac == 0.0)
                        g = t.gain * std::exp(cplx(0.0, -2.0 * kPi * t.doppler_tap * t.delay_tap /
                                                            (n * m)));
                    else
                        g = oracle_hbar(t.gain, t.doppler_tap, t.delay_tap, t.doppler_frac, q, n,
                                        m);
                    acc += g * x.at_mod(k - t.doppler_tap + q, l - t.delay_tap);
                }
            y.at(k, l) = acc;
        }
    return y;
}

DDFrame oracle_rect(const DDFrame& x, const TapSet& taps) {
    const int n = x.n(), m = x.m();
    DDFrame y(x.dims());
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < m; ++l) {
            cplx acc = 0.0;
            for (const Tap& t : taps.taps) {
                cplx alpha = std::exp(
                    cplx(0.0, 2.0 * kPi * (l - t.delay_tap) * t.doppler_tap / (1.0 * m * n)));
                if (l < t.delay_tap)
                    alpha *= (n - 1.0) / n *
                             std::exp(cplx(0.0, -2.0 * kPi * mod_floor(k - t.doppler_tap, n) / n));
                acc += t.gain * alpha * x.at_mod(k - t.doppler_tap, l - t.delay_tap);
            }
            y.at(k, l) = acc;
        }
    return y;
}

DDFrame random_frame(const GridDims& dims, Rng& rng) {
    DDFrame x(dims);
    for (cplx& c : x.cells()) c = rng.complex_gaussian(1.0);
    return x;
}

TapSet random_integer_taps(int count, int max_k, int max_l, Rng& rng) {
    TapSet taps;
    taps.mode = DopplerMode::Integer;
    for (int i = 0; i < count; ++i) {
        Tap t;
        t.gain = rng.complex_gaussian(1.0 / count);
        t.doppler_tap = static_cast<int>(rng.next_u64() % (2 * max_k + 1)) - max_k;
        t.delay_tap = static_cast<int>(rng.next_u64() % (max_l + 1));
        if (std::none_of(taps.taps.begin(), taps.taps.end(), [&](const Tap& u) {
                return u.delay_tap == t.delay_tap && u.doppler_tap == t.doppler_tap;
            }))
            taps.taps.push_back(t);
    }
    return taps;
}

}  // namespace

TEST_CASE("identity path is the identity channel") {
    Rng rng(3);
    const GridDims dims(8, 8);
    const DDFrame x = random_frame(dims, rng);
    TapSet taps;
    taps.mode = DopplerMode::Integer;
    taps.taps.push_back({cplx{1.0, 0.0}, 0, 0, 0.0});
    CHECK(max_abs_diff(apply_ideal_integer(x, taps), x) < 1e-15);
}

TEST_CASE("single-path delta frame picks up the tap phase") {
    const GridDims dims(4, 4);
    DDFrame x(dims);
    x.at(0, 0) = 1.0;
    TapSet taps;
    taps.mode = DopplerMode::Integer;
    taps.taps.push_back({cplx{1.0, 0.0}, 1, 1, 0.0});
    const DDFrame y = apply_ideal_integer(x, taps);
    CHECK(std::abs(y.at(1, 1) - unit_phasor(-kPi / 8.0)) < 1e-15);
    double rest = 0.0;
    for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l)
            if (k != 1 || l != 1) rest += std::abs(y.at(k, l));
    CHECK(rest == 0.0);
}

TEST_CASE("integer relation matches the naive double loop") {
    Rng rng(17);
    const GridDims dims(8, 8);
    for (int rep = 0; rep < 20; ++rep) {
        const DDFrame x = random_frame(dims, rng);
        const TapSet taps = random_integer_taps(3, 2, 4, rng);
        CHECK(max_abs_diff(apply_ideal_integer(x, taps), oracle_integer(x, taps)) < 1e-12);
    }
}

TEST_CASE("integer relation rejects fractional taps") {
    const GridDims dims(8, 8);
    TapSet taps;
    taps.mode = DopplerMode::Fractional;
    taps.taps.push_back({cplx{1.0, 0.0}, 0, 0, 0.3});
    const DDFrame x(dims);
    CHECK_THROWS_AS(apply_ideal_integer(x, taps), std::invalid_argument);
    TapSet integer;
    integer.mode = DopplerMode::Integer;
    CHECK_THROWS_AS(apply_ideal_fractional(x, integer), std::invalid_argument);
}

TEST_CASE("Doppler-spread gain values") {
    const GridDims dims(8, 8);
    // Removable singularity reduces to the integer gain.
    CHECK(std::abs(fractional_gain(cplx{1.0, 0.0}, 0, 0, 0.0, 0, dims) - cplx{1.0, 0.0}) <
          1e-15);
    // kappa = 0 with q != 0 vanishes.
    for (int q = 1; q < 8; ++q)
        CHECK(std::abs(fractional_gain(cplx{1.0, 0.0}, 0, 0, 0.0, q, dims)) < 1e-14);
    // Frozen closed-form value at N=8, kappa=1/2, q=0.
    const cplx g = fractional_gain(cplx{1.0, 0.0}, 0, 0, 0.5, 0, dims);
    CHECK(g.real() == Catch::Approx(0.125).margin(1e-12));
    CHECK(g.imag() == Catch::Approx(-0.6284174365157311).margin(1e-12));
}

TEST_CASE("Doppler-spread gains sum to the full-resolution tap gain") {
    const GridDims dims(16, 32);
    Rng rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        const cplx h = rng.complex_gaussian(1.0);
        const int kp = static_cast<int>(rng.next_u64() % 9) - 4;
        const int lp = static_cast<int>(rng.next_u64() % 12);
        const double kappa = rng.uniform(-0.499, 0.5);
        cplx sum = 0.0;
        for (int q = 0; q < dims.n; ++q) sum += fractional_gain(h, kp, lp, kappa, q, dims);
        const cplx expected =
            h * unit_phasor(-2.0 * kPi * (kp + kappa) * lp / (dims.n * dims.m));
        CHECK(std::abs(sum - expected) < 1e-12);
    }

    // Equivalently: a constant Doppler column passes through a single path
    // with exactly that summed gain.
    DDFrame x(dims);
    const cplx c{0.8, -0.3};
    for (int k = 0; k < dims.n; ++k) x.at(k, 2) = c;
    TapSet taps;
    taps.mode = DopplerMode::Fractional;
    taps.taps.push_back({cplx{0.5, 0.9}, 3, 7, 0.41});
    const DDFrame y = apply_ideal_fractional(x, taps);
    const cplx expected =
        c * cplx{0.5, 0.9} * unit_phasor(-2.0 * kPi * (3 + 0.41) * 7 / (dims.n * dims.m));
    for (int k = 0; k < dims.n; ++k) CHECK(std::abs(y.at(k, 9) - expected) < 1e-12);
}

TEST_CASE("fractional relation with zero kappa reduces to the integer relation") {
    Rng rng(29);
    const GridDims dims(16, 16);
    for (int rep = 0; rep < 10; ++rep) {
        const DDFrame x = random_frame(dims, rng);
        TapSet frac = random_integer_taps(3, 3, 5, rng);
        frac.mode = DopplerMode::Fractional;
        TapSet integer = frac;
        integer.mode = DopplerMode::Integer;
        CHECK(max_abs_diff(apply_ideal_fractional(x, frac), apply_ideal_integer(x, integer)) <
              1e-12);
    }
}

TEST_CASE("fractional relation matches the naive triple loop") {
    Rng rng(31);
    const GridDims dims(8, 8);
    for (int rep = 0; rep < 10; ++rep) {
        const DDFrame x = random_frame(dims, rng);
        TapSet taps;
        taps.mode = DopplerMode::Fractional;
        for (int i = 0; i < 2; ++i)
            taps.taps.push_back({rng.complex_gaussian(0.5),
                                 static_cast<int>(rng.next_u64() % 5) - 2,
                                 static_cast<int>(rng.next_u64() % 4),
                                 rng.uniform(-0.499, 0.5)});
        CHECK(max_abs_diff(apply_ideal_fractional(x, taps), oracle_fractional(x, taps)) < 1e-12);
    }
}

TEST_CASE("fractional single path leaks into every Doppler bin") {
    const GridDims dims(16, 16);
    DDFrame x(dims);
    x.at(0, 0) = 1.0;
    TapSet taps;
    taps.mode = DopplerMode::Fractional;
    taps.taps.push_back({cplx{1.0, 0.0}, 2, 3, 0.4});
    const DDFrame y = apply_ideal_fractional(x, taps);
    for (int k = 0; k < dims.n; ++k) CHECK(std::abs(y.at(k, 3)) > 1e-12);
    for (int l = 0; l < dims.m; ++l)
        if (l != 3)
            for (int k = 0; k < dims.n; ++k) CHECK(std::abs(y.at(k, l)) < 1e-12);
}

TEST_CASE("kappa to zero is continuous") {
    Rng rng(37);
    const GridDims dims(16, 16);
    const DDFrame x = random_frame(dims, rng);
    TapSet frac = random_integer_taps(3, 3, 5, rng);
    frac.mode = DopplerMode::Fractional;
    TapSet integer = frac;
    integer.mode = DopplerMode::Integer;
    for (Tap& t : frac.taps) t.doppler_frac = 1e-9;
    CHECK(max_abs_diff(apply_ideal_fractional(x, frac), apply_ideal_integer(x, integer)) < 1e-6);
}

TEST_CASE("rectangular phase branches") {
    const GridDims dims(4, 4);
    // l = l' gives 1 on the first branch.
    CHECK(std::abs(rect_phase(2, 3, 1, 3, dims) - cplx{1.0, 0.0}) < 1e-15);
    // Moduli: 1 at or beyond the path delay, (N-1)/N before it.
    for (int l = 0; l < 4; ++l) {
        const double mag = std::abs(rect_phase(0, l, 1, 2, dims));
        if (l >= 2)
            CHECK(mag == Catch::Approx(1.0));
        else
            CHECK(mag == Catch::Approx(3.0 / 4.0));
    }
    // Worked wrap-branch value at N=M=4, k=0, k'=1, l=0, l'=1.
    const cplx expect = 0.75 * unit_phasor(2.0 * kPi * (-0.25) * 0.25) *
                        unit_phasor(-2.0 * kPi * (3.0 / 4.0));
    CHECK(std::abs(rect_phase(0, 0, 1, 1, dims) - expect) < 1e-15);
}

TEST_CASE("rectangular relation matches the naive loop") {
    Rng rng(41);
    const GridDims dims(8, 8);
    for (int rep = 0; rep < 10; ++rep) {
        const DDFrame x = random_frame(dims, rng);
        const TapSet taps = random_integer_taps(3, 2, 4, rng);
        CHECK(max_abs_diff(apply_rect_integer(x, taps), oracle_rect(x, taps)) < 1e-12);
    }
}

TEST_CASE("rectangular relation with zero-delay taps matches the ideal relation") {
    Rng rng(43);
    const GridDims dims(8, 8);
    const DDFrame x = random_frame(dims, rng);
    TapSet taps;
    taps.mode = DopplerMode::Integer;
    taps.taps.push_back({cplx{0.8, -0.1}, 2, 0, 0.0});
    // With l' = 0 both relations use the bare gain; the rectangular one also
    // applies the slot-progressive phase e^{j2pi l k'/(MN)}.
    const DDFrame yr = apply_rect_integer(x, taps);
    const DDFrame yi = apply_ideal_integer(x, taps);
    for (int k = 0; k < dims.n; ++k)
        for (int l = 0; l < dims.m; ++l) {
            const cplx expected =
                yi.at(k, l) * unit_phasor(2.0 * kPi * l * taps.taps[0].doppler_tap /
                                          (1.0 * dims.m * dims.n));
            CHECK(std::abs(yr.at(k, l) - expected) < 1e-12);
        }
}

TEST_CASE("linearity of every relation") {
    Rng rng(47);
    const GridDims dims(8, 8);
    const DDFrame x1 = random_frame(dims, rng);
    const DDFrame x2 = random_frame(dims, rng);
    const cplx a{0.7, -0.4}, b{-1.1, 0.2};
    DDFrame mix(dims);
    for (std::size_t i = 0; i < mix.size(); ++i)
        mix.cells()[i] = a * x1.cells()[i] + b * x2.cells()[i];

    TapSet integer = random_integer_taps(3, 2, 4, rng);
    TapSet frac = integer;
    frac.mode = DopplerMode::Fractional;
    for (Tap& t : frac.taps) t.doppler_frac = 0.31;

    auto check_linear = [&](auto&& apply) {
        const DDFrame y1 = apply(x1), y2 = apply(x2), ym = apply(mix);
        double worst = 0.0;
        for (std::size_t i = 0; i < ym.size(); ++i)
            worst = std::max(worst,
                             std::abs(ym.cells()[i] - a * y1.cells()[i] - b * y2.cells()[i]));
        CHECK(worst < 1e-12);
    };
    check_linear([&](const DDFrame& f) { return apply_ideal_integer(f, integer); });
    check_linear([&](const DDFrame& f) { return apply_rect_integer(f, integer); });
    check_linear([&](const DDFrame& f) { return apply_ideal_fractional(f, frac); });
}

TEST_CASE("circular shift covariance in delay") {
    Rng rng(53);
    const GridDims dims(8, 8);
    const DDFrame x = random_frame(dims, rng);
    DDFrame shifted(dims);
    for (int k = 0; k < dims.n; ++k)
        for (int l = 0; l < dims.m; ++l) shifted.at(k, l) = x.at_mod(k, l - 1);

    TapSet tap_a;
    tap_a.mode = DopplerMode::Integer;
    tap_a.taps.push_back({cplx{0.9, 0.3}, 2, 3, 0.0});
    TapSet tap_b = tap_a;
    tap_b.taps[0].delay_tap = 4;

    // Delaying the input by one bin equals advancing the path delay by one
    // bin, up to the deterministic tap-phase ratio.
    const cplx ratio = integer_tap_gain(cplx{1.0, 0.0}, 2, 4, dims) /
                       integer_tap_gain(cplx{1.0, 0.0}, 2, 3, dims);
    const DDFrame ya = apply_ideal_integer(shifted, tap_a);
    const DDFrame yb = apply_ideal_integer(x, tap_b);
    double worst = 0.0;
    for (std::size_t i = 0; i < ya.size(); ++i)
        worst = std::max(worst, std::abs(ya.cells()[i] * ratio - yb.cells()[i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("noise injection") {
    Rng rng(59);
    const GridDims dims(8, 8);
    const DDFrame x = random_frame(dims, rng);

    NoiseModel off = NoiseModel::noiseless();
    CHECK(max_abs_diff(add_awgn(x, off, rng), x) == 0.0);

    // Same substream gives the identical frame.
    NoiseModel nm = NoiseModel::from_snr(0.0, 30.0);
    Rng r1(7, 1, 2), r2(7, 1, 2);
    CHECK(max_abs_diff(add_awgn(x, nm, r1), add_awgn(x, nm, r2)) == 0.0);

    // Sample variance over 1e6 cells at sigma2 = 1.
    const GridDims big(1000, 1000);
    DDFrame zero(big);
    NoiseModel unit;
    unit.sigma2 = 1.0;
    Rng r3(11);
    const DDFrame noisy = add_awgn(zero, unit, r3);
    double var = 0.0;
    for (const cplx& c : noisy.cells()) var += std::norm(c);
    var /= static_cast<double>(big.cells());
    CHECK(var == Catch::Approx(1.0).margin(0.01));

    NoiseModel bad;
    bad.sigma2 = -1.0;
    CHECK_THROWS_AS(add_awgn(x, bad, rng), std::invalid_argument);
}

TEST_CASE("pilot amplitude follows the pilot SNR") {
    const NoiseModel nm = NoiseModel::from_snr(10.0, 30.0);
    CHECK(nm.sigma2 == Catch::Approx(0.1));
    CHECK(nm.pilot_amp() == Catch::Approx(std::sqrt(0.1) * std::pow(10.0, 1.5)));
}

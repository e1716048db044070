#include <cmath>
#include <complex>

#include "doctest.h"
#include "kinfluid/operators.hpp"
#include "kinfluid/rng.hpp"
#include "kinfluid/transform.hpp"

using namespace kinfluid;

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Independent O(n^dim) direct DFT for a single mode; the oracle against which
// the FFT path is checked.
std::complex<double> direct_dft(const PhysicalField& f, int c, int kx, int ky, int kz) {
    const GridSpec& g = f.grid;
    std::complex<double> acc{0.0, 0.0};
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int ix, iy, iz;
        cell_coords(g, idx, ix, iy, iz);
        double arg = -kTwoPi * (static_cast<double>(kx) * ix + static_cast<double>(ky) * iy +
                                static_cast<double>(kz) * iz) /
                     g.n;
        acc += f.comp(c)[idx] * std::complex<double>{std::cos(arg), std::sin(arg)};
    }
    return acc / static_cast<double>(m);
}

PhysicalField random_field(const GridSpec& g, int comps, std::uint64_t seed) {
    PhysicalField f(g, comps);
    CounterRng rng(seed, 7);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 2.0 * rng.uniform(i) - 1.0;
    return f;
}

// Random mean-free divergence-free smooth field.
SpectralField random_divfree(const GridSpec& g, std::uint64_t seed) {
    SpectralField F(g, g.dim);
    PhysicalField f = random_field(g, g.dim, seed);
    F = leray_project(dealias(to_spectral(f)));
    return F;
}

std::size_t coeff_index(const GridSpec& g, int kx, int ky, int kz) {
    auto widx = [&](int k) { return (k % g.n + g.n) % g.n; };
    return cell_index(g, widx(kx), widx(ky), widx(kz));
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(GridSpec(4, 16), ConfigError);
    CHECK_THROWS_AS(GridSpec(3, 12), ConfigError);
    CHECK_THROWS_AS(GridSpec(3, 2), ConfigError);
    GridSpec g(3, 16);
    CHECK(g.cells() == 4096);
    CHECK(g.h() == doctest::Approx(1.0 / 16));
}

TEST_CASE("constant field transforms to a pure zero mode") {
    GridSpec g(2, 16);
    PhysicalField f(g, 1);
    for (auto& v : f.values) v = 3.25;
    SpectralField F = to_spectral(f);
    CHECK(F.coeffs[0].real() == doctest::Approx(3.25).epsilon(1e-14));
    CHECK(std::abs(F.coeffs[0].imag()) < 1e-13);
    double off = 0.0;
    for (std::size_t i = 1; i < F.coeffs.size(); ++i) off = std::max(off, std::abs(F.coeffs[i]));
    CHECK(off < 1e-13);
}

TEST_CASE("transform round-trip is the identity to 1e-12") {
    for (int dim : {2, 3}) {
        GridSpec g(dim, 16);
        PhysicalField f = random_field(g, dim, 42 + dim);
        PhysicalField back = to_physical(to_spectral(f));
        double scale = linf_norm(f);
        double err = 0.0;
        for (std::size_t i = 0; i < f.values.size(); ++i)
            err = std::max(err, std::abs(back.values[i] - f.values[i]));
        CHECK(err <= 1e-12 * scale);
    }
}

TEST_CASE("sin(2 pi x1) lands on the k=(1,0,0) pair with magnitude 1/2") {
    GridSpec g(3, 16);
    PhysicalField f(g, 1);
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int ix, iy, iz;
        cell_coords(g, idx, ix, iy, iz);
        f.comp(0)[idx] = std::sin(kTwoPi * ix / g.n);
    }
    SpectralField F = to_spectral(f);

    std::complex<double> cp = F.comp(0)[coeff_index(g, 1, 0, 0)];
    std::complex<double> cm = F.comp(0)[coeff_index(g, -1, 0, 0)];
    CHECK(std::abs(cp) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(cm) == doctest::Approx(0.5).epsilon(1e-12));
    // against the direct DFT oracle
    std::complex<double> oracle = direct_dft(f, 0, 1, 0, 0);
    CHECK(std::abs(cp - oracle) < 1e-12);
    // everything else vanishes
    double rest = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == coeff_index(g, 1, 0, 0) || i == coeff_index(g, -1, 0, 0)) continue;
        rest = std::max(rest, std::abs(F.comp(0)[i]));
    }
    CHECK(rest < 1e-13);
}

TEST_CASE("single mode i/2 at k=(0,1,0) reconstructs -sin(2 pi x2)") {
    GridSpec g(3, 8);
    SpectralField F(g, 1);
    F.comp(0)[coeff_index(g, 0, 1, 0)] = {0.0, 0.5};
    F.comp(0)[coeff_index(g, 0, -1, 0)] = {0.0, -0.5};
    PhysicalField f = to_physical(F);
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int ix, iy, iz;
        cell_coords(g, idx, ix, iy, iz);
        CHECK(f.comp(0)[idx] ==
              doctest::Approx(-std::sin(kTwoPi * iy / g.n)).epsilon(1e-12).scale(1.0));
    }
    // and the direct-DFT oracle agrees on the coefficient we placed
    std::complex<double> oracle = direct_dft(f, 0, 0, 1, 0);
    CHECK(std::abs(oracle - std::complex<double>{0.0, 0.5}) < 1e-13);
}

TEST_CASE("zero coefficients give the zero field") {
    GridSpec g(2, 8);
    SpectralField F(g, 2);
    PhysicalField f = to_physical(F);
    CHECK(linf_norm(f) == 0.0);
}

TEST_CASE("hermitian symmetry violation is rejected") {
    GridSpec g(2, 8);
    SpectralField F(g, 1);
    F.comp(0)[coeff_index(g, 1, 0, 0)] = {0.3, 0.4};  // no conjugate partner
    CHECK_THROWS_AS(to_physical(F), DataError);
}

TEST_CASE("leray annihilates gradients and fixes divergence-free fields") {
    GridSpec g(3, 16);
    // gradient field: coefficients parallel to k
    SpectralField G(g, 3);
    CounterRng rng(11, 0);
    const std::size_t m = g.cells();
    for (std::size_t idx = 1; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        std::complex<double> phi{rng.uniform(2 * idx) - 0.5, rng.uniform(2 * idx + 1) - 0.5};
        for (int d = 0; d < 3; ++d) G.comp(d)[idx] = phi * static_cast<double>(k[d]);
    }
    SpectralField PG = leray_project(G);
    double mx = 0.0;
    for (const auto& z : PG.coeffs) mx = std::max(mx, std::abs(z));
    CHECK(mx < 1e-13);

    // divergence-free input is unchanged to 1e-14
    SpectralField W = random_divfree(g, 5);
    SpectralField PW = leray_project(W);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < W.coeffs.size(); ++i) {
        diff = std::max(diff, std::abs(PW.coeffs[i] - W.coeffs[i]));
        scale = std::max(scale, std::abs(W.coeffs[i]));
    }
    CHECK(diff <= 1e-14 * std::max(1.0, scale));
}

TEST_CASE("leray on k=(1,0,0): e1 content dies, e2 content survives") {
    GridSpec g(3, 8);
    SpectralField F(g, 3);
    std::size_t ip = coeff_index(g, 1, 0, 0), in = coeff_index(g, -1, 0, 0);
    F.comp(0)[ip] = {0.7, 0.1};
    F.comp(0)[in] = {0.7, -0.1};
    SpectralField P1 = leray_project(F);
    // hand computation: w - k (k.w)/|k|^2 with k=e1, w=c e1 -> 0
    for (int d = 0; d < 3; ++d) CHECK(std::abs(P1.comp(d)[ip]) < 1e-16);

    SpectralField F2(g, 3);
    F2.comp(1)[ip] = {0.7, 0.1};
    F2.comp(1)[in] = {0.7, -0.1};
    SpectralField P2 = leray_project(F2);
    CHECK(P2.comp(1)[ip] == F2.comp(1)[ip]);
    CHECK(std::abs(P2.comp(0)[ip]) == 0.0);
}

TEST_CASE("leray is idempotent, self-adjoint, and exactly mean-free") {
    GridSpec g(3, 8);
    PhysicalField a = random_field(g, 3, 101), b = random_field(g, 3, 202);
    SpectralField A = to_spectral(a), B = to_spectral(b);
    SpectralField PA = leray_project(A), PB = leray_project(B);

    // idempotence
    SpectralField PPA = leray_project(PA);
    double diff = 0.0;
    for (std::size_t i = 0; i < PA.coeffs.size(); ++i)
        diff = std::max(diff, std::abs(PPA.coeffs[i] - PA.coeffs[i]));
    CHECK(diff <= 1e-14);

    // self-adjointness <PA, B> = <A, PB>
    double lhs = l2_inner(PA, B), rhs = l2_inner(A, PB);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    // zero mode exactly zero
    for (int d = 0; d < 3; ++d) CHECK(std::abs(PA.comp(d)[0]) == 0.0);

    // per-mode divergence residual at the rounding floor
    double dres = 0.0, scale = 0.0;
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        std::complex<double> div{0.0, 0.0};
        for (int d = 0; d < 3; ++d) {
            div += static_cast<double>(k[d]) * PA.comp(d)[idx];
            scale = std::max(scale, std::abs(PA.comp(d)[idx]));
        }
        dres = std::max(dres, std::abs(div));
    }
    CHECK(dres <= 4e-15 * std::max(1.0, scale));
}

TEST_CASE("dealias: 2/3-rule thresholds and energy contraction") {
    GridSpec g(3, 16);
    SpectralField F(g, 1);
    F.comp(0)[coeff_index(g, 6, 0, 0)] = {1.0, 0.0};
    F.comp(0)[coeff_index(g, -6, 0, 0)] = {1.0, 0.0};
    F.comp(0)[coeff_index(g, 1, 1, 0)] = {0.5, 0.2};
    F.comp(0)[coeff_index(g, -1, -1, 0)] = {0.5, -0.2};
    SpectralField D = dealias(F);
    CHECK(std::abs(D.comp(0)[coeff_index(g, 6, 0, 0)]) == 0.0);   // 6 > 16/3
    CHECK(D.comp(0)[coeff_index(g, 1, 1, 0)] == F.comp(0)[coeff_index(g, 1, 1, 0)]);

    PhysicalField r = random_field(g, 1, 33);
    SpectralField R = to_spectral(r);
    CHECK(l2_norm_sq(dealias(R)) <= l2_norm_sq(R) * (1.0 + 1e-15));
}

TEST_CASE("parseval ties physical and spectral energies") {
    GridSpec g(2, 32);
    PhysicalField f = random_field(g, 1, 77);
    SpectralField F = to_spectral(f);
    KahanSum s;
    for (double v : f.values) s.add(v * v);
    double phys = s.value() / static_cast<double>(g.cells());
    CHECK(phys == doctest::Approx(l2_norm_sq(F)).epsilon(1e-12));
}

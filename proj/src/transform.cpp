#include "kinfluid/transform.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace kinfluid {

namespace {

// One forward/backward c2c plan pair per grid shape. Plans are created with
// FFTW_ESTIMATE (deterministic) and FFTW_UNALIGNED so they can execute on any
// caller buffer; execution via fftw_execute_dft is thread-safe.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

PlanPair& plans_for(const GridSpec& g) {
    static std::map<std::pair<int, int>, PlanPair> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    auto key = std::make_pair(g.dim, g.n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<std::complex<double>> scratch(g.cells());
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    PlanPair pp;
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (g.dim == 2) {
        pp.fwd = fftw_plan_dft_2d(g.n, g.n, buf, buf, FFTW_FORWARD, flags);
        pp.bwd = fftw_plan_dft_2d(g.n, g.n, buf, buf, FFTW_BACKWARD, flags);
    } else {
        pp.fwd = fftw_plan_dft_3d(g.n, g.n, g.n, buf, buf, FFTW_FORWARD, flags);
        pp.bwd = fftw_plan_dft_3d(g.n, g.n, g.n, buf, buf, FFTW_BACKWARD, flags);
    }
    return cache.emplace(key, pp).first->second;
}

}  // namespace

SpectralField to_spectral(const PhysicalField& f) {
    SpectralField F(f.grid, f.components);
    PlanPair& pp = plans_for(f.grid);
    const std::size_t m = f.grid.cells();
    const double scale = 1.0 / static_cast<double>(m);
    std::vector<std::complex<double>> buf(m);
    for (int c = 0; c < f.components; ++c) {
        const double* src = f.comp(c);
        for (std::size_t i = 0; i < m; ++i) buf[i] = {src[i], 0.0};
        auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_execute_dft(pp.fwd, raw, raw);
        std::complex<double>* dst = F.comp(c);
        for (std::size_t i = 0; i < m; ++i) dst[i] = buf[i] * scale;
    }
    return F;
}

double hermitian_violation(const SpectralField& F) {
    const GridSpec& g = F.grid;
    const int n = g.n;
    double worst = 0.0;
    for (int c = 0; c < F.components; ++c) {
        const std::complex<double>* a = F.comp(c);
        const std::size_t m = g.cells();
        for (std::size_t idx = 0; idx < m; ++idx) {
            int ix, iy, iz;
            cell_coords(g, idx, ix, iy, iz);
            int jx = (n - ix) % n, jy = (n - iy) % n, jz = (n - iz) % n;
            std::size_t mirror = cell_index(g, jx, jy, jz);
            worst = std::max(worst, std::abs(a[idx] - std::conj(a[mirror])));
        }
    }
    return worst;
}

PhysicalField to_physical(const SpectralField& F) {
    double scale = 0.0;
    for (const auto& z : F.coeffs) scale = std::max(scale, std::abs(z));
    double viol = hermitian_violation(F);
    if (viol > 1e-10 * std::max(1.0, scale))
        throw DataError("to_physical: Hermitian symmetry violated by " + std::to_string(viol));

    PhysicalField f(F.grid, F.components);
    PlanPair& pp = plans_for(F.grid);
    const std::size_t m = F.grid.cells();
    std::vector<std::complex<double>> buf(m);
    for (int c = 0; c < F.components; ++c) {
        const std::complex<double>* src = F.comp(c);
        for (std::size_t i = 0; i < m; ++i) buf[i] = src[i];
        auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_execute_dft(pp.bwd, raw, raw);
        double* dst = f.comp(c);
        for (std::size_t i = 0; i < m; ++i) dst[i] = buf[i].real();
    }
    return f;
}

}  // namespace kinfluid

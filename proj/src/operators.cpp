#include "kinfluid/operators.hpp"

#include <cmath>

namespace kinfluid {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
}

SpectralField leray_project(const SpectralField& F) {
    const GridSpec& g = F.grid;
    if (F.components != g.dim)
        throw DataError("leray_project: expected a vector field");
    SpectralField out = F;
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        double k2 = 0.0;
        for (int d = 0; d < g.dim; ++d) k2 += static_cast<double>(k[d]) * k[d];
        if (k2 == 0.0) {
            for (int d = 0; d < g.dim; ++d) out.comp(d)[idx] = {0.0, 0.0};
            continue;
        }
        std::complex<double> kdotw{0.0, 0.0};
        for (int d = 0; d < g.dim; ++d) kdotw += static_cast<double>(k[d]) * out.comp(d)[idx];
        std::complex<double> s = kdotw / k2;
        for (int d = 0; d < g.dim; ++d) out.comp(d)[idx] -= static_cast<double>(k[d]) * s;
    }
    return out;
}

bool mode_kept(const int k[3], int dim, int n) {
    for (int d = 0; d < dim; ++d)
        if (3 * std::abs(k[d]) > n) return false;
    return true;
}

SpectralField dealias(const SpectralField& F) {
    const GridSpec& g = F.grid;
    SpectralField out = F;
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        if (!mode_kept(k, g.dim, g.n))
            for (int c = 0; c < F.components; ++c) out.comp(c)[idx] = {0.0, 0.0};
    }
    return out;
}

SpectralField derivative(const SpectralField& F, int axis) {
    const GridSpec& g = F.grid;
    SpectralField out(g, F.components);
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        // The Nyquist mode has no well-defined odd derivative; drop it.
        double kd = (std::abs(k[axis]) == g.n / 2) ? 0.0 : static_cast<double>(k[axis]);
        std::complex<double> mult{0.0, kTwoPi * kd};
        for (int c = 0; c < F.components; ++c) out.comp(c)[idx] = mult * F.comp(c)[idx];
    }
    return out;
}

SpectralField gradient_tensor(const SpectralField& w) {
    const GridSpec& g = w.grid;
    if (w.components != g.dim)
        throw DataError("gradient_tensor: expected a vector field");
    SpectralField out(g, g.dim * g.dim);
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        for (int mdir = 0; mdir < g.dim; ++mdir) {
            double kd = (std::abs(k[mdir]) == g.n / 2) ? 0.0 : static_cast<double>(k[mdir]);
            std::complex<double> mult{0.0, kTwoPi * kd};
            for (int j = 0; j < g.dim; ++j)
                out.comp(j * g.dim + mdir)[idx] = mult * w.comp(j)[idx];
        }
    }
    return out;
}

SpectralField tensor_divergence(const SpectralField& T) {
    const GridSpec& g = T.grid;
    if (T.components != g.dim * g.dim)
        throw DataError("tensor_divergence: expected a dim*dim tensor field");
    SpectralField out(g, g.dim);
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        for (int j = 0; j < g.dim; ++j) {
            std::complex<double> acc{0.0, 0.0};
            for (int mdir = 0; mdir < g.dim; ++mdir) {
                double kd = (std::abs(k[mdir]) == g.n / 2) ? 0.0 : static_cast<double>(k[mdir]);
                std::complex<double> mult{0.0, kTwoPi * kd};
                acc += mult * T.comp(j * g.dim + mdir)[idx];
            }
            out.comp(j)[idx] = acc;
        }
    }
    return out;
}

}  // namespace kinfluid

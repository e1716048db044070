#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "kinfluid/util.hpp"

namespace kinfluid {

// Periodic box [0,1)^dim, n cells per axis, sample points at x_j = j/n.
// Unit volume means spatial means equal plain integrals and the k=0 Fourier
// coefficient equals the mean.
struct GridSpec {
    int dim = 3;
    int n = 16;

    GridSpec() = default;
    GridSpec(int dim_, int n_) : dim(dim_), n(n_) { validate(); }

    void validate() const {
        if (dim != 2 && dim != 3)
            throw ConfigError("grid.dim must be 2 or 3, got " + std::to_string(dim));
        if (n < 4 || !is_power_of_two(n))
            throw ConfigError("grid.n must be a power of two >= 4, got " + std::to_string(n));
    }

    std::size_t cells() const {
        std::size_t c = 1;
        for (int d = 0; d < dim; ++d) c *= static_cast<std::size_t>(n);
        return c;
    }

    double h() const { return 1.0 / n; }

    bool operator==(const GridSpec& o) const { return dim == o.dim && n == o.n; }
};

// Integer wavenumber for array index i: 0..n/2, then -(n/2-1)..-1.
inline int wavenumber(int idx, int n) { return idx <= n / 2 ? idx : idx - n; }

// Real samples, component-major: values[c * cells + cell].
struct PhysicalField {
    GridSpec grid;
    int components = 1;
    std::vector<double> values;

    PhysicalField() = default;
    PhysicalField(const GridSpec& g, int comps)
        : grid(g), components(comps), values(comps * g.cells(), 0.0) {}

    double* comp(int c) { return values.data() + static_cast<std::size_t>(c) * grid.cells(); }
    const double* comp(int c) const {
        return values.data() + static_cast<std::size_t>(c) * grid.cells();
    }
};

// Fourier coefficients, same layout; coeff index maps to wavevector via
// wavenumber(). Convention: forward transform divides by n^dim, so coeffs[0]
// of each component is the spatial mean.
struct SpectralField {
    GridSpec grid;
    int components = 1;
    std::vector<std::complex<double>> coeffs;

    SpectralField() = default;
    SpectralField(const GridSpec& g, int comps)
        : grid(g), components(comps), coeffs(comps * g.cells(), {0.0, 0.0}) {}

    std::complex<double>* comp(int c) {
        return coeffs.data() + static_cast<std::size_t>(c) * grid.cells();
    }
    const std::complex<double>* comp(int c) const {
        return coeffs.data() + static_cast<std::size_t>(c) * grid.cells();
    }
};

// Flattened cell index; row-major with the last axis contiguous (FFTW layout).
inline std::size_t cell_index(const GridSpec& g, int ix, int iy, int iz = 0) {
    if (g.dim == 2) return static_cast<std::size_t>(ix) * g.n + iy;
    return (static_cast<std::size_t>(ix) * g.n + iy) * g.n + iz;
}

// Decode flattened index into per-axis indices (iz stays 0 in 2-D).
inline void cell_coords(const GridSpec& g, std::size_t idx, int& ix, int& iy, int& iz) {
    if (g.dim == 2) {
        ix = static_cast<int>(idx / g.n);
        iy = static_cast<int>(idx % g.n);
        iz = 0;
    } else {
        iz = static_cast<int>(idx % g.n);
        std::size_t r = idx / g.n;
        iy = static_cast<int>(r % g.n);
        ix = static_cast<int>(r / g.n);
    }
}

// Integer wavevector of a flattened coefficient index.
inline void wavevector(const GridSpec& g, std::size_t idx, int k[3]) {
    int ix, iy, iz;
    cell_coords(g, idx, ix, iy, iz);
    k[0] = wavenumber(ix, g.n);
    k[1] = wavenumber(iy, g.n);
    k[2] = g.dim == 3 ? wavenumber(iz, g.n) : 0;
}

// Discrete L2 inner product / norms. Unit volume: integral = mean of samples.
double phys_integral(const PhysicalField& f, int c = 0);
double l2_inner(const SpectralField& a, const SpectralField& b);
double l2_norm_sq(const SpectralField& a);
double linf_norm(const PhysicalField& f);

}  // namespace kinfluid

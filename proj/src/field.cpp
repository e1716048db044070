#include "kinfluid/field.hpp"

#include <cmath>

namespace kinfluid {

double phys_integral(const PhysicalField& f, int c) {
    KahanSum s;
    const double* v = f.comp(c);
    std::size_t m = f.grid.cells();
    for (std::size_t i = 0; i < m; ++i) s.add(v[i]);
    return s.value() / static_cast<double>(m);
}

double l2_inner(const SpectralField& a, const SpectralField& b) {
    KahanSum s;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i)
        s.add(a.coeffs[i].real() * b.coeffs[i].real() + a.coeffs[i].imag() * b.coeffs[i].imag());
    return s.value();
}

double l2_norm_sq(const SpectralField& a) { return l2_inner(a, a); }

double linf_norm(const PhysicalField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace kinfluid

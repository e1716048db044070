#include "kinfluid/fluid.hpp"

#include <cmath>
#include <limits>

namespace kinfluid {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
}

void FluidState::validate() const {
    const GridSpec& g = w.grid;
    if (w.components != g.dim) throw NumericalError("FluidState: w must have dim components");
    if (!(eps >= 0.0)) throw ConfigError("eps must be >= 0");
    for (int d = 0; d < g.dim; ++d) {
        if (w.comp(d)[0] != std::complex<double>{0.0, 0.0})
            throw NumericalError("FluidState: w has a nonzero mean");
        if (!std::isfinite(u_c[d])) throw NumericalError("FluidState: u_c not finite");
    }
    const std::size_t m = g.cells();
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        std::complex<double> div{0.0, 0.0};
        for (int d = 0; d < g.dim; ++d) {
            const std::complex<double>& c = w.comp(d)[idx];
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw NumericalError("FluidState: w not finite");
            div += static_cast<double>(k[d]) * c;
        }
        if (std::abs(div) > 1e-10)
            throw NumericalError("FluidState: w is not divergence-free");
    }
}

PhysicalField sym_gradient(const SpectralField& w, const Vec3& u_c) {
    (void)u_c;  // constant field, zero gradient
    const GridSpec& g = w.grid;
    SpectralField grad = gradient_tensor(w);
    // Symmetrize spectrally so D_{jm} and D_{mj} come out bitwise equal.
    for (int j = 0; j < g.dim; ++j)
        for (int mdir = j + 1; mdir < g.dim; ++mdir) {
            std::complex<double>* a = grad.comp(j * g.dim + mdir);
            std::complex<double>* b = grad.comp(mdir * g.dim + j);
            const std::size_t m = g.cells();
            for (std::size_t i = 0; i < m; ++i) {
                std::complex<double> s = 0.5 * (a[i] + b[i]);
                a[i] = s;
                b[i] = s;
            }
        }
    return to_physical(grad);
}

PhysicalField stress(const PhysicalField& Du, const PowerLaw& law) {
    const GridSpec& g = Du.grid;
    const int nc = g.dim * g.dim;
    if (Du.components != nc) throw DataError("stress: expected a dim*dim tensor field");
    PhysicalField tau(g, nc);
    const std::size_t m = g.cells();
    const double expo = 0.5 * (law.p - 2.0);
    const double d2 = law.delta * law.delta;
    for (std::size_t i = 0; i < m; ++i) {
        double s2 = d2;
        for (int c = 0; c < nc; ++c) {
            double v = Du.comp(c)[i];
            s2 += v * v;
        }
        double factor = s2 > 0.0 ? law.mu * std::pow(s2, expo) : 0.0;
        for (int c = 0; c < nc; ++c) tau.comp(c)[i] = factor * Du.comp(c)[i];
    }
    return tau;
}

SpectralField stress_divergence(const FluidState& state, const PowerLaw& law) {
    PhysicalField Du = sym_gradient(state.w, state.u_c);
    PhysicalField tau = stress(Du, law);
    SpectralField div = tensor_divergence(to_spectral(tau));
    return leray_project(dealias(div));
}

SpectralField mollify(const SpectralField& F, double eps) {
    if (eps == 0.0) return F;
    const GridSpec& g = F.grid;
    SpectralField out = F;
    const std::size_t m = g.cells();
    const double c = 0.5 * eps * eps * kTwoPi * kTwoPi;
    for (std::size_t idx = 0; idx < m; ++idx) {
        int k[3];
        wavevector(g, idx, k);
        double k2 = 0.0;
        for (int d = 0; d < g.dim; ++d) k2 += static_cast<double>(k[d]) * k[d];
        double mult = std::exp(-c * k2);
        for (int comp = 0; comp < F.components; ++comp) out.comp(comp)[idx] *= mult;
    }
    return out;
}

SpectralField convective_term(const FluidState& state) {
    const GridSpec& g = state.w.grid;
    PhysicalField adv = to_physical(mollify(state.w, state.eps));
    PhysicalField grad = to_physical(gradient_tensor(state.w));
    PhysicalField conv(g, g.dim);
    const std::size_t m = g.cells();
    for (int j = 0; j < g.dim; ++j) {
        double* out = conv.comp(j);
        for (int mdir = 0; mdir < g.dim; ++mdir) {
            const double* a = adv.comp(mdir);
            const double* dj = grad.comp(j * g.dim + mdir);
            const double uc = state.u_c[mdir];
            for (std::size_t i = 0; i < m; ++i) out[i] -= (a[i] + uc) * dj[i];
        }
    }
    return leray_project(dealias(to_spectral(conv)));
}

Vec3 step_mean(const Vec3& u_c, const PhysicalField& rho, const PhysicalField& m,
               const SpectralField& w, double eps, double dt) {
    if (!(dt > 0.0)) throw NumericalError("step_mean: dt must be > 0");
    const GridSpec& g = rho.grid;
    double mass = phys_integral(rho);
    if (mass < 0.0) throw NumericalError("step_mean: negative total mass");

    PhysicalField wm = to_physical(mollify(w, eps));
    Vec3 b = vec_zero();
    const std::size_t cells = g.cells();
    for (int d = 0; d < g.dim; ++d) {
        KahanSum s;
        const double* rhov = rho.comp(0);
        const double* md = m.comp(d);
        const double* wd = wm.comp(d);
        for (std::size_t i = 0; i < cells; ++i) s.add(md[i] - rhov[i] * wd[i]);
        b[d] = s.value() / static_cast<double>(cells);
    }

    // u_c' = u_c e^{-M dt} + (1 - e^{-M dt})/M * b ; M -> 0 limit is u_c + dt b.
    double em = std::exp(-mass * dt);
    double phi = mass > 0.0 ? -std::expm1(-mass * dt) / mass : dt;
    Vec3 out = vec_zero();
    for (int d = 0; d < g.dim; ++d) out[d] = u_c[d] * em + phi * b[d];
    return out;
}

double cfl_limit(const FluidState& state, const PowerLaw& law, const CflPolicy& policy) {
    const GridSpec& g = state.w.grid;
    const double h = g.h();

    PhysicalField u = to_physical(state.w);
    double umax = 0.0;
    const std::size_t m = g.cells();
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (int d = 0; d < g.dim; ++d) {
            double v = u.comp(d)[i] + state.u_c[d];
            s += v * v;
        }
        umax = std::max(umax, s);
    }
    umax = std::sqrt(umax);

    PhysicalField Du = sym_gradient(state.w, state.u_c);
    double dumax = 0.0;
    const int nc = g.dim * g.dim;
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (int c = 0; c < nc; ++c) {
            double v = Du.comp(c)[i];
            s += v * v;
        }
        dumax = std::max(dumax, s);
    }
    dumax = std::sqrt(dumax);

    double inf = std::numeric_limits<double>::infinity();
    double dt_adv = umax > 0.0 ? policy.c_adv * h / umax : inf;
    double expo = law.p - 2.0;
    // h^p is laxer than the parabolic h^2 bound when p < 2 (h < 1), and the
    // shear-thinning runs go unstable there; take the tighter of the two.
    double hpow = std::min(std::pow(h, law.p), h * h);
    double dt_visc;
    if (expo == 0.0)
        dt_visc = policy.c_visc * h * h / law.mu;
    else if (dumax == 0.0)
        dt_visc = inf;  // no strain, no stress
    else
        dt_visc = policy.c_visc * hpow / (law.mu * std::pow(dumax, expo));

    return policy.dt_scale * std::min({dt_adv, dt_visc, policy.dt_max});
}

}  // namespace kinfluid

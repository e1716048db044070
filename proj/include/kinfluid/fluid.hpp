#pragma once

#include "kinfluid/field.hpp"
#include "kinfluid/operators.hpp"
#include "kinfluid/transform.hpp"

namespace kinfluid {

// Stress law tau(Du) = mu |Du|^{p-2} Du, regularized to
// mu (delta^2 + |Du|^2)^{(p-2)/2} Du to tame the p<2 singularity at Du = 0.
struct PowerLaw {
    double mu = 1.0;
    double p = 2.0;
    double delta = 1e-8;

    void validate() const {
        if (!(mu > 0.0)) throw ConfigError("law.mu must be > 0");
        if (!(p > 1.0)) throw ConfigError("law.p must be > 1");
        if (!(delta >= 0.0)) throw ConfigError("law.delta must be >= 0");
    }
};

// Fluid velocity decomposition u = w + u_c: w mean-free and divergence-free
// (spectral), u_c the spatial mean. eps is the mollification width (0 = limit
// system, no mollification).
struct FluidState {
    SpectralField w;
    Vec3 u_c = vec_zero();
    double eps = 0.0;

    int dim() const { return w.grid.dim; }
    void validate() const;
};

// Strain-rate tensor Du = (grad u + grad^T u)/2 sampled on the grid
// (dim*dim components, index j*dim+m). The mean u_c has zero gradient.
PhysicalField sym_gradient(const SpectralField& w, const Vec3& u_c);

// Pointwise regularized power-law stress. With delta = 0 and Du = 0 the value
// is the continuous extension 0, for every p.
PhysicalField stress(const PhysicalField& Du, const PowerLaw& law);

// leray_project(dealias(div tau(Du(w)))), divergence taken spectrally.
SpectralField stress_divergence(const FluidState& state, const PowerLaw& law);

// Gaussian approximate identity as the Fourier multiplier
// exp(-eps^2 (2 pi |k|)^2 / 2); eps = 0 is the identity, the mean is untouched.
SpectralField mollify(const SpectralField& F, double eps);

// -P[((mollify(w, eps) + u_c) . grad) w], dealiased: the convection terms of the
// regularized momentum equation moved to the right-hand side.
SpectralField convective_term(const FluidState& state);

// Exact exponential update of the mean-velocity ODE
//   du_c/dt = -( int rho (mollify(w) + u_c) - m dx )
// with the non-u_c coefficients frozen over the step. M = int rho dx.
Vec3 step_mean(const Vec3& u_c, const PhysicalField& rho, const PhysicalField& m,
               const SpectralField& w, double eps, double dt);

// Explicit step-size control: dt <= c_adv h / max|u| and
// dt <= c_visc h^p / (mu max|Du|^{p-2}), scaled and capped.
struct CflPolicy {
    double c_visc = 0.25;
    double c_adv = 0.5;
    double dt_max = 1e-2;
    double dt_scale = 1.0;
};

double cfl_limit(const FluidState& state, const PowerLaw& law, const CflPolicy& policy);

}  // namespace kinfluid

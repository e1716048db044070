#pragma once

#include "kinfluid/kinetic.hpp"

namespace kinfluid {

// Gridded particle moments rho_f = int f dv and m_f = int v f dv.
struct MomentFields {
    PhysicalField rho;
    PhysicalField m;
};

struct SystemState {
    FluidState fluid;
    ParticleEnsemble particles;
    double t = 0.0;

    // Total momentum of the coupled system: int v f + int u = sum wgt v + u_c
    // (w is mean-free and carries none).
    Vec3 total_momentum() const {
        Vec3 p = particles.momentum();
        for (int d = 0; d < fluid.dim(); ++d) p[d] += fluid.u_c[d];
        return p;
    }
};

// CIC deposition, density-normalized so that int rho dx = sum wgt exactly
// (up to compensated-summation rounding).
MomentFields deposit_moments(const ParticleEnsemble& ens, const GridSpec& grid);

// Drag force on the mean-free fluid component:
//   -P[ mollify( rho (mollify(w) + u_c) - m ) ]   (eps > 0)
//   -P[ rho (w + u_c) - m ]                       (eps = 0, limit system)
// The Leray projection removes the spatial mean, which realizes the
// mean-correction term of the regularized momentum equation. With
// double_mollify = false the outer mollification is skipped.
SpectralField drag_force(const MomentFields& mom, const FluidState& state,
                         bool double_mollify = true);

struct StepOptions {
    CflPolicy cfl;
    bool check_cfl = true;
    bool double_mollify = true;
};

// Admissible step for the current state under the fluid CFL rules.
double admissible_dt(const SystemState& s, const PowerLaw& law, const CflPolicy& policy);

// One splitting step:
//   1. deposit moments
//   2. Heun (RK2) update of w with stress + convection + drag_force
//   3. mean-velocity ODE for u_c (drives the field the particles feel)
//   4. kinetic push against the updated (w, u_c), collecting the impulse
//   5. conservative exchange: the net drag the RK2 stage applied to w is
//      replaced by the projected particle impulse, and u_c absorbs exactly the
//      momentum the particles lost, so sum wgt v + u_c is conserved to
//      machine precision.
// Throws StepRejected (carrying the admissible dt) on a CFL violation.
SystemState step_splitting(const SystemState& s, const PowerLaw& law, double dt,
                           const StepOptions& opts = {});

// Fixed-point version of the step, mirroring the solution-operator iteration:
// repeat the splitting pass against moments frozen from the latest iterate
// until successive w results differ by less than tol in L2. The first pass
// uses the pre-step moments, so one iteration reproduces step_splitting.
struct PicardResult {
    SystemState state;
    int iterations = 0;
    bool converged = false;
    std::vector<double> iterate_diffs;  // ||w_k - w_{k-1}||_2 per iteration
};
PicardResult step_picard(const SystemState& s, const PowerLaw& law, double dt, double tol,
                         int max_iter, const StepOptions& opts = {});

}  // namespace kinfluid

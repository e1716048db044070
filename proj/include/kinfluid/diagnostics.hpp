#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kinfluid/coupling.hpp"

namespace kinfluid {

// One time sample of every conserved / dissipated / modulated quantity.
struct DiagnosticsRow {
    double t = 0.0;
    double E_tot = 0.0;
    double E_mod = 0.0;
    double D = 0.0;
    double D_visc = 0.0;  // mu int |Du|^p, evaluated with delta = 0
    double D_drag = 0.0;  // sum wgt |u(x_i) - v_i|^2
    Vec3 u_c = vec_zero();
    Vec3 v_c = vec_zero();
    double mass = 0.0;
    Vec3 momentum = vec_zero();
    std::vector<std::pair<double, double>> rho_norms;  // (q, ||rho||_q); q = inf -> infinity()
    double max_moment = 0.0;                           // sum wgt (1+|v|)^2
};

// E = 1/2 sum wgt |v - v_c|^2 + 1/2 ||w||_2^2 + 1/4 |u_c - v_c|^2,
// with v_c = sum wgt v (unit total mass).
double modulated_energy(const SystemState& s);

// Total energy 1/2 sum wgt |v|^2 + 1/2 (||w||^2 + |u_c|^2).
double total_energy(const SystemState& s);

struct Dissipation {
    double D = 0.0;
    double D_visc = 0.0;
    double D_drag = 0.0;
    double D_visc_reg = 0.0;  // same quadrature with the dynamics delta, for gap reporting
};
Dissipation dissipation(const SystemState& s, const PowerLaw& law);

// max_k |E(t_k) + int_0^{t_k} D - E(0)| / E(0) for E_mod and E_tot, trapezoidal
// quadrature in time. Requires >= 3 rows with strictly increasing t and
// E_mod(0) > 0.
std::pair<double, double> balance_residual(const std::vector<DiagnosticsRow>& rows);

struct DecayFit {
    std::string mode;    // "exponential" (p <= 2) or "algebraic" (p > 2)
    double t0 = 0.0;     // fit window
    double t1 = 0.0;
    double slope = 0.0;  // regression slope in the transformed variable
    double c0 = 0.0;     // exponential: decay rate; algebraic: slope/(p/2 - 1)
    double r2 = 0.0;
    double c0_env = 0.0;  // min over window of D/E (p<=2) or D/E^{p/2} (p>2)
};

// Fit over the window where E_mod is within [1e-8, 1e-1] of E_mod(0):
// log E linear in t for p <= 2, E^{(2-p)/2} linear in t for p > 2.
DecayFit fit_decay(const std::vector<DiagnosticsRow>& rows, double p);

// v_inf = 1/2 (sum wgt v + u_c), evaluated on the initial state.
Vec3 v_infinity(const SystemState& initial);

// Grid L^q norms of the particle density; q may be infinity().
std::vector<std::pair<double, double>> density_norms(const MomentFields& mom,
                                                     const std::vector<double>& qs);

DiagnosticsRow compute_row(const SystemState& s, const PowerLaw& law,
                           const std::vector<double>& rho_norm_qs);

// --- Weak-form residuals -------------------------------------------------
//
// Test functions are separable: a C^2 time cutoff vanishing for t >= t1 times a
// single Fourier mode in x times a velocity monomial (kinetic) or a constant /
// divergence-free Fourier vector mode (fluid).

struct TimeBump {
    double t1 = 1.0;
    double value(double t) const {
        if (t >= t1 || t < 0.0) return 0.0;
        double s = t / t1;
        double q = 1.0 - s * s;
        return q * q * q;
    }
    double dvalue(double t) const {
        if (t >= t1 || t < 0.0) return 0.0;
        double s = t / t1;
        double q = 1.0 - s * s;
        return -6.0 * s * q * q / t1;
    }
};

struct KineticTestFunction {
    TimeBump bump;
    int kx[3] = {0, 0, 0};  // X = cos(2 pi k.x + phase); k = 0 gives X = 1
    double phase = 0.0;
    int vpow[3] = {0, 0, 0};  // V = prod v_d^{vpow_d}
};

struct FluidTestFunction {
    TimeBump bump;
    bool constant = false;  // psi = c0 * bump
    Vec3 c0 = vec_zero();
    int kx[3] = {0, 0, 0};  // psi = amp cos(2 pi k.x + phase); requires k.amp = 0
    Vec3 amp = vec_zero();
    double phase = 0.0;
};

struct Trajectory {
    std::vector<double> times;  // uniform spacing
    std::vector<SystemState> states;
};

struct WeakResiduals {
    std::vector<double> kinetic;
    std::vector<double> fluid;
};

// Quadrature evaluation of both weak-form integrals along a stored trajectory;
// one residual per test function, expected O(dt + h^2 + Np^{-1/2}).
WeakResiduals weak_residual(const Trajectory& traj, const PowerLaw& law,
                            const std::vector<KineticTestFunction>& kin_tests,
                            const std::vector<FluidTestFunction>& fl_tests);

}  // namespace kinfluid

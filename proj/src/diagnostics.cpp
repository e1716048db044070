#include "kinfluid/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kinfluid {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
}

double modulated_energy(const SystemState& s) {
    const ParticleEnsemble& ens = s.particles;
    const int dim = s.fluid.dim();
    Vec3 v_c = ens.momentum();
    KahanSum spread;
    for (std::size_t i = 0; i < ens.count; ++i) {
        double e = 0.0;
        for (int d = 0; d < dim; ++d) {
            double dv = ens.v[i * dim + d] - v_c[d];
            e += dv * dv;
        }
        spread.add(ens.wgt[i] * e);
    }
    Vec3 gap = vec_sub(s.fluid.u_c, v_c);
    return 0.5 * spread.value() + 0.5 * l2_norm_sq(s.fluid.w) +
           0.25 * vec_dot(gap, gap, dim);
}

double total_energy(const SystemState& s) {
    const int dim = s.fluid.dim();
    return s.particles.kinetic_energy() +
           0.5 * (l2_norm_sq(s.fluid.w) + vec_dot(s.fluid.u_c, s.fluid.u_c, dim));
}

Dissipation dissipation(const SystemState& s, const PowerLaw& law) {
    Dissipation out;
    const GridSpec& g = s.fluid.w.grid;
    PhysicalField Du = sym_gradient(s.fluid.w, s.fluid.u_c);
    const std::size_t cells = g.cells();
    const int nc = g.dim * g.dim;
    const double d2 = law.delta * law.delta;
    KahanSum visc, visc_reg;
    for (std::size_t i = 0; i < cells; ++i) {
        double s2 = 0.0;
        for (int c = 0; c < nc; ++c) {
            double v = Du.comp(c)[i];
            s2 += v * v;
        }
        visc.add(s2 > 0.0 ? std::pow(s2, 0.5 * law.p) : 0.0);
        double r2 = s2 + d2;
        visc_reg.add(r2 > 0.0 ? std::pow(r2, 0.5 * (law.p - 2.0)) * s2 : 0.0);
    }
    out.D_visc = law.mu * visc.value() / static_cast<double>(cells);
    out.D_visc_reg = law.mu * visc_reg.value() / static_cast<double>(cells);

    std::vector<double> u = interp_velocity(s.fluid, s.particles.x, s.particles.count);
    KahanSum drag;
    const int dim = g.dim;
    for (std::size_t i = 0; i < s.particles.count; ++i) {
        double e = 0.0;
        for (int d = 0; d < dim; ++d) {
            double dv = u[i * dim + d] - s.particles.v[i * dim + d];
            e += dv * dv;
        }
        drag.add(s.particles.wgt[i] * e);
    }
    out.D_drag = drag.value();
    out.D = out.D_visc + out.D_drag;
    return out;
}

std::pair<double, double> balance_residual(const std::vector<DiagnosticsRow>& rows) {
    if (rows.size() < 3) throw DataError("balance_residual: need at least 3 rows");
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].t > rows[i - 1].t))
            throw DataError("balance_residual: non-monotone time column at row " +
                            std::to_string(i));
    const double e_mod0 = rows[0].E_mod;
    const double e_tot0 = rows[0].E_tot;
    if (e_mod0 == 0.0)
        throw DataError("balance_residual: E_mod(0) = 0, system already at equilibrium");

    double r_mod = 0.0, r_tot = 0.0;
    KahanSum integral;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double dt = rows[i].t - rows[i - 1].t;
        integral.add(0.5 * dt * (rows[i].D + rows[i - 1].D));
        r_mod = std::max(r_mod, std::abs(rows[i].E_mod + integral.value() - e_mod0) / e_mod0);
        double rt = std::abs(rows[i].E_tot + integral.value() - e_tot0);
        r_tot = std::max(r_tot, e_tot0 > 0.0 ? rt / e_tot0 : rt);
    }
    return {r_mod, r_tot};
}

DecayFit fit_decay(const std::vector<DiagnosticsRow>& rows, double p) {
    if (!(p > 1.0)) throw ConfigError("fit_decay: p must be > 1");
    if (rows.empty()) throw DataError("fit_decay: empty series");
    for (const auto& r : rows)
        if (!(r.E_mod > 0.0))
            throw DataError("fit_decay: E_mod must be strictly positive everywhere");

    const double e0 = rows[0].E_mod;
    std::vector<const DiagnosticsRow*> win;
    for (const auto& r : rows)
        if (r.E_mod <= 1e-1 * e0 && r.E_mod >= 1e-8 * e0) win.push_back(&r);
    if (win.size() < 10)
        throw DataError("fit_decay: insufficient data, window has " +
                        std::to_string(win.size()) + " samples (need >= 10)");

    const bool algebraic = p > 2.0;
    const double gamma = algebraic ? 0.5 * p : 1.0;

    // Linear regression of the theorem-predicted transform against t.
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, syy = 0.0;
    const double nw = static_cast<double>(win.size());
    for (const auto* r : win) {
        double y = algebraic ? std::pow(r->E_mod, 0.5 * (2.0 - p)) : std::log(r->E_mod);
        st += r->t;
        sy += y;
        stt += r->t * r->t;
        sty += r->t * y;
        syy += y * y;
    }
    double denom = nw * stt - st * st;
    if (denom == 0.0) throw DataError("fit_decay: degenerate time column");
    double slope = (nw * sty - st * sy) / denom;
    double intercept = (sy - slope * st) / nw;

    double ss_res = 0.0, ss_tot = 0.0;
    const double ymean = sy / nw;
    for (const auto* r : win) {
        double y = algebraic ? std::pow(r->E_mod, 0.5 * (2.0 - p)) : std::log(r->E_mod);
        double e = y - (intercept + slope * r->t);
        ss_res += e * e;
        double d = y - ymean;
        ss_tot += d * d;
    }

    DecayFit fit;
    fit.mode = algebraic ? "algebraic" : "exponential";
    fit.t0 = win.front()->t;
    fit.t1 = win.back()->t;
    fit.slope = slope;
    fit.c0 = algebraic ? slope / (0.5 * p - 1.0) : -slope;
    fit.r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    double env = std::numeric_limits<double>::infinity();
    for (const auto* r : win) env = std::min(env, r->D / std::pow(r->E_mod, gamma));
    fit.c0_env = std::isfinite(env) ? env : 0.0;
    return fit;
}

Vec3 v_infinity(const SystemState& initial) {
    Vec3 p = initial.particles.momentum();
    for (int d = 0; d < initial.fluid.dim(); ++d) p[d] = 0.5 * (p[d] + initial.fluid.u_c[d]);
    return p;
}

std::vector<std::pair<double, double>> density_norms(const MomentFields& mom,
                                                     const std::vector<double>& qs) {
    const GridSpec& g = mom.rho.grid;
    const std::size_t cells = g.cells();
    const double* rho = mom.rho.comp(0);
    std::vector<std::pair<double, double>> out;
    for (double q : qs) {
        if (std::isinf(q)) {
            double m = 0.0;
            for (std::size_t i = 0; i < cells; ++i) m = std::max(m, rho[i]);
            out.emplace_back(q, m);
            continue;
        }
        if (!(q >= 1.0)) throw DataError("density_norms: q must be >= 1 or inf");
        KahanSum s;
        for (std::size_t i = 0; i < cells; ++i) s.add(std::pow(rho[i], q));
        out.emplace_back(q, std::pow(s.value() / static_cast<double>(cells), 1.0 / q));
    }
    return out;
}

DiagnosticsRow compute_row(const SystemState& s, const PowerLaw& law,
                           const std::vector<double>& rho_norm_qs) {
    DiagnosticsRow row;
    row.t = s.t;
    row.E_tot = total_energy(s);
    row.E_mod = modulated_energy(s);
    Dissipation d = dissipation(s, law);
    row.D = d.D;
    row.D_visc = d.D_visc;
    row.D_drag = d.D_drag;
    row.u_c = s.fluid.u_c;
    row.v_c = s.particles.momentum();
    row.mass = s.particles.total_mass();
    row.momentum = s.total_momentum();
    MomentFields mom = deposit_moments(s.particles, s.fluid.w.grid);
    row.rho_norms = density_norms(mom, rho_norm_qs);
    row.max_moment = moment(s.particles, 2.0);
    return row;
}


namespace {

struct PsiEval {
    double psi[3];
    double dpsi[3][3];  // dpsi[d][e] = d psi_d / d x_e
};

PsiEval eval_psi(const FluidTestFunction& tf, const double* xp, int dim) {
    PsiEval out{};
    if (tf.constant) {
        for (int d = 0; d < dim; ++d) out.psi[d] = tf.c0[d];
        return out;
    }
    double arg = tf.phase;
    for (int d = 0; d < dim; ++d) arg += kTwoPi * tf.kx[d] * xp[d];
    double cv = std::cos(arg), sv = std::sin(arg);
    for (int d = 0; d < dim; ++d) {
        out.psi[d] = tf.amp[d] * cv;
        for (int e = 0; e < dim; ++e) out.dpsi[d][e] = -kTwoPi * tf.kx[e] * tf.amp[d] * sv;
    }
    return out;
}

double eval_vmono(const int* vpow, const double* vi, int dim) {
    double V = 1.0;
    for (int d = 0; d < dim; ++d)
        for (int r = 0; r < vpow[d]; ++r) V *= vi[d];
    return V;
}

}  // namespace

WeakResiduals weak_residual(const Trajectory& traj, const PowerLaw& law,
                            const std::vector<KineticTestFunction>& kin_tests,
                            const std::vector<FluidTestFunction>& fl_tests) {
    if (traj.states.size() != traj.times.size() || traj.states.size() < 2)
        throw DataError("weak_residual: need at least 2 snapshots");
    const double dt = traj.times[1] - traj.times[0];
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        double step = traj.times[i] - traj.times[i - 1];
        if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw DataError("weak_residual: snapshots are not uniformly spaced");
    }
    for (const auto& tf : fl_tests) {
        if (tf.constant) continue;
        double kdot = 0.0, an = 0.0;
        for (int d = 0; d < 3; ++d) {
            kdot += tf.kx[d] * tf.amp[d];
            an += tf.amp[d] * tf.amp[d];
        }
        if (std::abs(kdot) > 1e-14 * std::max(1.0, std::sqrt(an)))
            throw DataError("weak_residual: fluid test function is not divergence-free");
    }

    const GridSpec& g = traj.states[0].fluid.w.grid;
    const int dim = g.dim;
    const std::size_t cells = g.cells();
    const std::size_t nsnap = traj.states.size();

    // Sampled integrands per snapshot, split by the time factor they pair with:
    // kinetic: A pairs with T', B with T; fluid: C with -T', D with T.
    std::vector<std::vector<double>> kinA(kin_tests.size(), std::vector<double>(nsnap));
    std::vector<std::vector<double>> kinB(kin_tests.size(), std::vector<double>(nsnap));
    std::vector<std::vector<double>> flC(fl_tests.size(), std::vector<double>(nsnap));
    std::vector<std::vector<double>> flD(fl_tests.size(), std::vector<double>(nsnap));

    for (std::size_t j = 0; j < nsnap; ++j) {
        const SystemState& s = traj.states[j];
        const ParticleEnsemble& ens = s.particles;
        std::vector<double> u_at = interp_velocity(s.fluid, ens.x, ens.count);

        for (std::size_t q = 0; q < kin_tests.size(); ++q) {
            const auto& tf = kin_tests[q];
            KahanSum accA, accB;
            for (std::size_t i = 0; i < ens.count; ++i) {
                const double* xi = &ens.x[i * dim];
                const double* vi = &ens.v[i * dim];
                double arg = tf.phase;
                for (int d = 0; d < dim; ++d) arg += kTwoPi * tf.kx[d] * xi[d];
                const double X = std::cos(arg);
                const double dXscale = -kTwoPi * std::sin(arg);  // grad X = dXscale * k
                const double V = eval_vmono(tf.vpow, vi, dim);

                double v_dot_gradX = 0.0;
                for (int d = 0; d < dim; ++d) v_dot_gradX += vi[d] * tf.kx[d];
                v_dot_gradX *= dXscale;

                double drag_dot_gradV = 0.0;
                for (int d = 0; d < dim; ++d) {
                    if (tf.vpow[d] == 0) continue;
                    double dV = tf.vpow[d];
                    for (int e = 0; e < dim; ++e) {
                        int pw = e == d ? tf.vpow[e] - 1 : tf.vpow[e];
                        for (int r = 0; r < pw; ++r) dV *= vi[e];
                    }
                    drag_dot_gradV += (u_at[i * dim + d] - vi[d]) * dV;
                }
                accA.add(ens.wgt[i] * X * V);
                accB.add(ens.wgt[i] * (v_dot_gradX * V + X * drag_dot_gradV));
            }
            kinA[q][j] = accA.value();
            kinB[q][j] = accB.value();
        }

        if (!fl_tests.empty()) {
            PhysicalField u = to_physical(s.fluid.w);
            PhysicalField grad = to_physical(gradient_tensor(s.fluid.w));
            PhysicalField Du = sym_gradient(s.fluid.w, s.fluid.u_c);
            PhysicalField tau = stress(Du, law);
            for (std::size_t q = 0; q < fl_tests.size(); ++q) {
                const auto& tf = fl_tests[q];
                KahanSum accC, accD;
                for (std::size_t i = 0; i < cells; ++i) {
                    int ix, iy, iz;
                    cell_coords(g, i, ix, iy, iz);
                    double xp[3] = {static_cast<double>(ix) / g.n,
                                    static_cast<double>(iy) / g.n,
                                    static_cast<double>(iz) / g.n};
                    PsiEval pe = eval_psi(tf, xp, dim);
                    double c_val = 0.0, d_val = 0.0;
                    for (int d = 0; d < dim; ++d) {
                        double ud = u.comp(d)[i] + s.fluid.u_c[d];
                        c_val += ud * pe.psi[d];
                        double conv = 0.0;
                        for (int e = 0; e < dim; ++e) {
                            double ue = u.comp(e)[i] + s.fluid.u_c[e];
                            conv += ue * grad.comp(d * dim + e)[i];
                        }
                        d_val += conv * pe.psi[d];
                        for (int e = 0; e < dim; ++e) {
                            double Dpsi = 0.5 * (pe.dpsi[d][e] + pe.dpsi[e][d]);
                            d_val += tau.comp(d * dim + e)[i] * Dpsi;
                        }
                    }
                    accC.add(c_val);
                    accD.add(d_val);
                }
                double inv_cells = 1.0 / static_cast<double>(cells);
                KahanSum dragAcc;
                for (std::size_t i = 0; i < ens.count; ++i) {
                    PsiEval pe = eval_psi(tf, &ens.x[i * dim], dim);
                    double val = 0.0;
                    for (int d = 0; d < dim; ++d)
                        val += (u_at[i * dim + d] - ens.v[i * dim + d]) * pe.psi[d];
                    dragAcc.add(ens.wgt[i] * val);
                }
                flC[q][j] = accC.value() * inv_cells;
                flD[q][j] = accD.value() * inv_cells + dragAcc.value();
            }
        }
    }

    // Time integration: piecewise-linear interpolant of the sampled integrand
    // against the analytic bump, 4-point Gauss per interval (exact for the
    // degree-6 polynomial bump times a linear factor). Constants integrate
    // exactly, so a constant test reduces to pure conservation.
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374538};
    auto integrate = [&](const std::vector<double>& samples, const TimeBump& bump,
                         bool against_derivative) {
        KahanSum acc;
        for (std::size_t j = 0; j + 1 < nsnap; ++j) {
            double a = traj.times[j], b = traj.times[j + 1];
            double half = 0.5 * (b - a), mid = 0.5 * (a + b);
            for (int q = 0; q < 4; ++q) {
                double t = mid + half * gx[q];
                double lam = (t - a) / (b - a);
                double val = (1.0 - lam) * samples[j] + lam * samples[j + 1];
                double tfv = against_derivative ? bump.dvalue(t) : bump.value(t);
                acc.add(gw[q] * half * val * tfv);
            }
        }
        return acc.value();
    };

    WeakResiduals out;
    for (std::size_t q = 0; q < kin_tests.size(); ++q) {
        const auto& tf = kin_tests[q];
        double r = integrate(kinA[q], tf.bump, true) + integrate(kinB[q], tf.bump, false) +
                   tf.bump.value(traj.times[0]) * kinA[q][0];
        out.kinetic.push_back(std::abs(r));
    }
    for (std::size_t q = 0; q < fl_tests.size(); ++q) {
        const auto& tf = fl_tests[q];
        double r = -integrate(flC[q], tf.bump, true) + integrate(flD[q], tf.bump, false) -
                   tf.bump.value(traj.times[0]) * flC[q][0];
        out.fluid.push_back(std::abs(r));
    }
    return out;
}

}  // namespace kinfluid

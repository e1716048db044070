#include "kinfluid/coupling.hpp"

#include <cmath>

#include "kinfluid/threading.hpp"

namespace kinfluid {

namespace {

template <int DIM>
void deposit_loop(const GridSpec& grid, const ParticleEnsemble& ens, double cellnorm,
                  std::vector<std::vector<double>>& bufs) {
    const std::size_t cells = grid.cells();
    constexpr int kSlots = 1 + DIM;  // per-cell accumulators: rho, m_1..m_DIM
    parallel_for(ens.count, [&](std::size_t begin, std::size_t end, int w) {
        std::vector<double>& buf = bufs[w];
        buf.assign(cells * kSlots, 0.0);
        const double* xs = ens.x.data();
        const double* vs = ens.v.data();
        const double* ws = ens.wgt.data();
        for (std::size_t i = begin; i < end; ++i) {
            CicStencil st = cic_stencil(grid, &xs[i * DIM]);
            const double contrib = ws[i] * cellnorm;
            double mv[DIM];
            for (int d = 0; d < DIM; ++d) mv[d] = contrib * vs[i * DIM + d];
            for (int c = 0; c < st.corners; ++c) {
                double* cellb = &buf[st.idx[c] * kSlots];
                const double cw = st.wt[c];
                cellb[0] += contrib * cw;
                for (int d = 0; d < DIM; ++d) cellb[1 + d] += mv[d] * cw;
            }
        }
    });
}

}  // namespace

MomentFields deposit_moments(const ParticleEnsemble& ens, const GridSpec& grid) {
    const int dim = grid.dim;
    if (ens.dim != dim) throw DataError("deposit_moments: dimension mismatch");
    MomentFields mom{PhysicalField(grid, 1), PhysicalField(grid, dim)};
    const double cellnorm = static_cast<double>(grid.cells());
    const std::size_t cells = grid.cells();
    const int slots = 1 + dim;

    const int workers = worker_count();
    std::vector<std::vector<double>> bufs(workers);
    if (dim == 3)
        deposit_loop<3>(grid, ens, cellnorm, bufs);
    else
        deposit_loop<2>(grid, ens, cellnorm, bufs);

    for (int w = 0; w < workers; ++w) {
        if (bufs[w].empty()) continue;
        const double* src = bufs[w].data();
        for (std::size_t i = 0; i < cells; ++i) mom.rho.values[i] += src[i * slots];
        for (int d = 0; d < dim; ++d) {
            double* dst = mom.m.comp(d);
            for (std::size_t i = 0; i < cells; ++i) dst[i] += src[i * slots + 1 + d];
        }
    }
    return mom;
}

SpectralField drag_force(const MomentFields& mom, const FluidState& state, bool double_mollify) {
    const GridSpec& g = state.w.grid;
    PhysicalField wm = to_physical(mollify(state.w, state.eps));
    PhysicalField force(g, g.dim);
    const std::size_t cells = g.cells();
    const double* rho = mom.rho.comp(0);
    for (int d = 0; d < g.dim; ++d) {
        double* out = force.comp(d);
        const double* md = mom.m.comp(d);
        const double* wd = wm.comp(d);
        const double uc = state.u_c[d];
        for (std::size_t i = 0; i < cells; ++i) out[i] = -(rho[i] * (wd[i] + uc) - md[i]);
    }
    SpectralField F = to_spectral(force);
    if (state.eps > 0.0 && double_mollify) F = mollify(F, state.eps);
    return leray_project(F);
}

double admissible_dt(const SystemState& s, const PowerLaw& law, const CflPolicy& policy) {
    return cfl_limit(s.fluid, law, policy);
}

namespace {

// Splitting pass with the deposited moments injected; shared by both steppers.
SystemState splitting_pass(const SystemState& s, const PowerLaw& law, double dt,
                           const MomentFields& mom, const StepOptions& opts) {
    const GridSpec& g = s.fluid.w.grid;
    const double eps = s.fluid.eps;

    struct Rhs {
        SpectralField total;
        SpectralField drag;  // dealiased drag part of total
    };
    auto rhs = [&](const SpectralField& wst) {
        FluidState stage{wst, s.fluid.u_c, eps};
        SpectralField r = stress_divergence(stage, law);
        SpectralField conv = convective_term(stage);
        for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] += conv.coeffs[i];
        SpectralField drag = dealias(drag_force(mom, stage, opts.double_mollify));
        for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] += drag.coeffs[i];
        // Galerkin truncation of the assembled right-hand side keeps w inside
        // the retained-mode space.
        return Rhs{dealias(r), std::move(drag)};
    };

    Rhs r0 = rhs(s.fluid.w);
    SpectralField w1 = s.fluid.w;
    for (std::size_t i = 0; i < w1.coeffs.size(); ++i) w1.coeffs[i] += dt * r0.total.coeffs[i];
    Rhs r1 = rhs(w1);

    SpectralField wnew = s.fluid.w;
    for (std::size_t i = 0; i < wnew.coeffs.size(); ++i)
        wnew.coeffs[i] += 0.5 * dt * (r0.total.coeffs[i] + r1.total.coeffs[i]);

    Vec3 uc_pred = step_mean(s.fluid.u_c, mom.rho, mom.m, wnew, eps, dt);

    PushResult pr = push(s.particles, FluidState{wnew, uc_pred, eps}, dt);

    // Conservative exchange: swap the net drag the RK2 stages applied to w for
    // the momentum the particles actually lost, deposited with the same kernel
    // used for interpolation. The Leray projection keeps w mean-free, so the
    // mean channel lives entirely in u_c.
    SpectralField imp = leray_project(dealias(to_spectral(pr.impulse)));
    for (std::size_t i = 0; i < wnew.coeffs.size(); ++i)
        wnew.coeffs[i] += imp.coeffs[i] - 0.5 * dt * (r0.drag.coeffs[i] + r1.drag.coeffs[i]);

    Vec3 p_before = s.particles.momentum();
    Vec3 p_after = pr.ensemble.momentum();
    Vec3 uc_new = s.fluid.u_c;
    for (int d = 0; d < g.dim; ++d) uc_new[d] += p_before[d] - p_after[d];

    return SystemState{FluidState{std::move(wnew), uc_new, eps}, std::move(pr.ensemble),
                       s.t + dt};
}

}  // namespace

SystemState step_splitting(const SystemState& s, const PowerLaw& law, double dt,
                           const StepOptions& opts) {
    if (!(dt > 0.0)) throw NumericalError("step_splitting: dt must be > 0");
    if (opts.check_cfl) {
        double adm = admissible_dt(s, law, opts.cfl);
        if (dt > adm * (1.0 + 1e-12))
            throw StepRejected(adm, "step_splitting: dt " + std::to_string(dt) +
                                        " exceeds admissible " + std::to_string(adm));
    }
    MomentFields mom = deposit_moments(s.particles, s.fluid.w.grid);
    return splitting_pass(s, law, dt, mom, opts);
}

PicardResult step_picard(const SystemState& s, const PowerLaw& law, double dt, double tol,
                         int max_iter, const StepOptions& opts) {
    if (max_iter < 1) throw ConfigError("picard max_iter must be >= 1");
    if (opts.check_cfl) {
        double adm = admissible_dt(s, law, opts.cfl);
        if (dt > adm * (1.0 + 1e-12))
            throw StepRejected(adm, "step_picard: dt " + std::to_string(dt) +
                                        " exceeds admissible " + std::to_string(adm));
    }
    StepOptions inner = opts;
    inner.check_cfl = false;

    PicardResult res;
    MomentFields frozen = deposit_moments(s.particles, s.fluid.w.grid);
    SpectralField w_prev = s.fluid.w;
    for (int it = 1; it <= max_iter; ++it) {
        SystemState cand = splitting_pass(s, law, dt, frozen, inner);
        double diff = 0.0;
        for (std::size_t i = 0; i < w_prev.coeffs.size(); ++i)
            diff += std::norm(cand.fluid.w.coeffs[i] - w_prev.coeffs[i]);
        diff = std::sqrt(diff);
        res.iterate_diffs.push_back(diff);
        res.iterations = it;
        w_prev = cand.fluid.w;
        res.state = std::move(cand);
        if (diff < tol) {
            res.converged = true;
            break;
        }
        if (it < max_iter) frozen = deposit_moments(res.state.particles, s.fluid.w.grid);
    }
    return res;
}

}  // namespace kinfluid

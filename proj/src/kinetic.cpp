#include "kinfluid/kinetic.hpp"

#include <cmath>

#include "kinfluid/rng.hpp"
#include "kinfluid/threading.hpp"

namespace kinfluid {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;
constexpr std::uint64_t kGaussCounterBase = 1ULL << 40;  // keep uniform/gaussian streams apart
constexpr std::uint64_t kMaxAttempts = 1000000;

inline double wrap01(double x) {
    x -= std::floor(x);
    return x < 1.0 ? x : 0.0;
}

// CIC stencil as per-axis node pairs and weights; corner indices are assembled
// from precomputed row offsets (no modulo in the hot loops).
struct AxisStencil {
    std::size_t off0[3], off1[3];  // flattened offsets per axis
    double w0[3], w1[3];
};

inline AxisStencil axis_stencil(const GridSpec& g, const double* xp) {
    AxisStencil st;
    const int n = g.n;
    std::size_t stride[3];
    if (g.dim == 2) {
        stride[0] = static_cast<std::size_t>(n);
        stride[1] = 1;
        stride[2] = 0;
    } else {
        stride[0] = static_cast<std::size_t>(n) * n;
        stride[1] = static_cast<std::size_t>(n);
        stride[2] = 1;
    }
    for (int d = 0; d < g.dim; ++d) {
        double s = xp[d] * n;
        double fl = std::floor(s);
        double f = s - fl;
        int i = static_cast<int>(fl);
        if (i >= n) i -= n;
        if (i < 0) i += n;
        int i1 = i + 1;
        if (i1 == n) i1 = 0;
        st.off0[d] = static_cast<std::size_t>(i) * stride[d];
        st.off1[d] = static_cast<std::size_t>(i1) * stride[d];
        st.w0[d] = 1.0 - f;
        st.w1[d] = f;
    }
    return st;
}

}  // namespace

double ParticleEnsemble::total_mass() const {
    KahanSum s;
    for (double w : wgt) s.add(w);
    return s.value();
}

Vec3 ParticleEnsemble::momentum() const {
    Vec3 p = vec_zero();
    for (int d = 0; d < dim; ++d) {
        KahanSum s;
        for (std::size_t i = 0; i < count; ++i) s.add(wgt[i] * v[i * dim + d]);
        p[d] = s.value();
    }
    return p;
}

double ParticleEnsemble::kinetic_energy() const {
    KahanSum s;
    for (std::size_t i = 0; i < count; ++i) {
        double e = 0.0;
        for (int d = 0; d < dim; ++d) {
            double vd = v[i * dim + d];
            e += vd * vd;
        }
        s.add(0.5 * wgt[i] * e);
    }
    return s.value();
}

ParticleEnsemble sample_initial(const InitialData& spec, int dim, std::size_t n_particles) {
    if (n_particles < 1) throw ConfigError("particles.count must be >= 1");
    if (spec.eps_v < 0.0) throw ConfigError("f0.eps_v must be >= 0");
    if (std::abs(spec.space_amp) >= 1.0) throw ConfigError("f0.space_amp must lie in (-1,1)");
    if (spec.space_axis < 0 || spec.space_axis >= dim) throw ConfigError("f0.space_axis out of range");

    ParticleEnsemble ens;
    ens.dim = dim;
    ens.count = n_particles;
    ens.x.assign(n_particles * dim, 0.0);
    ens.v.assign(n_particles * dim, 0.0);
    ens.wgt.assign(n_particles, 1.0 / static_cast<double>(n_particles));

    const double vcap = spec.eps_v > 0.0 ? 1.0 / spec.eps_v : 0.0;
    bool failed = false;

    parallel_for(n_particles, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(spec.seed, i);
            std::uint64_t attempt = 0;
            for (;; ++attempt) {
                if (attempt >= kMaxAttempts) {
                    failed = true;
                    return;
                }
                std::uint64_t base = attempt * 8;
                double xp[3] = {0.0, 0.0, 0.0};
                for (int d = 0; d < dim; ++d) xp[d] = rng.uniform(base + d);
                double vp[3] = {0.0, 0.0, 0.0};
                if (spec.profile == InitialData::Profile::monokinetic) {
                    for (int d = 0; d < dim; ++d) vp[d] = spec.v0[d];
                } else {
                    for (int d = 0; d < dim; ++d)
                        vp[d] = spec.v_mean[d] +
                                spec.sigma * rng.gaussian(kGaussCounterBase + base + d);
                }
                if (vcap > 0.0) {
                    double vn = 0.0;
                    for (int d = 0; d < dim; ++d) vn += vp[d] * vp[d];
                    if (vn > vcap * vcap) continue;
                }
                if (spec.space_amp != 0.0) {
                    double dens = 1.0 + spec.space_amp * std::cos(kTwoPi * xp[spec.space_axis]);
                    double u = rng.uniform(base + 3);
                    if (u * (1.0 + std::abs(spec.space_amp)) > dens) continue;
                }
                for (int d = 0; d < dim; ++d) {
                    ens.x[i * dim + d] = xp[d];
                    ens.v[i * dim + d] = vp[d];
                }
                break;
            }
        }
    });

    if (failed)
        throw ConfigError("sample_initial: rejection sampler exceeded the draw budget "
                          "(cutoff eps_v excludes nearly all of f0?)");
    return ens;
}

CicStencil cic_stencil(const GridSpec& g, const double* xp) {
    AxisStencil ax = axis_stencil(g, xp);
    CicStencil st;
    st.corners = 1 << g.dim;
    if (g.dim == 2) {
        st.idx[0] = ax.off0[0] + ax.off0[1];
        st.idx[1] = ax.off0[0] + ax.off1[1];
        st.idx[2] = ax.off1[0] + ax.off0[1];
        st.idx[3] = ax.off1[0] + ax.off1[1];
        st.wt[0] = ax.w0[0] * ax.w0[1];
        st.wt[1] = ax.w0[0] * ax.w1[1];
        st.wt[2] = ax.w1[0] * ax.w0[1];
        st.wt[3] = ax.w1[0] * ax.w1[1];
    } else {
        int c = 0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int d = 0; d < 2; ++d, ++c) {
                    st.idx[c] = (a ? ax.off1[0] : ax.off0[0]) + (b ? ax.off1[1] : ax.off0[1]) +
                                (d ? ax.off1[2] : ax.off0[2]);
                    st.wt[c] = (a ? ax.w1[0] : ax.w0[0]) * (b ? ax.w1[1] : ax.w0[1]) *
                               (d ? ax.w1[2] : ax.w0[2]);
                }
    }
    return st;
}

namespace {

template <int DIM>
void interp_loop(const GridSpec& g, const std::vector<double>& ug, const Vec3& u_c,
                 const std::vector<double>& x, std::size_t count, std::vector<double>& out) {
    parallel_for(count, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            CicStencil st = cic_stencil(g, &x[i * DIM]);
            double acc[DIM] = {};
            for (int c = 0; c < st.corners; ++c) {
                const double* cellv = &ug[st.idx[c] * DIM];
                const double wt = st.wt[c];
                for (int d = 0; d < DIM; ++d) acc[d] += wt * cellv[d];
            }
            for (int d = 0; d < DIM; ++d) out[i * DIM + d] = acc[d] + u_c[d];
        }
    });
}

template <int DIM>
void push_loop(const GridSpec& g, const ParticleEnsemble& ens, const std::vector<double>& ug,
               const Vec3& u_c, double half, double decay, double cellnorm,
               ParticleEnsemble& out, std::vector<std::vector<double>>& bufs) {
    const std::size_t cells = g.cells();
    parallel_for(ens.count, [&](std::size_t begin, std::size_t end, int w) {
        std::vector<double>& buf = bufs[w];
        buf.assign(cells * DIM, 0.0);
        const double* xs = ens.x.data();
        const double* vs = ens.v.data();
        const double* ws = ens.wgt.data();
        double* xo = out.x.data();
        double* vo = out.v.data();
        for (std::size_t i = begin; i < end; ++i) {
            double xp[DIM], vp[DIM];
            for (int d = 0; d < DIM; ++d) {
                vp[d] = vs[i * DIM + d];
                xp[d] = wrap01(xs[i * DIM + d] + vp[d] * half);
            }
            CicStencil st = cic_stencil(g, xp);
            double ui[DIM];
            for (int d = 0; d < DIM; ++d) ui[d] = u_c[d];
            for (int c = 0; c < st.corners; ++c) {
                const double* cellv = &ug[st.idx[c] * DIM];
                const double wt = st.wt[c];
                for (int d = 0; d < DIM; ++d) ui[d] += wt * cellv[d];
            }
            const double wgt = ws[i];
            double dp[DIM];
            for (int d = 0; d < DIM; ++d) {
                double vnew = ui[d] + (vp[d] - ui[d]) * decay;
                dp[d] = -wgt * (vnew - vp[d]) * cellnorm;
                vo[i * DIM + d] = vnew;
                xo[i * DIM + d] = wrap01(xp[d] + vnew * half);
            }
            for (int c = 0; c < st.corners; ++c) {
                double* cellb = &buf[st.idx[c] * DIM];
                const double wt = st.wt[c];
                for (int d = 0; d < DIM; ++d) cellb[d] += dp[d] * wt;
            }
        }
    });
}

}  // namespace

std::vector<double> interp_velocity(const FluidState& state, const std::vector<double>& x,
                                    std::size_t count) {
    const GridSpec& g = state.w.grid;
    const int dim = g.dim;
    PhysicalField u = to_physical(state.w);
    // interleave to cell-major so one corner read covers all components
    std::vector<double> ug(g.cells() * dim);
    for (int d = 0; d < dim; ++d) {
        const double* src = u.comp(d);
        for (std::size_t i = 0; i < g.cells(); ++i) ug[i * dim + d] = src[i];
    }
    std::vector<double> out(count * dim, 0.0);
    if (dim == 3)
        interp_loop<3>(g, ug, state.u_c, x, count, out);
    else
        interp_loop<2>(g, ug, state.u_c, x, count, out);
    return out;
}

PushResult push(const ParticleEnsemble& ens, const FluidState& state, double dt) {
    if (!(dt > 0.0)) throw NumericalError("push: dt must be > 0");
    const GridSpec& g = state.w.grid;
    const int dim = g.dim;
    const std::size_t cells = g.cells();
    PhysicalField uphys = to_physical(state.w);
    std::vector<double> ug(cells * dim);
    for (int d = 0; d < dim; ++d) {
        const double* src = uphys.comp(d);
        for (std::size_t i = 0; i < cells; ++i) ug[i * dim + d] = src[i];
    }

    PushResult res;
    res.ensemble.dim = dim;
    res.ensemble.count = ens.count;
    res.ensemble.x.resize(ens.x.size());
    res.ensemble.v.resize(ens.v.size());
    res.ensemble.wgt = ens.wgt;
    res.impulse = PhysicalField(g, dim);

    const double half = 0.5 * dt;
    const double decay = std::exp(-dt);
    const double cellnorm = static_cast<double>(cells);  // density normalization 1/h^dim

    const int workers = worker_count();
    std::vector<std::vector<double>> bufs(workers);
    if (dim == 3)
        push_loop<3>(g, ens, ug, state.u_c, half, decay, cellnorm, res.ensemble, bufs);
    else
        push_loop<2>(g, ens, ug, state.u_c, half, decay, cellnorm, res.ensemble, bufs);

    // Deterministic reduction: worker buffers merged in worker order, then
    // de-interleaved into the component-major field.
    for (int w = 0; w < workers; ++w) {
        if (bufs[w].empty()) continue;
        for (int d = 0; d < dim; ++d) {
            double* dst = res.impulse.comp(d);
            const double* src = bufs[w].data();
            for (std::size_t i = 0; i < cells; ++i) dst[i] += src[i * dim + d];
        }
    }
    return res;
}

void sort_by_cell(ParticleEnsemble& ens, const GridSpec& grid) {
    const int dim = ens.dim;
    const std::size_t cells = grid.cells();
    const int n = grid.n;
    std::vector<std::uint32_t> key(ens.count);
    for (std::size_t i = 0; i < ens.count; ++i) {
        std::size_t idx = 0;
        for (int d = 0; d < dim; ++d) {
            int c = static_cast<int>(ens.x[i * dim + d] * n);
            if (c >= n) c = n - 1;
            if (c < 0) c = 0;
            idx = idx * n + c;
        }
        key[i] = static_cast<std::uint32_t>(idx);
    }
    std::vector<std::size_t> counts(cells + 1, 0);
    for (std::uint32_t k : key) ++counts[k + 1];
    for (std::size_t c = 0; c < cells; ++c) counts[c + 1] += counts[c];
    std::vector<double> nx(ens.x.size()), nv(ens.v.size()), nw(ens.wgt.size());
    for (std::size_t i = 0; i < ens.count; ++i) {
        std::size_t dst = counts[key[i]]++;
        for (int d = 0; d < dim; ++d) {
            nx[dst * dim + d] = ens.x[i * dim + d];
            nv[dst * dim + d] = ens.v[i * dim + d];
        }
        nw[dst] = ens.wgt[i];
    }
    ens.x = std::move(nx);
    ens.v = std::move(nv);
    ens.wgt = std::move(nw);
}

double moment(const ParticleEnsemble& ens, double ell) {
    if (!(ell >= 0.0)) throw DataError("moment: ell must be >= 0");
    KahanSum s;
    for (std::size_t i = 0; i < ens.count; ++i) {
        double vn = 0.0;
        for (int d = 0; d < ens.dim; ++d) {
            double vd = ens.v[i * ens.dim + d];
            vn += vd * vd;
        }
        s.add(ens.wgt[i] * std::pow(1.0 + std::sqrt(vn), ell));
    }
    return s.value();
}

}  // namespace kinfluid

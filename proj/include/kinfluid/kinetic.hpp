#pragma once

#include <cstdint>
#include <vector>

#include "kinfluid/fluid.hpp"

namespace kinfluid {

// Weighted particles carrying the kinetic measure f dx dv. Arrays are
// particle-major with dim interleaved slots; slots past dim stay zero.
struct ParticleEnsemble {
    int dim = 3;
    std::size_t count = 0;
    std::vector<double> x;    // count * dim, wrapped into [0,1)
    std::vector<double> v;    // count * dim
    std::vector<double> wgt;  // count, nonnegative

    double total_mass() const;
    Vec3 momentum() const;        // sum wgt_i v_i
    double kinetic_energy() const;  // 1/2 sum wgt_i |v_i|^2
};

// Sampling spec for f_0: named velocity profile restricted by the cutoff
// |v| <= 1/eps_v (eps_v = 0 disables it), with a uniform or single-axis
// cosine-perturbed spatial density.
struct InitialData {
    enum class Profile { maxwellian, monokinetic };
    Profile profile = Profile::maxwellian;
    Vec3 v_mean = vec_zero();  // maxwellian mean
    double sigma = 0.0;        // maxwellian width per component
    Vec3 v0 = vec_zero();      // monokinetic velocity
    double eps_v = 0.0;
    double space_amp = 0.0;  // density 1 + space_amp cos(2 pi x_axis)
    int space_axis = 0;
    std::uint64_t seed = 0;
};

// i.i.d. samples with uniform weights 1/N_p; deterministic given the seed and
// independent of worker count (counter-based draws per particle).
ParticleEnsemble sample_initial(const InitialData& spec, int dim, std::size_t n_particles);

// u(x_i) = CIC interpolation of to_physical(w) plus u_c. The kernel is the same
// multilinear tent used by deposition, which keeps the momentum exchange exact.
std::vector<double> interp_velocity(const FluidState& state, const std::vector<double>& x,
                                    std::size_t count);

// One kinetic step: half free transport, exact exponential drag relaxation
// toward the frozen interpolated fluid velocity, half free transport. The
// impulse field is the CIC deposition of -wgt_i (v_i' - v_i) (density
// normalized), i.e. the momentum handed to the fluid.
struct PushResult {
    ParticleEnsemble ensemble;
    PhysicalField impulse;
};
PushResult push(const ParticleEnsemble& ens, const FluidState& state, double dt);

// sum_i wgt_i (1 + |v_i|)^ell
double moment(const ParticleEnsemble& ens, double ell);

// Stable counting sort of the particle arrays by flattened cell index. Purely a
// memory-locality optimization for the CIC loops; any per-particle reduction is
// order-sensitive only at the rounding level.
void sort_by_cell(ParticleEnsemble& ens, const GridSpec& grid);

// Shared CIC helpers (node-centered multilinear kernel).
struct CicStencil {
    std::size_t idx[8];
    double wt[8];
    int corners;
};
CicStencil cic_stencil(const GridSpec& g, const double* xp);

}  // namespace kinfluid

#pragma once

#include <string>
#include <vector>

#include "kinfluid/coupling.hpp"

namespace kinfluid {

struct DtPolicy {
    enum class Mode { cfl, fixed };
    Mode mode = Mode::cfl;
    CflPolicy cfl;
    double fixed_dt = 1e-3;
};

struct CouplingConfig {
    enum class Scheme { splitting, picard };
    Scheme scheme = Scheme::splitting;
    double tol = 1e-10;
    int max_iter = 25;
};

// One retained Fourier mode of the initial mean-free velocity: the coefficient
// at +k is re + i im (conjugate placed at -k), so the physical contribution is
// 2(re cos(2 pi k.x) - im sin(2 pi k.x)). Divergence-free requires k.re = k.im = 0.
struct U0Mode {
    int k[3] = {0, 0, 0};
    Vec3 re = vec_zero();
    Vec3 im = vec_zero();
};

struct RunConfig {
    int schema = 1;
    GridSpec grid;
    PowerLaw law;
    double eps = 0.0;
    bool double_mollify = true;
    CouplingConfig coupling;
    DtPolicy dt;
    double t_end = 1.0;
    std::size_t n_particles = 1000;
    InitialData f0;
    std::vector<U0Mode> u0_modes;
    Vec3 u0_mean = vec_zero();
    std::string out_dir;
    int cadence = 1;
    std::vector<double> rho_norm_qs{1.0, 2.0};
};

// JSON <-> RunConfig. Parsing reports the offending field on error; the echo
// round-trips to an equivalent config.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);
std::string echo_config(const RunConfig& cfg);

FluidState build_initial_fluid(const RunConfig& cfg);
SystemState build_initial_state(const RunConfig& cfg);

}  // namespace kinfluid

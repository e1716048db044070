#include "kinfluid/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace kinfluid {

namespace {

using nlohmann::json;

const json& need(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing field: " + path + key);
    return *it;
}

double num(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_number()) throw ConfigError("field " + path + key + " must be a number");
    return v.get<double>();
}

double num_or(const json& j, const char* key, double dflt) {
    auto it = j.find(key);
    return it == j.end() ? dflt : it->get<double>();
}

Vec3 vec(const json& j, const char* key, const std::string& path, int dim) {
    const json& v = need(j, key, path);
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        throw ConfigError("field " + path + key + " must be an array of length " +
                          std::to_string(dim));
    Vec3 out = vec_zero();
    for (int d = 0; d < dim; ++d) out[d] = v[d].get<double>();
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    try {
        cfg.schema = static_cast<int>(num(j, "schema", ""));
        if (cfg.schema != 1)
            throw ConfigError("schema: unsupported version " + std::to_string(cfg.schema));

        const json& jg = need(j, "grid", "");
        cfg.grid = GridSpec(static_cast<int>(num(jg, "dim", "grid.")),
                            static_cast<int>(num(jg, "n", "grid.")));

        const json& jl = need(j, "law", "");
        cfg.law.mu = num(jl, "mu", "law.");
        cfg.law.p = num(jl, "p", "law.");
        cfg.law.delta = num_or(jl, "delta", 1e-8);
        cfg.law.validate();

        cfg.eps = num_or(j, "eps", 0.0);
        if (cfg.eps < 0.0) throw ConfigError("eps must be >= 0");
        cfg.double_mollify = j.value("double_mollify", true);

        if (j.contains("coupling")) {
            const json& jc = j["coupling"];
            std::string scheme = jc.value("scheme", "splitting");
            if (scheme == "splitting")
                cfg.coupling.scheme = CouplingConfig::Scheme::splitting;
            else if (scheme == "picard")
                cfg.coupling.scheme = CouplingConfig::Scheme::picard;
            else
                throw ConfigError("coupling.scheme must be 'splitting' or 'picard'");
            cfg.coupling.tol = num_or(jc, "tol", 1e-10);
            cfg.coupling.max_iter = static_cast<int>(num_or(jc, "max_iter", 25));
            if (cfg.coupling.max_iter < 1) throw ConfigError("coupling.max_iter must be >= 1");
        }

        const json& jt = need(j, "time", "");
        cfg.t_end = num(jt, "t_end", "time.");
        if (!(cfg.t_end > 0.0)) throw ConfigError("time.t_end must be > 0");
        const json& jdt = need(jt, "dt", "time.");
        std::string mode = jdt.value("mode", "cfl");
        if (mode == "cfl") {
            cfg.dt.mode = DtPolicy::Mode::cfl;
            cfg.dt.cfl.c_visc = num_or(jdt, "c_visc", 0.25);
            cfg.dt.cfl.c_adv = num_or(jdt, "c_adv", 0.5);
            cfg.dt.cfl.dt_max = num_or(jdt, "dt_max", 1e-2);
            cfg.dt.cfl.dt_scale = num_or(jdt, "scale", 1.0);
            if (!(cfg.dt.cfl.c_visc > 0.0) || !(cfg.dt.cfl.c_adv > 0.0) ||
                !(cfg.dt.cfl.dt_max > 0.0) || !(cfg.dt.cfl.dt_scale > 0.0))
                throw ConfigError("time.dt: CFL factors must be > 0");
        } else if (mode == "fixed") {
            cfg.dt.mode = DtPolicy::Mode::fixed;
            cfg.dt.fixed_dt = num(jdt, "value", "time.dt.");
            if (!(cfg.dt.fixed_dt > 0.0)) throw ConfigError("time.dt.value must be > 0");
            cfg.dt.cfl.dt_max = std::numeric_limits<double>::infinity();
        } else {
            throw ConfigError("time.dt.mode must be 'cfl' or 'fixed'");
        }

        const json& jp = need(j, "particles", "");
        double count = num(jp, "count", "particles.");
        if (!(count >= 1.0)) throw ConfigError("particles.count must be >= 1");
        cfg.n_particles = static_cast<std::size_t>(count);
        cfg.f0.seed = static_cast<std::uint64_t>(num_or(jp, "seed", 0.0));
        const json& jf = need(jp, "f0", "particles.");
        std::string type = jf.value("type", "maxwellian");
        if (type == "maxwellian") {
            cfg.f0.profile = InitialData::Profile::maxwellian;
            cfg.f0.v_mean = vec(jf, "v_mean", "particles.f0.", cfg.grid.dim);
            cfg.f0.sigma = num(jf, "sigma", "particles.f0.");
            if (cfg.f0.sigma < 0.0) throw ConfigError("particles.f0.sigma must be >= 0");
        } else if (type == "monokinetic") {
            cfg.f0.profile = InitialData::Profile::monokinetic;
            cfg.f0.v0 = vec(jf, "v0", "particles.f0.", cfg.grid.dim);
        } else {
            throw ConfigError("particles.f0.type must be 'maxwellian' or 'monokinetic'");
        }
        cfg.f0.eps_v = num_or(jf, "eps_v", 0.0);
        if (cfg.f0.eps_v < 0.0) throw ConfigError("particles.f0.eps_v must be >= 0");
        cfg.f0.space_amp = num_or(jf, "space_amp", 0.0);
        cfg.f0.space_axis = static_cast<int>(num_or(jf, "space_axis", 0.0));

        const json& ju = need(j, "u0", "");
        cfg.u0_mean = vec(ju, "mean", "u0.", cfg.grid.dim);
        if (ju.contains("modes")) {
            for (std::size_t idx = 0; idx < ju["modes"].size(); ++idx) {
                const json& jm = ju["modes"][idx];
                std::string path = "u0.modes[" + std::to_string(idx) + "].";
                U0Mode m;
                const json& jk = need(jm, "k", path);
                if (!jk.is_array() || static_cast<int>(jk.size()) != cfg.grid.dim)
                    throw ConfigError("field " + path + "k must have length dim");
                int knorm = 0;
                for (int d = 0; d < cfg.grid.dim; ++d) {
                    m.k[d] = jk[d].get<int>();
                    knorm += std::abs(m.k[d]);
                    if (std::abs(m.k[d]) > cfg.grid.n / 2)
                        throw ConfigError(path + "k exceeds the grid Nyquist mode");
                }
                if (knorm == 0) throw ConfigError(path + "k must be nonzero (mean is u0.mean)");
                m.re = vec(jm, "re", path, cfg.grid.dim);
                if (jm.contains("im")) m.im = vec(jm, "im", path, cfg.grid.dim);
                double kre = 0.0, kim = 0.0;
                for (int d = 0; d < cfg.grid.dim; ++d) {
                    kre += m.k[d] * m.re[d];
                    kim += m.k[d] * m.im[d];
                }
                if (std::abs(kre) > 1e-12 || std::abs(kim) > 1e-12)
                    throw ConfigError(path + " violates k.u = 0 (divergence-free)");
                cfg.u0_modes.push_back(m);
            }
        }

        if (j.contains("output")) {
            const json& jo = j["output"];
            cfg.out_dir = jo.value("dir", "");
            cfg.cadence = static_cast<int>(num_or(jo, "cadence", 1.0));
            if (cfg.cadence < 1) throw ConfigError("output.cadence must be >= 1");
            if (jo.contains("rho_norm_qs")) {
                cfg.rho_norm_qs.clear();
                for (const auto& q : jo["rho_norm_qs"]) {
                    if (q.is_string()) {
                        if (q.get<std::string>() != "inf")
                            throw ConfigError("output.rho_norm_qs entries must be numbers or 'inf'");
                        cfg.rho_norm_qs.push_back(std::numeric_limits<double>::infinity());
                    } else {
                        double qv = q.get<double>();
                        if (!(qv >= 1.0)) throw ConfigError("output.rho_norm_qs entries must be >= 1");
                        cfg.rho_norm_qs.push_back(qv);
                    }
                }
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string echo_config(const RunConfig& cfg) {
    json j;
    j["schema"] = cfg.schema;
    j["grid"] = {{"dim", cfg.grid.dim}, {"n", cfg.grid.n}};
    j["law"] = {{"mu", cfg.law.mu}, {"p", cfg.law.p}, {"delta", cfg.law.delta}};
    j["eps"] = cfg.eps;
    j["double_mollify"] = cfg.double_mollify;
    j["coupling"] = {
        {"scheme", cfg.coupling.scheme == CouplingConfig::Scheme::picard ? "picard" : "splitting"},
        {"tol", cfg.coupling.tol},
        {"max_iter", cfg.coupling.max_iter}};
    json jdt;
    if (cfg.dt.mode == DtPolicy::Mode::cfl) {
        jdt = {{"mode", "cfl"},
               {"c_visc", cfg.dt.cfl.c_visc},
               {"c_adv", cfg.dt.cfl.c_adv},
               {"dt_max", cfg.dt.cfl.dt_max},
               {"scale", cfg.dt.cfl.dt_scale}};
    } else {
        jdt = {{"mode", "fixed"}, {"value", cfg.dt.fixed_dt}};
    }
    j["time"] = {{"t_end", cfg.t_end}, {"dt", jdt}};
    json jf;
    if (cfg.f0.profile == InitialData::Profile::maxwellian) {
        jf["type"] = "maxwellian";
        jf["v_mean"] = std::vector<double>(cfg.f0.v_mean.begin(),
                                           cfg.f0.v_mean.begin() + cfg.grid.dim);
        jf["sigma"] = cfg.f0.sigma;
    } else {
        jf["type"] = "monokinetic";
        jf["v0"] = std::vector<double>(cfg.f0.v0.begin(), cfg.f0.v0.begin() + cfg.grid.dim);
    }
    jf["eps_v"] = cfg.f0.eps_v;
    jf["space_amp"] = cfg.f0.space_amp;
    jf["space_axis"] = cfg.f0.space_axis;
    j["particles"] = {{"count", cfg.n_particles}, {"seed", cfg.f0.seed}, {"f0", jf}};
    json jmodes = json::array();
    for (const auto& m : cfg.u0_modes) {
        json jm;
        jm["k"] = std::vector<int>(m.k, m.k + cfg.grid.dim);
        jm["re"] = std::vector<double>(m.re.begin(), m.re.begin() + cfg.grid.dim);
        jm["im"] = std::vector<double>(m.im.begin(), m.im.begin() + cfg.grid.dim);
        jmodes.push_back(jm);
    }
    j["u0"] = {{"mean", std::vector<double>(cfg.u0_mean.begin(),
                                            cfg.u0_mean.begin() + cfg.grid.dim)},
               {"modes", jmodes}};
    json jq = json::array();
    for (double q : cfg.rho_norm_qs) {
        if (std::isinf(q))
            jq.push_back("inf");
        else
            jq.push_back(q);
    }
    j["output"] = {{"dir", cfg.out_dir}, {"cadence", cfg.cadence}, {"rho_norm_qs", jq}};
    return j.dump(2);
}

FluidState build_initial_fluid(const RunConfig& cfg) {
    SpectralField w(cfg.grid, cfg.grid.dim);
    const int n = cfg.grid.n;
    for (const auto& m : cfg.u0_modes) {
        int ik[3] = {0, 0, 0}, ineg[3] = {0, 0, 0};
        for (int d = 0; d < cfg.grid.dim; ++d) {
            ik[d] = (m.k[d] % n + n) % n;
            ineg[d] = (n - ik[d]) % n;
        }
        std::size_t ip = cell_index(cfg.grid, ik[0], ik[1], ik[2]);
        std::size_t in = cell_index(cfg.grid, ineg[0], ineg[1], ineg[2]);
        for (int d = 0; d < cfg.grid.dim; ++d) {
            std::complex<double> c{m.re[d], m.im[d]};
            w.comp(d)[ip] += c;
            if (in != ip) w.comp(d)[in] += std::conj(c);
        }
    }
    w = leray_project(dealias(w));
    FluidState st{std::move(w), cfg.u0_mean, cfg.eps};
    st.validate();
    return st;
}

SystemState build_initial_state(const RunConfig& cfg) {
    SystemState s;
    s.fluid = build_initial_fluid(cfg);
    s.particles = sample_initial(cfg.f0, cfg.grid.dim, cfg.n_particles);
    s.t = 0.0;
    return s;
}

}  // namespace kinfluid

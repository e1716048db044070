#include "kinfluid/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace kinfluid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string q_label(double q) {
    if (std::isinf(q)) return "inf";
    char buf[32];
    if (q == std::floor(q))
        std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(q));
    else
        std::snprintf(buf, sizeof(buf), "%g", q);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << content;
    }
    fs::rename(tmp, path);
}

// Super-algebraic detector for p > 2 runs: if the transform E^{(2-p)/2} steepens
// markedly across the fit window, decay is faster than the algebraic envelope
// (the drag channel dominates).
bool transform_steepens(const std::vector<DiagnosticsRow>& rows, const DecayFit& fit, double p) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows)
        if (r.t >= fit.t0 && r.t <= fit.t1 && r.E_mod > 0.0)
            pts.emplace_back(r.t, std::pow(r.E_mod, 0.5 * (2.0 - p)));
    if (pts.size() < 6) return false;
    std::size_t half = pts.size() / 2;
    auto slope = [&](std::size_t a, std::size_t b) {
        double st = 0, sy = 0, stt = 0, sty = 0;
        double n = static_cast<double>(b - a);
        for (std::size_t i = a; i < b; ++i) {
            st += pts[i].first;
            sy += pts[i].second;
            stt += pts[i].first * pts[i].first;
            sty += pts[i].first * pts[i].second;
        }
        double den = n * stt - st * st;
        return den != 0.0 ? (n * sty - st * sy) / den : 0.0;
    };
    double s1 = slope(0, half), s2 = slope(half, pts.size());
    return s1 > 0.0 && s2 > 2.0 * s1;
}

}  // namespace

RunResult simulate(const RunConfig& cfg) {
    auto t_start = std::chrono::steady_clock::now();
    RunResult res;
    res.config = cfg;

    SystemState state = build_initial_state(cfg);
    sort_by_cell(state.particles, cfg.grid);  // cache locality for the CIC loops
    const SystemState initial = state;
    constexpr long kResortEvery = 256;
    StepOptions opts;
    opts.cfl = cfg.dt.cfl;
    opts.double_mollify = cfg.double_mollify;
    opts.check_cfl = cfg.dt.mode == DtPolicy::Mode::cfl ? false : true;

    res.rows.push_back(compute_row(state, cfg.law, cfg.rho_norm_qs));
    const double mass0 = res.rows[0].mass;
    const Vec3 p0 = res.rows[0].momentum;
    res.summary.rho_linf_initial = 0.0;
    for (const auto& [q, v] : res.rows[0].rho_norms)
        if (std::isinf(q)) res.summary.rho_linf_initial = v;
    res.summary.rho_linf_max = res.summary.rho_linf_initial;
    res.summary.dt_min = std::numeric_limits<double>::infinity();

    const double t_eps = 1e-12 * cfg.t_end;
    long step = 0;
    while (state.t < cfg.t_end - t_eps) {
        double dt;
        if (cfg.dt.mode == DtPolicy::Mode::cfl) {
            dt = admissible_dt(state, cfg.law, cfg.dt.cfl);
            if (!(dt > 0.0)) throw NumericalError("simulate: admissible dt collapsed to 0");
        } else {
            dt = cfg.dt.fixed_dt;
        }
        dt = std::min(dt, cfg.t_end - state.t);

        if (cfg.coupling.scheme == CouplingConfig::Scheme::picard) {
            PicardResult pr = step_picard(state, cfg.law, dt, cfg.coupling.tol,
                                          cfg.coupling.max_iter, opts);
            if (!pr.converged) ++res.summary.picard_nonconverged_steps;
            res.summary.picard_max_iterations =
                std::max(res.summary.picard_max_iterations, pr.iterations);
            state = std::move(pr.state);
        } else {
            state = step_splitting(state, cfg.law, dt, opts);
        }
        ++step;
        if (step % kResortEvery == 0) sort_by_cell(state.particles, cfg.grid);
        res.summary.dt_min = std::min(res.summary.dt_min, dt);
        res.summary.dt_max = std::max(res.summary.dt_max, dt);

        if (step % cfg.cadence == 0 || state.t >= cfg.t_end - t_eps) {
            DiagnosticsRow row = compute_row(state, cfg.law, cfg.rho_norm_qs);
            const DiagnosticsRow& prev = res.rows.back();
            res.summary.e_mod_uptick_max =
                std::max(res.summary.e_mod_uptick_max, row.E_mod - prev.E_mod);
            res.summary.mass_drift_max =
                std::max(res.summary.mass_drift_max, std::abs(row.mass - mass0));
            Vec3 dp = vec_sub(row.momentum, p0);
            res.summary.momentum_drift_max =
                std::max(res.summary.momentum_drift_max, vec_norm(dp, cfg.grid.dim));
            for (const auto& [q, v] : row.rho_norms)
                if (std::isinf(q)) res.summary.rho_linf_max = std::max(res.summary.rho_linf_max, v);
            Dissipation dd = dissipation(state, cfg.law);
            if (dd.D_visc > 0.0)
                res.summary.d_visc_delta_gap_max =
                    std::max(res.summary.d_visc_delta_gap_max,
                             std::abs(dd.D_visc - dd.D_visc_reg) / dd.D_visc);
            res.rows.push_back(std::move(row));
        }
    }
    res.summary.steps = step;
    if (res.summary.dt_min > res.summary.dt_max) res.summary.dt_min = res.summary.dt_max;

    // Balance residuals; at an exact equilibrium fall back to absolute values.
    try {
        auto [rm, rt] = balance_residual(res.rows);
        res.summary.r_mod = rm;
        res.summary.r_tot = rt;
    } catch (const DataError&) {
        res.summary.residual_relative = false;
        KahanSum integral;
        double rm = 0.0, rt = 0.0;
        for (std::size_t i = 1; i < res.rows.size(); ++i) {
            double dt = res.rows[i].t - res.rows[i - 1].t;
            integral.add(0.5 * dt * (res.rows[i].D + res.rows[i - 1].D));
            rm = std::max(rm, std::abs(res.rows[i].E_mod + integral.value() - res.rows[0].E_mod));
            rt = std::max(rt, std::abs(res.rows[i].E_tot + integral.value() - res.rows[0].E_tot));
        }
        res.summary.r_mod = rm;
        res.summary.r_tot = rt;
    }

    try {
        res.summary.fit = fit_decay(res.rows, cfg.law.p);
        res.summary.regime = res.summary.fit->mode;
        if (cfg.law.p > 2.0 && transform_steepens(res.rows, *res.summary.fit, cfg.law.p))
            res.summary.regime = "super_algebraic_drag_dominated";
    } catch (const DataError& e) {
        res.summary.fit_error = e.what();
    }

    res.summary.v_inf = v_infinity(initial);
    const DiagnosticsRow& last = res.rows.back();
    Vec3 du = vec_sub(last.u_c, res.summary.v_inf);
    Vec3 dv = vec_sub(last.v_c, res.summary.v_inf);
    res.summary.u_c_final_error = vec_norm(du, cfg.grid.dim);
    res.summary.v_c_final_error = vec_norm(dv, cfg.grid.dim);
    res.summary.rho_bound_flag =
        res.summary.rho_linf_initial > 0.0 &&
        res.summary.rho_linf_max > 10.0 * res.summary.rho_linf_initial;

    res.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

void write_series_csv(const std::vector<DiagnosticsRow>& rows, int dim, const std::string& path) {
    std::ostringstream out;
    out << "t,E_tot,E_mod,D,D_visc,D_drag";
    for (int d = 1; d <= dim; ++d) out << ",u_c_" << d;
    for (int d = 1; d <= dim; ++d) out << ",v_c_" << d;
    out << ",mass";
    for (int d = 1; d <= dim; ++d) out << ",P_" << d;
    if (!rows.empty())
        for (const auto& [q, v] : rows[0].rho_norms) out << ",rho_L" << q_label(q);
    out << ",max_moment\n";
    for (const auto& r : rows) {
        out << fmt17(r.t) << ',' << fmt17(r.E_tot) << ',' << fmt17(r.E_mod) << ',' << fmt17(r.D)
            << ',' << fmt17(r.D_visc) << ',' << fmt17(r.D_drag);
        for (int d = 0; d < dim; ++d) out << ',' << fmt17(r.u_c[d]);
        for (int d = 0; d < dim; ++d) out << ',' << fmt17(r.v_c[d]);
        out << ',' << fmt17(r.mass);
        for (int d = 0; d < dim; ++d) out << ',' << fmt17(r.momentum[d]);
        for (const auto& [q, v] : r.rho_norms) out << ',' << fmt17(v);
        out << ',' << fmt17(r.max_moment) << '\n';
    }
    atomic_write(path, out.str());
}

std::vector<DiagnosticsRow> read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": line 1: empty file");

    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
    }
    const char* expect[] = {"t", "E_tot", "E_mod", "D", "D_visc", "D_drag"};
    for (int i = 0; i < 6; ++i)
        if (i >= static_cast<int>(cols.size()) || cols[i] != expect[i])
            throw DataError(path + ": line 1: expected column " + std::to_string(i + 1) +
                            " to be '" + expect[i] + "'");
    int dim = 0;
    for (const auto& c : cols)
        if (c.rfind("u_c_", 0) == 0) ++dim;
    if (dim < 2 || dim > 3) throw DataError(path + ": line 1: cannot infer dim from u_c columns");
    std::vector<double> qs;
    for (const auto& c : cols) {
        if (c.rfind("rho_L", 0) == 0) {
            std::string tag = c.substr(5);
            qs.push_back(tag == "inf" ? std::numeric_limits<double>::infinity()
                                      : std::stod(tag));
        }
    }

    std::vector<DiagnosticsRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t pos = 0;
                double v = std::stod(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
                vals.push_back(v);
            } catch (const std::exception&) {
                throw DataError(path + ": line " + std::to_string(lineno) +
                                ": malformed number '" + tok + "'");
            }
        }
        if (vals.size() != cols.size())
            throw DataError(path + ": line " + std::to_string(lineno) + ": expected " +
                            std::to_string(cols.size()) + " fields, got " +
                            std::to_string(vals.size()));
        DiagnosticsRow r;
        std::size_t i = 0;
        r.t = vals[i++];
        r.E_tot = vals[i++];
        r.E_mod = vals[i++];
        r.D = vals[i++];
        r.D_visc = vals[i++];
        r.D_drag = vals[i++];
        for (int d = 0; d < dim; ++d) r.u_c[d] = vals[i++];
        for (int d = 0; d < dim; ++d) r.v_c[d] = vals[i++];
        r.mass = vals[i++];
        for (int d = 0; d < dim; ++d) r.momentum[d] = vals[i++];
        for (double q : qs) r.rho_norms.emplace_back(q, vals[i++]);
        if (i < vals.size()) r.max_moment = vals[i++];
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw DataError(path + ": no data rows");
    return rows;
}

std::string decay_fit_json(const DecayFit& fit) {
    json j;
    j["mode"] = fit.mode;
    j["window"] = {fit.t0, fit.t1};
    j["slope"] = fit.slope;
    j["c0"] = fit.c0;
    j["r2"] = fit.r2;
    j["c0_envelope"] = fit.c0_env;
    return j.dump(2);
}

std::string summary_json(const RunResult& res) {
    json j;
    j["r_mod"] = res.summary.r_mod;
    j["r_tot"] = res.summary.r_tot;
    j["residual_normalization"] = res.summary.residual_relative ? "relative" : "absolute";
    if (res.summary.fit)
        j["fit"] = json::parse(decay_fit_json(*res.summary.fit));
    else
        j["fit"] = nullptr;
    if (!res.summary.fit_error.empty()) j["fit_error"] = res.summary.fit_error;
    j["regime"] = res.summary.regime;
    j["v_infinity"] = std::vector<double>(res.summary.v_inf.begin(),
                                          res.summary.v_inf.begin() + res.config.grid.dim);
    j["u_c_final_error"] = res.summary.u_c_final_error;
    j["v_c_final_error"] = res.summary.v_c_final_error;
    j["mass_drift_max"] = res.summary.mass_drift_max;
    j["momentum_drift_max"] = res.summary.momentum_drift_max;
    j["e_mod_uptick_max"] = res.summary.e_mod_uptick_max;
    j["d_visc_delta_gap_max"] = res.summary.d_visc_delta_gap_max;
    j["rho_linf_initial"] = res.summary.rho_linf_initial;
    j["rho_linf_max"] = res.summary.rho_linf_max;
    j["rho_bound_flag"] = res.summary.rho_bound_flag;
    j["steps"] = res.summary.steps;
    j["dt_min"] = res.summary.dt_min;
    j["dt_max"] = res.summary.dt_max;
    j["wall_seconds"] = res.summary.wall_seconds;
    if (res.config.coupling.scheme == CouplingConfig::Scheme::picard) {
        j["picard"] = {{"max_iterations", res.summary.picard_max_iterations},
                       {"nonconverged_steps", res.summary.picard_nonconverged_steps}};
    }
    return j.dump(2);
}

void write_outputs(const RunResult& res, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_series_csv(res.rows, res.config.grid.dim, out_dir + "/series.csv");
    atomic_write(out_dir + "/config.echo.json", echo_config(res.config) + "\n");
    atomic_write(out_dir + "/summary.json", summary_json(res) + "\n");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    try {
        RunConfig cfg = load_config_file(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (cfg.out_dir.empty()) throw ConfigError("no output directory (set --out or output.dir)");
        RunResult res = simulate(cfg);
        write_outputs(res, cfg.out_dir);
        std::cout << "simulate: " << res.summary.steps << " steps, r_mod=" << res.summary.r_mod
                  << ", r_tot=" << res.summary.r_tot << ", wrote " << cfg.out_dir << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const StepRejected& e) {
        std::cerr << "numerical failure: " << e.what()
                  << " (admissible dt = " << e.admissible_dt << ")\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    }
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& p_list,
              const std::string& out_dir) {
    try {
        if (p_list.empty()) throw ConfigError("sweep: empty p list");
        RunConfig base = load_config_file(config_path);
        if (!out_dir.empty()) base.out_dir = out_dir;
        if (base.out_dir.empty()) throw ConfigError("no output directory (set --out or output.dir)");
        fs::create_directories(base.out_dir);

        std::ostringstream sweep;
        sweep << "p,mode,rate,slope,r2,r_mod,r_tot,status\n";
        bool any_failed = false;
        for (double p : p_list) {
            RunConfig cfg = base;
            cfg.law.p = p;
            char tag[32];
            std::snprintf(tag, sizeof(tag), "p_%g", p);
            cfg.out_dir = base.out_dir + "/" + tag;
            try {
                cfg.law.validate();
                RunResult res = simulate(cfg);
                write_outputs(res, cfg.out_dir);
                sweep << fmt17(p) << ',';
                if (res.summary.fit)
                    sweep << res.summary.fit->mode << ',' << fmt17(res.summary.fit->c0) << ','
                          << fmt17(res.summary.fit->slope) << ',' << fmt17(res.summary.fit->r2);
                else
                    sweep << "none,nan,nan,nan";
                sweep << ',' << fmt17(res.summary.r_mod) << ',' << fmt17(res.summary.r_tot)
                      << ",ok\n";
            } catch (const std::exception& e) {
                any_failed = true;
                std::cerr << "sweep child p=" << p << " failed: " << e.what() << "\n";
                sweep << fmt17(p) << ",none,nan,nan,nan,nan,nan,failed\n";
            }
        }
        atomic_write(base.out_dir + "/sweep.csv", sweep.str());
        return any_failed ? 3 : 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    }
}

int cmd_fit(const std::string& csv_path, double p) {
    try {
        std::vector<DiagnosticsRow> rows = read_series_csv(csv_path);
        DecayFit fit = fit_decay(rows, p);
        std::cout << decay_fit_json(fit) << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace kinfluid

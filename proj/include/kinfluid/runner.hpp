#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kinfluid/config.hpp"
#include "kinfluid/diagnostics.hpp"

namespace kinfluid {

struct RunSummary {
    double r_mod = 0.0;
    double r_tot = 0.0;
    bool residual_relative = true;  // false when E_mod(0) = 0 (absolute residuals)
    std::optional<DecayFit> fit;
    std::string fit_error;
    Vec3 v_inf = vec_zero();
    double u_c_final_error = 0.0;  // |u_c(t_end) - v_inf|
    double v_c_final_error = 0.0;
    double mass_drift_max = 0.0;      // max |mass(t) - mass(0)|
    double momentum_drift_max = 0.0;  // max |P(t) - P(0)| (euclidean)
    double e_mod_uptick_max = 0.0;    // largest per-row increase of E_mod
    double d_visc_delta_gap_max = 0.0;
    double rho_linf_initial = 0.0;
    double rho_linf_max = 0.0;
    bool rho_bound_flag = false;  // report-only: Linf grew by > 10x
    std::string regime;           // exponential | algebraic | super_algebraic_drag_dominated
    long steps = 0;
    double dt_min = 0.0;
    double dt_max = 0.0;
    double wall_seconds = 0.0;
    int picard_max_iterations = 0;
    long picard_nonconverged_steps = 0;
};

struct RunResult {
    RunConfig config;
    std::vector<DiagnosticsRow> rows;
    RunSummary summary;
};

// Run the configured stepper to t_end, sampling diagnostics every `cadence`
// steps (plus the initial and final states).
RunResult simulate(const RunConfig& cfg);

// series.csv, config.echo.json, summary.json under out_dir (atomic writes).
void write_outputs(const RunResult& res, const std::string& out_dir);

void write_series_csv(const std::vector<DiagnosticsRow>& rows, int dim,
                      const std::string& path);
std::vector<DiagnosticsRow> read_series_csv(const std::string& path);

std::string summary_json(const RunResult& res);
std::string decay_fit_json(const DecayFit& fit);

// CLI entry points; return process exit codes (0 ok, 2 config, 3 numerical, 4 data).
int cmd_simulate(const std::string& config_path, const std::string& out_dir);
int cmd_sweep(const std::string& config_path, const std::vector<double>& p_list,
              const std::string& out_dir);
int cmd_fit(const std::string& csv_path, double p);

}  // namespace kinfluid

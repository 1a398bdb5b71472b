// Subcommand implementations of the homopt command-line tool. Each command
// writes its artifacts below the output directory and returns an exit code.
#pragma once

#include "homopt/io.hpp"
#include "homopt/run_config.hpp"
#include "homopt/validation.hpp"

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace homopt::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kSolverFailure = 2, kNotConverged = 3 };

struct Options {
  std::string config_path;
  std::string density_path;
  std::string out_dir;  ///< overrides the configured output directory
  std::string preset;
  int threads{1};
  std::string fd_scheme;  ///< overrides validation.fd_scheme when set
};

inline RunConfig resolve_config(const Options& opt) {
  RunConfig c = load_config(opt.preset, opt.config_path);
  if (!opt.out_dir.empty()) c.output = opt.out_dir;
  if (!opt.fd_scheme.empty()) c.validation.scheme = fd_scheme_from_string(opt.fd_scheme);
  if (opt.threads < 1) throw ConfigError("--threads must be >= 1");
  return c;
}

inline Json sym_json(const Sym2& s) { return Json::array({s.xx, s.yy, s.xy}); }

inline Json report_json(const ObjectiveReport& rep) {
  Json cases = Json::array();
  for (size_t k = 0; k < rep.mean_stresses.size(); ++k) {
    cases.push_back({{"mean_stress", sym_json(rep.mean_stresses[k])},
                     {"target_stress", sym_json(rep.target_stresses[k])}});
  }
  return {{"f_total", rep.f_total}, {"f_stress", rep.f_stress}, {"f_interface", rep.f_interface}, {"cases", cases}};
}

inline Json effective_json(const EffectiveConstants& ec) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({ec.stiffness(r, 0), ec.stiffness(r, 1), ec.stiffness(r, 2)}));
  return {{"mu", ec.mu}, {"nu", ec.nu}, {"stiffness_mandel", rows}};
}

inline void write_json(const fs::path& path, const Json& doc) { open_for_writing(path) << doc.dump(2) << '\n'; }

inline void dump_fields(const fs::path& path, const EquilibriumSolution& sol) {
  CsvTable t({"pixel", "element", "eps_xx", "eps_yy", "eps_xy", "sig_xx", "sig_yy", "sig_xy"});
  const GridSpec& g = sol.strain.grid();
  for (int p = 0; p < g.n_pixels(); ++p) {
    for (int e = 0; e < kElementsPerPixel; ++e) {
      const Sym2 eps = sol.strain.at(p, e), sig = sol.stress.at(p, e);
      t.row(p, e, eps.xx, eps.yy, eps.xy, sig.xx, sig.yy, sig.xy);
    }
  }
  t.write(path);
}

/// Equilibrium for every configured load case on a given density.
inline int cmd_solve(const Options& opt) {
  const RunConfig c = resolve_config(opt);
  if (opt.density_path.empty()) throw ConfigError("solve needs --density");
  const auto rho = read_density(opt.density_path, c.grid);
  const auto problem = c.problem(opt.threads);
  const fs::path out = c.output;

  Json summary{{"command", "solve"}, {"config", config_to_json(c)}, {"density_file", opt.density_path}};
  const auto ev = problem.evaluate(rho);
  Json cases = Json::array();
  for (size_t k = 0; k < ev.solutions.size(); ++k) {
    const auto& s = ev.solutions[k];
    cases.push_back({{"case", c.target.case_ids[k]},
                     {"mean_strain", sym_json(s.load.mean_strain)},
                     {"mean_stress", sym_json(mean_stress(s))},
                     {"newton_steps", s.stats.newton_steps},
                     {"cg_iterations", s.stats.cg_iterations},
                     {"newton_residuals", s.stats.newton_residuals}});
    if (c.dump_fields) dump_fields(out / ("fields_case" + std::to_string(c.target.case_ids[k]) + ".csv"), s);
  }
  summary["cases"] = cases;
  summary["objective"] = report_json(ev.report);
  summary["status"] = "ok";
  write_json(out / "summary.json", summary);
  return kOk;
}

inline int cmd_homogenize(const Options& opt) {
  const RunConfig c = resolve_config(opt);
  if (opt.density_path.empty()) throw ConfigError("homogenize needs --density");
  const auto rho = read_density(opt.density_path, c.grid);
  const UnitCell cell(c.grid, c.phases);
  const auto ec = effective_constants(cell, rho, c.target.d_eps, c.solver, opt.threads);
  Json doc = effective_json(ec);
  doc["d_eps"] = c.target.d_eps;
  doc["density_file"] = opt.density_path;
  write_json(fs::path(c.output) / "effective.json", doc);
  return kOk;
}

inline int cmd_optimize(const Options& opt) {
  const RunConfig c = resolve_config(opt);
  const auto problem = c.problem(opt.threads);
  const fs::path out = c.output;
  const auto rho0 = initial_phase(c.init, c.grid, c.seed);
  write_density(out / "initial_density.txt", c.grid, rho0);
  write_pgm(out / "initial_density.pgm", c.grid, rho0);

  const auto res = minimize(problem, rho0, c.optimizer_settings());

  CsvTable trace({"iteration", "f_total", "f_stress", "f_interface", "pg_norm", "equilibrium_cg", "adjoint_cg",
                  "evaluations"});
  for (const auto& r : res.trace) {
    trace.row(r.iteration, r.f_total, r.f_stress, r.f_interface, r.pg_norm, r.equilibrium_cg, r.adjoint_cg,
              r.evaluations);
  }
  trace.write(out / "trace.csv");
  write_density(out / "density.txt", c.grid, res.rho);
  write_pgm(out / "density.pgm", c.grid, res.rho);
  const auto centred = center_void(c.grid, res.rho);
  write_density(out / "density_centered.txt", c.grid, centred);
  write_pgm(out / "density_centered.pgm", c.grid, centred);

  const auto ec = effective_constants(problem.cell(), res.rho, c.target.d_eps, c.solver, opt.threads);
  Json summary{{"command", "optimize"},
               {"config", config_to_json(c)},
               {"status", to_string(res.status)},
               {"converged", converged(res.status)},
               {"iterations", res.trace.empty() ? 0 : res.trace.back().iteration},
               {"objective", report_json(res.final_report)},
               {"initial_objective",
                res.trace.empty() ? Json() : Json{{"f_total", res.trace.front().f_total},
                                                  {"f_stress", res.trace.front().f_stress},
                                                  {"f_interface", res.trace.front().f_interface}}},
               {"effective", effective_json(ec)},
               {"intermediate_fraction", intermediate_fraction(res.rho)},
               {"void_regions", count_void_regions(c.grid, res.rho)},
               {"density_file", "density.txt"},
               {"centered_density_file", "density_centered.txt"}};
  if (res.gradient_check_error >= 0.0) summary["gradient_check_error"] = res.gradient_check_error;
  write_json(out / "summary.json", summary);
  return converged(res.status) ? kOk : kNotConverged;
}

inline int cmd_validate_adjoint(const Options& opt) {
  const RunConfig c = resolve_config(opt);
  const fs::path out = c.output;
  CsvTable table({"scenario", "init", "mu_target", "d_rho", "error"});
  Json fits = Json::array();
  for (size_t k = 0; k < c.validation.scenarios.size(); ++k) {
    const auto& sc = c.validation.scenarios[k];
    RunConfig sc_cfg = c;
    sc_cfg.target.mu_target = sc.mu_target;
    const auto problem = sc_cfg.problem(opt.threads);
    const auto rho = validation_density(c, sc);
    const auto rows = adjoint_fd_sweep(problem, rho, c.validation.d_rho, c.validation.scheme);
    for (const auto& r : rows) table.row(int(k), to_string(sc.init), sc.mu_target, r.d_rho, r.error);
    const auto fit = fit_loglog_slope(rows);
    fits.push_back({{"scenario", k},
                    {"init", to_string(sc.init)},
                    {"mu_target", sc.mu_target},
                    {"slope", fit.slope},
                    {"points", fit.points},
                    {"decades", fit.decades}});
  }
  table.write(out / "validation.csv");
  write_json(out / "validation_summary.json",
             {{"command", "validate-adjoint"},
              {"config", config_to_json(c)},
              {"fd_scheme", c.validation.scheme == FdScheme::forward ? "forward" : "central"},
              {"fits", fits}});
  return kOk;
}

}  // namespace homopt::cli

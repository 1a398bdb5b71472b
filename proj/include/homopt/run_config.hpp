/**
 * @file   run_config.hpp
 *
 * @brief  Run configuration as a nested JSON document, and bundled presets.
 *
 * Missing keys take their defaults, unknown keys are rejected. Serialising
 * writes every key except a grid.dy equal to the regular spacing, so
 * parse -> dump -> parse -> dump is a fixed point.
 */
#pragma once

#include "homopt/adjoint.hpp"
#include "homopt/optimizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace homopt {

using Json = nlohmann::ordered_json;

struct ValidationScenario {
  InitialPhase init{InitialPhase::sine};
  double mu_target{0.3};
  bool operator==(const ValidationScenario&) const = default;
};

struct ValidationConfig {
  std::vector<double> d_rho{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  FdScheme scheme{FdScheme::forward};
  double rho_lo{0.2};  ///< initial phase is mapped affinely into [rho_lo, rho_hi]
  double rho_hi{0.8};
  std::vector<ValidationScenario> scenarios{{InitialPhase::sine, 0.3}};
};

struct RunConfig {
  GridSpec grid{GridSpec::regular(31, 31, 1.0 / 31.0, Lattice::square)};
  MaterialPair phases{};
  TargetSpec target{};
  double eta_fraction{1.0 / 40.0};  ///< eta = eta_fraction * L_x
  double w_over_E2{1e-4};
  SolverSettings solver{};
  OptimizerSettings optimizer{};
  InitialPhase init{InitialPhase::sine};
  std::uint64_t seed{0};
  std::string output{"out"};
  bool dump_fields{false};
  ValidationConfig validation{};

  PhaseFieldParams phase_field() const { return {eta_fraction * grid.length_x(), w_over_E2 * phases.phase1.E}; }

  OptimizerSettings optimizer_settings() const {
    OptimizerSettings s = optimizer;
    s.seed = seed;
    return s;
  }

  DesignProblem problem(int threads = 1) const {
    return DesignProblem(UnitCell(grid, phases), target, phase_field(), solver, threads);
  }

  void validate() const {
    grid.validate();
    for (const auto& ph : {phases.phase0, phases.phase1}) {
      if (!(ph.E >= 0.0) || !(ph.nu > -1.0 && ph.nu < 1.0)) {
        throw ConfigError("phases: need E >= 0 and -1 < nu < 1");
      }
    }
    if (!(phases.phase1.E > 0.0)) throw ConfigError("phases.E2 must be positive");
    target.validate();
    if (!(eta_fraction > 0.0) || !(w_over_E2 >= 0.0)) {
      throw ConfigError("phase_field: need eta_fraction > 0 and w_over_E2 >= 0");
    }
    solver.validate();
    optimizer.validate();
    if (validation.d_rho.empty()) throw ConfigError("validation.d_rho must not be empty");
    for (size_t k = 0; k < validation.d_rho.size(); ++k) {
      if (!(validation.d_rho[k] > 0.0)) throw ConfigError("validation.d_rho entries must be positive");
      if (k && !(validation.d_rho[k] < validation.d_rho[k - 1])) {
        throw ConfigError("validation.d_rho must be strictly decreasing");
      }
    }
    if (!(0.0 <= validation.rho_lo && validation.rho_lo < validation.rho_hi && validation.rho_hi <= 1.0)) {
      throw ConfigError("validation: need 0 <= rho_lo < rho_hi <= 1");
    }
  }
};

namespace detail {

/// Typed, path-aware access to one JSON object with unknown-key detection.
class Reader {
 public:
  Reader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where(key) + ": expected " + type_name<T>() + ", got " + it->dump());
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    const std::string p = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
    return p.empty() ? "config" : "config." + p;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key '" + where(k) + "'");
    }
  }

 private:
  template <class T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "a list";
  }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto parse_enum(const Reader& r, const char* key, const std::string& value, F&& parse) {
  try {
    return parse(value);
  } catch (const ConfigError& e) {
    throw ConfigError(r.where(key) + ": " + e.what());
  }
}

}  // namespace detail

inline RunConfig config_from_json(const Json& doc) {
  using detail::Reader;
  RunConfig c;
  Reader top(doc, "");

  if (const Json* g = top.child("grid")) {
    Reader r(*g, "grid");
    int nx = c.grid.nx, ny = c.grid.ny;
    double dx = c.grid.dx, dy = 0.0;
    std::string lat = to_string(c.grid.lattice);
    r.get("nx", nx);
    r.get("ny", ny);
    r.get("dx", dx);
    r.get("dy", dy);
    r.get("lattice", lat);
    r.finish();
    const Lattice l = detail::parse_enum(r, "lattice", lat, [](const std::string& s) { return lattice_from_string(s); });
    c.grid = dy > 0.0 ? GridSpec{nx, ny, dx, dy, l} : GridSpec::regular(nx, ny, dx, l);
  }
  if (const Json* p = top.child("phases")) {
    Reader r(*p, "phases");
    r.get("E1", c.phases.phase0.E);
    r.get("nu1", c.phases.phase0.nu);
    r.get("E2", c.phases.phase1.E);
    r.get("nu2", c.phases.phase1.nu);
    r.finish();
  }
  if (const Json* t = top.child("target")) {
    Reader r(*t, "target");
    r.get("mu_target", c.target.mu_target);
    r.get("nu_target", c.target.nu_target);
    r.get("d_eps", c.target.d_eps);
    r.get("cases", c.target.case_ids);
    r.finish();
  }
  if (const Json* p = top.child("phase_field")) {
    Reader r(*p, "phase_field");
    r.get("eta_fraction", c.eta_fraction);
    r.get("w_over_E2", c.w_over_E2);
    r.finish();
  }
  if (const Json* s = top.child("solver")) {
    Reader r(*s, "solver");
    r.get("newton_tol", c.solver.newton_tol);
    r.get("cg_tol", c.solver.cg_tol);
    r.get("max_newton", c.solver.max_newton);
    r.get("max_cg", c.solver.max_cg);
    r.get("stagnation_window", c.solver.stagnation_window);
    r.finish();
  }
  if (const Json* o = top.child("optimizer")) {
    Reader r(*o, "optimizer");
    r.get("memory", c.optimizer.memory);
    r.get("pg_tol", c.optimizer.pg_tol);
    r.get("f_rel_tol", c.optimizer.f_rel_tol);
    r.get("max_iter", c.optimizer.max_iter);
    r.get("check_gradient", c.optimizer.check_gradient);
    r.finish();
  }
  if (const Json* i = top.child("init")) {
    Reader r(*i, "init");
    std::string kind = to_string(c.init);
    r.get("kind", kind);
    r.get("seed", c.seed);
    r.finish();
    c.init = detail::parse_enum(r, "kind", kind, initial_phase_from_string);
  }
  if (const Json* o = top.child("output")) {
    Reader r(*o, "output");
    r.get("dir", c.output);
    r.get("fields", c.dump_fields);
    r.finish();
  }
  if (const Json* v = top.child("validation")) {
    Reader r(*v, "validation");
    std::string scheme = c.validation.scheme == FdScheme::forward ? "forward" : "central";
    r.get("d_rho", c.validation.d_rho);
    r.get("fd_scheme", scheme);
    r.get("rho_lo", c.validation.rho_lo);
    r.get("rho_hi", c.validation.rho_hi);
    c.validation.scheme = detail::parse_enum(r, "fd_scheme", scheme, fd_scheme_from_string);
    if (const Json* list = r.child("scenarios")) {
      if (!list->is_array()) throw ConfigError(r.where("scenarios") + " must be a list");
      c.validation.scenarios.clear();
      for (size_t k = 0; k < list->size(); ++k) {
        Reader sr((*list)[k], "validation.scenarios[" + std::to_string(k) + "]");
        ValidationScenario sc;
        std::string init = to_string(sc.init);
        sr.get("init", init);
        sr.get("mu_target", sc.mu_target);
        sr.finish();
        sc.init = detail::parse_enum(sr, "init", init, initial_phase_from_string);
        c.validation.scenarios.push_back(sc);
      }
    }
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"dx", c.grid.dx}, {"lattice", to_string(c.grid.lattice)}};
  if (c.grid.dy != GridSpec::regular(c.grid.nx, c.grid.ny, c.grid.dx, c.grid.lattice).dy) j["grid"]["dy"] = c.grid.dy;
  j["phases"] = {{"E1", c.phases.phase0.E}, {"nu1", c.phases.phase0.nu}, {"E2", c.phases.phase1.E},
                 {"nu2", c.phases.phase1.nu}};
  j["target"] = {{"mu_target", c.target.mu_target}, {"nu_target", c.target.nu_target},
                 {"d_eps", c.target.d_eps}, {"cases", c.target.case_ids}};
  j["phase_field"] = {{"eta_fraction", c.eta_fraction}, {"w_over_E2", c.w_over_E2}};
  j["solver"] = {{"newton_tol", c.solver.newton_tol}, {"cg_tol", c.solver.cg_tol},
                 {"max_newton", c.solver.max_newton}, {"max_cg", c.solver.max_cg},
                 {"stagnation_window", c.solver.stagnation_window}};
  j["optimizer"] = {{"memory", c.optimizer.memory}, {"pg_tol", c.optimizer.pg_tol},
                    {"f_rel_tol", c.optimizer.f_rel_tol}, {"max_iter", c.optimizer.max_iter},
                    {"check_gradient", c.optimizer.check_gradient}};
  j["init"] = {{"kind", to_string(c.init)}, {"seed", c.seed}};
  j["output"] = {{"dir", c.output}, {"fields", c.dump_fields}};
  Json scenarios = Json::array();
  for (const auto& s : c.validation.scenarios) {
    scenarios.push_back({{"init", to_string(s.init)}, {"mu_target", s.mu_target}});
  }
  j["validation"] = {{"d_rho", c.validation.d_rho},
                     {"fd_scheme", c.validation.scheme == FdScheme::forward ? "forward" : "central"},
                     {"rho_lo", c.validation.rho_lo},
                     {"rho_hi", c.validation.rho_hi},
                     {"scenarios", scenarios}};
  return j;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

/// Cell edge lengths of the bundled optimisation presets. The interface
/// term scales with w * L while the stress mismatch does not, so L sets the
/// relative weight of the phase field.
inline constexpr double kPresetCellLength = 0.3;
inline constexpr double kAuxeticCellLength = 0.01;

inline std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const char* lat : {"square", "hexagonal"})
    for (const char* init : {"sine", "random"})
      for (const char* mu : {"30", "35"}) names.push_back(std::string("composite-") + lat + "-" + init + "-" + mu);
  names.insert(names.end(), {"auxetic", "validation-square", "validation-hexagonal"});
  return names;
}

/// Bundled configurations. composite-<lattice>-<init>-<30|35> targets a
/// shear modulus of 0.30 or 0.35 E2 under all three load cases.
inline Json preset_json(const std::string& name) {
  RunConfig c;
  c.output = "out/" + name;
  auto composite = [&](Lattice lat, InitialPhase init, double mu) {
    c.grid = GridSpec::regular(31, 31, kPresetCellLength / 31.0, lat);
    c.target = TargetSpec{mu, 0.0, 0.01, {0, 1, 2}};
    c.init = init;
  };
  bool found = false;
  for (auto lat : {Lattice::square, Lattice::hexagonal}) {
    for (auto init : {InitialPhase::sine, InitialPhase::random}) {
      for (auto [tag, mu] : {std::pair{"30", 0.3}, std::pair{"35", 0.35}}) {
        if (name == "composite-" + to_string(lat) + "-" + to_string(init) + "-" + tag) {
          composite(lat, init, mu);
          found = true;
        }
      }
    }
  }
  if (name == "auxetic") {
    c.grid = GridSpec::regular(31, 31, kAuxeticCellLength / 31.0, Lattice::square);
    c.target = TargetSpec{0.25, -1.0 / 3.0, 0.01, {1}};
    c.w_over_E2 = 3e-5;
    c.init = InitialPhase::random;
    found = true;
  }
  if (name == "validation-square" || name == "validation-hexagonal") {
    const Lattice lat = name == "validation-square" ? Lattice::square : Lattice::hexagonal;
    c.grid = GridSpec::regular(15, 15, kPresetCellLength / 15.0, lat);
    c.init = InitialPhase::random;
    c.solver.newton_tol = 1e-12;
    c.solver.cg_tol = 1e-14;
    c.validation.scenarios = {{InitialPhase::sine, 0.3},
                              {InitialPhase::sine, 0.35},
                              {InitialPhase::random, 0.3},
                              {InitialPhase::random, 0.35}};
    found = true;
  }
  if (!found) {
    std::string all;
    for (const auto& n : preset_names()) all += (all.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (available: " + all + ")");
  }
  return config_to_json(c);
}

/// Preset (or defaults) overlaid with an optional user document.
inline RunConfig load_config(const std::string& preset, const std::filesystem::path& config_path) {
  Json base = preset.empty() ? config_to_json(RunConfig{}) : preset_json(preset);
  if (!config_path.empty()) base.merge_patch(read_json_file(config_path));
  return config_from_json(base);
}

/// Initial phase for a validation scenario, mapped into the configured range.
inline DensityField validation_density(const RunConfig& c, const ValidationScenario& s) {
  auto rho = initial_phase(s.init, c.grid, c.seed);
  for (double& r : rho) r = c.validation.rho_lo + (c.validation.rho_hi - c.validation.rho_lo) * r;
  return rho;
}

}  // namespace homopt

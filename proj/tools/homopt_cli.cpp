#include "commands.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

int main(int argc, char** argv) {
  using namespace homopt;
  using namespace homopt::cli;

  CLI::App app{"FFT homogenisation and adjoint topology optimisation of periodic cells"};
  app.require_subcommand(1);
  Options opt;

  const std::map<std::string, std::pair<std::string, std::function<int(const Options&)>>> commands{
      {"solve", {"equilibrium for the configured load cases", cmd_solve}},
      {"homogenize", {"effective stiffness, shear modulus and Poisson's ratio", cmd_homogenize}},
      {"optimize", {"phase-field design run", cmd_optimize}},
      {"validate-adjoint", {"adjoint versus finite-difference sensitivity sweeps", cmd_validate_adjoint}},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opt.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--preset", opt.preset, "bundled configuration the --config document is laid over");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads (1 is bitwise reproducible)")
        ->check(CLI::PositiveNumber);
    if (name == "solve" || name == "homogenize") {
      sub->add_option("--density", opt.density_path, "density matrix, ny rows of nx values")
          ->check(CLI::ExistingFile)
          ->required();
    }
    if (name == "validate-adjoint") {
      sub->add_option("--fd-scheme", opt.fd_scheme, "finite-difference scheme")
          ->check(CLI::IsMember({"forward", "central"}));
    }
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) return commands.at(name).second(opt);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const OptimizationError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const NumericalError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kUsage;
}

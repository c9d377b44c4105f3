// dirac-forge: run verification suites and model scenarios, emit reports.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diracforge/geometry.hpp"
#include "diracforge/kernels.hpp"
#include "diracforge/runner.hpp"

namespace {

int threads_from_env() {
  const char* env = std::getenv("DIRAC_FORGE_THREADS");
  if (!env) return 1;
  try {
    return std::max(1, std::stoi(env));
  } catch (...) {
    return 1;
  }
}

df::Config resolve_scenario(const std::string& arg) {
  std::string name = arg;
  const std::string prefix = "preset:";
  if (name.rfind(prefix, 0) == 0) name = name.substr(prefix.size());
  for (const auto& p : df::preset_catalog())
    if (p.name == name) return df::preset_config(name);
  return df::load_config_file(arg);
}

int finish(const df::RunReport& rep, const std::string& out,
           const std::string& format) {
  for (const std::string& path :
       df::write_report_files(rep, out, format))
    std::cout << "wrote " << path << "\n";
  const std::size_t failed = rep.failed_count();
  std::cout << rep.scenario << ": " << (rep.records.size() - failed) << "/"
            << rep.records.size() << " checks passed\n";
  if (failed) {
    for (const auto& r : rep.records)
      if (!r.pass)
        std::cout << "  FAIL " << r.name << " value=" << df::format_double(r.value)
                  << " reference=" << df::format_double(r.reference)
                  << " tolerance=" << df::format_double(r.tolerance) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for Clifford modules and Dirac operators"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = ".";
  std::string format = "both";
  unsigned long long seed = 0;
  bool has_seed = false;
  int threads = threads_from_env();
  app.add_option("--out", out_dir, "output directory for reports");
  app.add_option("--format", format, "report format: csv|json|both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  auto* seed_opt = app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--threads", threads, "node-parallel worker threads");

  auto* verify = app.add_subcommand(
      "verify-algebra", "run the Clifford algebra and module suite");
  int max_dim = 4;
  std::string sig_opt;
  verify->add_option("--max-dim", max_dim, "largest total dimension");
  verify->add_option("--sig", sig_opt, "ignored shorthand p,q (suite runs all)");

  auto* run = app.add_subcommand("run", "run a scenario file or preset");
  std::string scenario_arg;
  run->add_option("scenario", scenario_arg, "path or preset name")->required();

  auto* conv = app.add_subcommand(
      "convergence", "grid-refinement study for a scenario");
  std::string conv_arg;
  std::vector<int> grids;
  conv->add_option("scenario", conv_arg, "path or preset name")->required();
  conv->add_option("--grids", grids, "comma-separated grid sizes")
      ->required()
      ->delimiter(',');

  auto* list = app.add_subcommand("list", "print the scenario catalog");

  CLI11_PARSE(app, argc, argv);
  has_seed = seed_opt->count() > 0;
  df::set_thread_count(threads);

  try {
    if (*list) {
      for (const auto& p : df::preset_catalog())
        std::cout << p.name << "\t" << p.equation_ref << "\t" << p.description
                  << "\n";
      return 0;
    }
    if (*verify) {
      df::RunReport rep = df::run_verify_algebra(max_dim, has_seed ? seed : 42);
      return finish(rep, out_dir, format);
    }
    if (*run) {
      df::Config cfg = resolve_scenario(scenario_arg);
      df::RunReport rep = df::run_scenario(cfg, seed, has_seed);
      return finish(rep, out_dir, format);
    }
    if (*conv) {
      df::Config cfg = resolve_scenario(conv_arg);
      df::RunReport rep = df::run_convergence(cfg, grids, seed, has_seed);
      return finish(rep, out_dir, format);
    }
  } catch (const df::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "driftlab/harness.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using driftlab::ConfigError;
using nlohmann::json;

enum Exit { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kRuntimeError = 3 };

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw ConfigError("--seeds", "empty range '" + item + "'");
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      } else {
        seeds.push_back(std::stoull(item));
      }
    } catch (const std::logic_error&) {
      throw ConfigError("--seeds", "expected a list like 1,2,5-8, got '" + text + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("--seeds", "no seeds given");
  return seeds;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", e.what());
  }
}

struct RunFlags {
  std::string config;
  std::string out;
  std::string seeds;
  std::string checkpoints;
  std::string grid;
  unsigned jobs = 0;
};

json apply_overrides(json doc, const RunFlags& flags) {
  if (!flags.out.empty()) doc["out"] = flags.out;
  if (flags.jobs > 0) doc["jobs"] = flags.jobs;
  if (!flags.seeds.empty()) doc["seeds"] = parse_seeds(flags.seeds);
  if (!flags.checkpoints.empty()) doc["checkpoints"] = flags.checkpoints;
  return doc;
}

int run_simulate(const RunFlags& flags) {
  const auto config = driftlab::parse_config(apply_overrides(read_json(flags.config), flags));
  const auto record = driftlab::simulate(config);
  std::ifstream summary(record.directory / "summary.txt");
  std::cout << summary.rdbuf();
  std::cout << "results in " << record.directory.string() << "\n";
  return kOk;
}

int run_sweep(const RunFlags& flags) {
  json doc = apply_overrides(read_json(flags.config), flags);
  json grid = doc.value("sweep", json::object());
  if (!flags.grid.empty()) grid = read_json(flags.grid);
  const std::string out = doc.value("out", std::string("out"));
  const unsigned jobs = doc.value("jobs", 1u);
  const auto result = driftlab::sweep(doc, grid, out, jobs);
  std::cout << "sweep table " << result.table.string() << " (" << result.runs.size() << " runs, "
            << result.failures.size() << " failed)\n";
  for (const auto& f : result.failures) std::cerr << "failed: " << f << "\n";
  return result.exit_code;
}

int run_rates(const RunFlags& flags) {
  if (flags.out.empty()) throw ConfigError("--out", "directory of a finished run is required");
  std::vector<long> checkpoints;
  if (!flags.checkpoints.empty()) checkpoints = driftlab::parse_checkpoints(flags.checkpoints);
  const json report = driftlab::refit_rates(flags.out, checkpoints);
  std::cout << report.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction under drift and mixing: simulations and oracle checks"};
  app.set_version_flag("--version", driftlab::software_version());
  app.require_subcommand(1);

  RunFlags flags;
  auto* simulate = app.add_subcommand("simulate", "Run one experiment from a JSON config");
  simulate->add_option("--config", flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", flags.out, "Output root directory");
  simulate->add_option("--seeds", flags.seeds, "Seeds, e.g. 1,2,5-8");
  simulate->add_option("--jobs", flags.jobs, "Worker threads");
  simulate->add_option("--checkpoints", flags.checkpoints, "lo:hi:per_octave or a list of T values");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("--config", flags.config, "Base config (JSON); its 'sweep' object is the grid")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--grid", flags.grid, "Grid file overriding the config's 'sweep' object")->check(CLI::ExistingFile);
  sweep->add_option("--out", flags.out, "Output root directory");
  sweep->add_option("--seeds", flags.seeds, "Seeds, e.g. 1,2,5-8");
  sweep->add_option("--jobs", flags.jobs, "Worker threads per run");
  sweep->add_option("--checkpoints", flags.checkpoints, "lo:hi:per_octave or a list of T values");

  driftlab::VerifyOptions verify_options;
  std::string report_path;
  auto* verify = app.add_subcommand("verify", "Run an exact or Monte Carlo oracle family");
  verify->add_option("--kind", verify_options.kind, "blocking, uniform_deviation, discrepancy or mixing_rate")
      ->required();
  verify->add_option("--trials", verify_options.trials, "Trials per sample size (uniform_deviation)");
  verify->add_option("--pairs", verify_options.pairs, "Random pairs (discrepancy)");
  verify->add_option("--seed", verify_options.seed, "Random seed");
  verify->add_option("--r", verify_options.r, "Polynomial mixing rate (mixing_rate)");
  verify->add_option("--report", report_path, "Also write the JSON report here");

  auto* rates = app.add_subcommand("rates", "Re-fit growth exponents from existing curve CSVs");
  rates->add_option("--out", flags.out, "Run directory containing curve-*.csv")->required();
  rates->add_option("--checkpoints", flags.checkpoints, "lo:hi:per_octave or a list of T values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return run_simulate(flags);
    if (*sweep) return run_sweep(flags);
    if (*rates) return run_rates(flags);
    if (*verify) {
      const auto outcome = driftlab::verify(verify_options);
      const std::string text = outcome.report.dump(2);
      std::cout << text << "\n";
      if (!report_path.empty()) std::ofstream(report_path) << text << "\n";
      return outcome.passed ? kOk : kVerifyFailed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

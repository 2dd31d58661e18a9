#pragma once

#include "driftlab/distributions.hpp"
#include "driftlab/evaluation.hpp"
#include "driftlab/learners.hpp"
#include "driftlab/processes.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftlab {

inline constexpr int kSchemaVersion = 1;

std::string software_version();

/// A configuration problem; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  /// Normalized document with every default filled in; the hash is taken over it.
  nlohmann::json document;

  ProcessKind process_kind = ProcessKind::Product;
  int states = 2;
  double flip = 0.3;
  std::optional<mat> transition;
  double eta = 0.0;
  double theta0 = 0.5;

  DriftKind drift_kind = DriftKind::PowerStep;
  double drift_alpha = 0.0;
  std::optional<double> drift_gamma;
  DriftOptions drift_options;
  std::uint64_t drift_seed = 0;

  std::string learner_kind = "subsampled";
  double learner_alpha = 0.0;
  double learner_r = 1.0;
  std::optional<double> learner_gamma;

  long horizon = 256;
  std::vector<long> checkpoints;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  unsigned jobs = 1;
  bool export_paths = false;
};

/// Parses and validates every cross-module precondition; throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stable 16-hex-digit identifier of the result-affecting part of a config.
std::string config_hash(const ExperimentConfig& config);
std::string fnv1a_hex(const std::string& bytes);

/// Default geometric grid: 4 per octave over the last 7 octaves below min(T, 2^15).
std::vector<long> default_checkpoints(long horizon);
/// "lo:hi:per_octave" (exponents of two) or a comma-separated list of T values.
std::vector<long> parse_checkpoints(const std::string& text);

DriftSchedule build_schedule(const ExperimentConfig& config);
ProcessModel build_process(const ExperimentConfig& config, const DriftSchedule& schedule);
Learner build_learner(const ExperimentConfig& config, const DriftSchedule& schedule);

struct RunRecord {
  std::string config_hash;
  std::filesystem::path directory;
  std::vector<std::filesystem::path> curve_files;
  std::optional<RateFit> fit;
  std::string fit_status;
  double cum_excess = 0.0;
  double avg_excess = 0.0;
  /// Mean per-step excess after the learner's warm-up (t > window for the constant learner).
  double tail_avg_excess = 0.0;
  double wall_seconds = 0.0;
  std::string version;
};

RunRecord simulate(const ExperimentConfig& config);

struct SweepResult {
  std::filesystem::path table;
  std::vector<RunRecord> runs;
  std::vector<std::string> failures;
  /// 0 if every cell ran; otherwise the exit code of the first failure kind (2 or 3).
  int exit_code = 0;
};

/// Cartesian product over {"dotted.key": [values...]}; the table is written once, after a sort.
SweepResult sweep(const nlohmann::json& base, const nlohmann::json& grid, const std::string& out_dir,
                  unsigned jobs);

struct VerifyOptions {
  std::string kind;
  int trials = 2000;
  int pairs = 10000;
  std::uint64_t seed = 1;
  double r = 2.0;
};

struct VerifyOutcome {
  nlohmann::json report;
  bool passed = false;
};

/// Runs one oracle family over its default grid. Throws ConfigError on bad options.
VerifyOutcome verify(const VerifyOptions& options);

/// Re-fits exponents from every curve-*.csv in `directory`.
nlohmann::json refit_rates(const std::filesystem::path& directory, const std::vector<long>& checkpoints);

}  // namespace driftlab

#include "driftlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace driftlab {

namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : object.items()) {
    if (!names.count(key)) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const json& object_at(const json& parent, const char* key, const std::string& where) {
  static const json empty = json::object();
  if (!parent.contains(key)) return empty;
  const json& j = parent[key];
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  return j;
}

double number(const json& parent, const char* key, const std::string& where, double fallback) {
  if (!parent.contains(key) || parent[key].is_null()) return fallback;
  if (!parent[key].is_number()) throw ConfigError(where, "expected a number");
  return parent[key].get<double>();
}

std::optional<double> optional_number(const json& parent, const char* key, const std::string& where) {
  if (!parent.contains(key) || parent[key].is_null()) return std::nullopt;
  if (!parent[key].is_number()) throw ConfigError(where, "expected a number or null");
  return parent[key].get<double>();
}

long integer(const json& parent, const char* key, const std::string& where, long fallback) {
  if (!parent.contains(key)) return fallback;
  if (!parent[key].is_number_integer()) throw ConfigError(where, "expected an integer");
  return parent[key].get<long>();
}

std::string text(const json& parent, const char* key, const std::string& where, const std::string& fallback) {
  if (!parent.contains(key)) return fallback;
  if (!parent[key].is_string()) throw ConfigError(where, "expected a string");
  return parent[key].get<std::string>();
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string software_version() { return DRIFTLAB_VERSION; }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<long> default_checkpoints(long horizon) {
  if (horizon < 2) return {horizon};
  const int hi = std::min(15, static_cast<int>(std::floor(std::log2(static_cast<double>(horizon)))));
  const int lo = std::max(1, hi - 7);
  return geometric_checkpoints(lo, hi, 4);
}

std::vector<long> parse_checkpoints(const std::string& spec) {
  std::vector<long> grid;
  try {
    if (spec.find(':') != std::string::npos) {
      std::stringstream ss(spec);
      std::string a, b, c;
      std::getline(ss, a, ':');
      std::getline(ss, b, ':');
      std::getline(ss, c, ':');
      const int per_octave = c.empty() ? 1 : std::stoi(c);
      grid = geometric_checkpoints(std::stod(a), std::stod(b), per_octave);
    } else {
      std::stringstream ss(spec);
      std::string cell;
      while (std::getline(ss, cell, ',')) grid.push_back(std::stol(cell));
    }
  } catch (const std::exception& e) {
    throw ConfigError("checkpoints", std::string("cannot parse '") + spec + "': " + e.what());
  }
  if (grid.empty()) throw ConfigError("checkpoints", "empty checkpoint grid");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] < 1 || (i > 0 && grid[i] <= grid[i - 1]))
      throw ConfigError("checkpoints", "values must be positive and strictly increasing");
  return grid;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  reject_unknown(doc, "", {"process", "class", "learner", "horizon", "checkpoints", "seeds", "out", "jobs",
                           "export_paths", "sweep"});
  ExperimentConfig cfg;

  const json& process = object_at(doc, "process", "process");
  reject_unknown(process, "process", {"kind", "states", "flip", "transition", "eta", "theta0", "drift"});
  const std::string pkind = text(process, "kind", "process.kind", "product");
  if (pkind == "product") cfg.process_kind = ProcessKind::Product;
  else if (pkind == "markov_modulated" || pkind == "markov") cfg.process_kind = ProcessKind::MarkovModulated;
  else throw ConfigError("process.kind", "expected 'product' or 'markov_modulated'");

  cfg.eta = number(process, "eta", "process.eta", 0.1);
  if (!(cfg.eta >= 0.0 && cfg.eta < 0.5)) throw ConfigError("process.eta", "must lie in [0, 1/2)");
  cfg.theta0 = number(process, "theta0", "process.theta0", 0.5);
  if (!(cfg.theta0 >= 0.0 && cfg.theta0 <= 1.0)) throw ConfigError("process.theta0", "must lie in [0,1]");

  json transition_json = nullptr;
  if (cfg.process_kind == ProcessKind::MarkovModulated) {
    if (process.contains("transition") && !process["transition"].is_null()) {
      const json& rows = process["transition"];
      if (!rows.is_array() || rows.empty()) throw ConfigError("process.transition", "expected a square matrix");
      mat P(static_cast<long>(rows.size()), static_cast<long>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != rows.size())
          throw ConfigError("process.transition", "expected a square matrix");
        for (std::size_t c = 0; c < rows.size(); ++c) {
          if (!rows[r][c].is_number()) throw ConfigError("process.transition", "entries must be numbers");
          P(static_cast<long>(r), static_cast<long>(c)) = rows[r][c].get<double>();
        }
      }
      cfg.transition = P;
      cfg.states = static_cast<int>(P.rows());
      transition_json = rows;
    } else {
      cfg.states = static_cast<int>(integer(process, "states", "process.states", 4));
      cfg.flip = number(process, "flip", "process.flip", 0.3);
      if (cfg.states < 2 || cfg.states > kMaxStates) throw ConfigError("process.states", "must lie in [2, 16]");
      if (!(cfg.flip > 0.0 && cfg.flip < 1.0)) throw ConfigError("process.flip", "must lie in (0,1)");
    }
  }

  const json& drift = object_at(process, "drift", "process.drift");
  reject_unknown(drift, "process.drift", {"kind", "alpha", "gamma", "c0", "leg", "seed"});
  try {
    cfg.drift_kind = drift_kind_from_string(text(drift, "kind", "process.drift.kind", "power_step"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("process.drift.kind", e.what());
  }
  cfg.drift_alpha = number(drift, "alpha", "process.drift.alpha", 0.0);
  if (!(cfg.drift_alpha >= 0.0 && cfg.drift_alpha < 1.0)) throw ConfigError("process.drift.alpha", "alpha must lie in [0,1)");
  cfg.drift_gamma = optional_number(drift, "gamma", "process.drift.gamma");
  if (cfg.drift_kind == DriftKind::Constant && !cfg.drift_gamma)
    throw ConfigError("process.drift.gamma", "required for the constant drift kind");
  if (cfg.drift_gamma && !(*cfg.drift_gamma > 0.0 && *cfg.drift_gamma < 1.0))
    throw ConfigError("process.drift.gamma", "gamma must lie in (0,1)");
  cfg.drift_options.c0 = number(drift, "c0", "process.drift.c0", 1.0);
  if (!(cfg.drift_options.c0 > 0.0)) throw ConfigError("process.drift.c0", "must be positive");
  cfg.drift_options.leg = number(drift, "leg", "process.drift.leg", 0.25);
  if (!(cfg.drift_options.leg > 0.0)) throw ConfigError("process.drift.leg", "must be positive");
  const long drift_seed = integer(drift, "seed", "process.drift.seed", 0);
  if (drift_seed < 0) throw ConfigError("process.drift.seed", "must be non-negative");
  cfg.drift_seed = static_cast<std::uint64_t>(drift_seed);

  const json& cls = object_at(doc, "class", "class");
  reject_unknown(cls, "class", {"kind"});
  if (text(cls, "kind", "class.kind", "threshold") != "threshold")
    throw ConfigError("class.kind", "simulations pair the threshold class with threshold concepts; use 'threshold'");

  const json& learner = object_at(doc, "learner", "learner");
  reject_unknown(learner, "learner", {"kind", "alpha", "r", "gamma"});
  cfg.learner_kind = text(learner, "kind", "learner.kind", "subsampled");
  static const std::set<std::string> kinds{"subsampled", "adaptive", "constant", "full_history", "last_point"};
  if (!kinds.count(cfg.learner_kind))
    throw ConfigError("learner.kind", "expected one of subsampled, adaptive, constant, full_history, last_point");
  cfg.learner_alpha = number(learner, "alpha", "learner.alpha", cfg.drift_alpha);
  if (!(cfg.learner_alpha >= 0.0 && cfg.learner_alpha < 1.0)) throw ConfigError("learner.alpha", "alpha must lie in [0,1)");
  cfg.learner_r = number(learner, "r", "learner.r", 1.0);
  if (!(cfg.learner_r > 0.0)) throw ConfigError("learner.r", "r must be positive");
  cfg.learner_gamma = optional_number(learner, "gamma", "learner.gamma");
  if (!cfg.learner_gamma) cfg.learner_gamma = cfg.drift_gamma;
  if (cfg.learner_kind == "constant") {
    if (!cfg.learner_gamma) throw ConfigError("learner.gamma", "required for the constant learner");
    if (!(*cfg.learner_gamma > 0.0 && *cfg.learner_gamma < 1.0)) throw ConfigError("learner.gamma", "gamma must lie in (0,1)");
  }

  cfg.horizon = integer(doc, "horizon", "horizon", 256);
  if (cfg.horizon < 1) throw ConfigError("horizon", "must be >= 1");
  if (cfg.horizon > (1L << 24)) throw ConfigError("horizon", "must be <= 2^24");

  if (!doc.contains("checkpoints") || doc["checkpoints"].is_null()) {
    cfg.checkpoints = default_checkpoints(cfg.horizon);
  } else if (doc["checkpoints"].is_string()) {
    cfg.checkpoints = parse_checkpoints(doc["checkpoints"].get<std::string>());
  } else if (doc["checkpoints"].is_array()) {
    std::string joined;
    for (const auto& v : doc["checkpoints"]) {
      if (!v.is_number_integer()) throw ConfigError("checkpoints", "expected integers");
      joined += (joined.empty() ? "" : ",") + std::to_string(v.get<long>());
    }
    cfg.checkpoints = parse_checkpoints(joined);
  } else {
    throw ConfigError("checkpoints", "expected a list, a 'lo:hi:per_octave' string, or null");
  }
  if (cfg.checkpoints.back() > cfg.horizon) throw ConfigError("checkpoints", "checkpoints exceed the horizon");

  if (!doc.contains("seeds")) {
    cfg.seeds = {1, 2, 3, 4};
  } else {
    if (!doc["seeds"].is_array() || doc["seeds"].empty()) throw ConfigError("seeds", "expected a non-empty list");
    for (const auto& s : doc["seeds"]) {
      if (!s.is_number_integer() || s.get<long long>() < 0) throw ConfigError("seeds", "seeds must be non-negative integers");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
    std::set<std::uint64_t> unique(cfg.seeds.begin(), cfg.seeds.end());
    if (unique.size() != cfg.seeds.size()) throw ConfigError("seeds", "seeds must be distinct");
  }
  cfg.out_dir = text(doc, "out", "out", "out");
  const long jobs = integer(doc, "jobs", "jobs", 1);
  if (jobs < 1) throw ConfigError("jobs", "must be >= 1");
  cfg.jobs = static_cast<unsigned>(jobs);
  if (doc.contains("export_paths")) {
    if (!doc["export_paths"].is_boolean()) throw ConfigError("export_paths", "expected a boolean");
    cfg.export_paths = doc["export_paths"].get<bool>();
  }

  // Cross-module feasibility, checked before any run starts.
  const DriftSchedule schedule = build_schedule(cfg);
  for (std::size_t t = 2; t <= schedule.horizon(); ++t)
    if (schedule.delta(t) / (1.0 - 2.0 * cfg.eta) > 1.0)
      throw ConfigError("process.eta", "drift step Delta_t / (1 - 2 eta) exceeds 1; lower eta or c0");
  if (cfg.process_kind == ProcessKind::MarkovModulated) {
    const mat P = cfg.transition ? *cfg.transition : flip_chain(cfg.states, cfg.flip);
    try {
      ProcessModel::markov_modulated(P, {ThresholdConcept{cfg.theta0, cfg.eta}});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cfg.transition ? "process.transition" : "process.flip", e.what());
    }
  }

  json normalized;
  normalized["process"] = {
      {"kind", cfg.process_kind == ProcessKind::Product ? "product" : "markov_modulated"},
      {"eta", cfg.eta},
      {"theta0", cfg.theta0},
      {"drift",
       {{"kind", to_string(cfg.drift_kind)},
        {"alpha", cfg.drift_alpha},
        {"gamma", optional_to_json(cfg.drift_gamma)},
        {"c0", cfg.drift_options.c0},
        {"leg", cfg.drift_options.leg},
        {"seed", cfg.drift_seed}}}};
  if (cfg.process_kind == ProcessKind::MarkovModulated) {
    normalized["process"]["states"] = cfg.states;
    normalized["process"]["flip"] = cfg.transition ? json(nullptr) : json(cfg.flip);
    normalized["process"]["transition"] = transition_json;
  }
  normalized["class"] = {{"kind", "threshold"}};
  normalized["learner"] = {{"kind", cfg.learner_kind},
                           {"alpha", cfg.learner_alpha},
                           {"r", cfg.learner_r},
                           {"gamma", optional_to_json(cfg.learner_gamma)}};
  normalized["horizon"] = cfg.horizon;
  normalized["checkpoints"] = cfg.checkpoints;
  normalized["seeds"] = cfg.seeds;
  normalized["out"] = cfg.out_dir;
  normalized["jobs"] = cfg.jobs;
  normalized["export_paths"] = cfg.export_paths;
  cfg.document = std::move(normalized);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::string config_hash(const ExperimentConfig& config) {
  json keyed = config.document;
  keyed.erase("out");
  keyed.erase("jobs");
  keyed.erase("export_paths");
  keyed["schema"] = kSchemaVersion;
  return fnv1a_hex(keyed.dump());
}

DriftSchedule build_schedule(const ExperimentConfig& config) {
  return make_drift_schedule(config.drift_kind, config.drift_alpha, config.drift_gamma,
                             static_cast<std::size_t>(config.horizon), config.drift_seed, config.drift_options);
}

ProcessModel build_process(const ExperimentConfig& config, const DriftSchedule& schedule) {
  std::vector<Marginal> path = concept_path(schedule, config.eta, config.theta0);
  if (config.process_kind == ProcessKind::Product) return ProcessModel::product(std::move(path));
  const mat P = config.transition ? *config.transition : flip_chain(config.states, config.flip);
  return ProcessModel::markov_modulated(P, std::move(path));
}

Learner build_learner(const ExperimentConfig& config, const DriftSchedule& schedule) {
  const FunctionClass cls = FunctionClass::threshold();
  const std::string& kind = config.learner_kind;
  if (kind == "subsampled") return SubsampledErmLearner{config.learner_alpha, config.learner_r, cls};
  if (kind == "adaptive") return AdaptiveWindowLearner{cls, std::make_shared<const DriftSchedule>(schedule)};
  if (kind == "constant") return ConstantWindowLearner{cls, *config.learner_gamma};
  if (kind == "full_history") return BaselineLearner{BaselineKind::FullHistoryErm, cls};
  return BaselineLearner{BaselineKind::LastPoint, cls};
}

}  // namespace driftlab

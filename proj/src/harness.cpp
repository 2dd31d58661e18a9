#include "driftlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace driftlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> preamble(const std::string& hash) {
  return {"driftlab schema=" + std::to_string(kSchemaVersion) + " config=" + hash + " version=" + software_version()};
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

long warmup_steps(const Learner& learner) {
  if (const auto* c = std::get_if<ConstantWindowLearner>(&learner))
    return constant_window_size(c->cls.dimension(), c->gamma);
  return 0;
}

json fit_to_json(const RateFit& fit) {
  return {{"exponent", fit.exponent},
          {"intercept", fit.intercept},
          {"t_min", fit.t_min},
          {"t_max", fit.t_max},
          {"points", fit.points},
          {"residual_norm", fit.residual_norm},
          {"theoretical_exponent", fit.theoretical ? json(*fit.theoretical) : json(nullptr)}};
}

}  // namespace

RunRecord simulate(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.version = software_version();
  record.config_hash = config_hash(config);
  record.directory = fs::path(config.out_dir) / record.config_hash;
  fs::create_directories(record.directory);

  const DriftSchedule schedule = build_schedule(config);
  const ProcessModel model = build_process(config, schedule);
  const Learner learner = build_learner(config, schedule);
  const auto pre = preamble(record.config_hash);

  {
    const json wrapped = {{"schema", kSchemaVersion}, {"config_hash", record.config_hash}, {"config", config.document}};
    write_text(record.directory / "config.json", wrapped.dump(2) + "\n");
  }
  {
    json j = to_json(schedule, &model.marginals());
    j["config_hash"] = record.config_hash;
    j["schema"] = kSchemaVersion;
    write_text(record.directory / "schedule.json", j.dump() + "\n");
    json p = to_json(model);
    p["config_hash"] = record.config_hash;
    p["schema"] = kSchemaVersion;
    write_text(record.directory / "process.json", p.dump() + "\n");
  }

  // Coarse progress: cumulative excess at every power-of-two step, per replicate.
  std::vector<double> benchmark(static_cast<std::size_t>(config.horizon));
  for (long t = 1; t <= config.horizon; ++t)
    benchmark[static_cast<std::size_t>(t - 1)] = inf_risk(learner_class(learner), model.marginal(static_cast<std::size_t>(t)));
  ExperimentOptions options;
  options.jobs = config.jobs;
  options.on_checkpoint = [&](long rep, long t, std::span<const double> risks) {
    double cum = 0.0;
    for (std::size_t i = 0; i < risks.size(); ++i) cum += risks[i] - benchmark[i];
    const fs::path partial =
        record.directory / ("curve-" + std::to_string(config.seeds[static_cast<std::size_t>(rep)]) + ".partial.csv");
    std::ofstream out(partial, t == 1 ? std::ios::trunc : std::ios::app);
    if (t == 1) out << "# " << pre.front() << "\nt,cum_excess\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%ld,%.17g\n", t, cum);
    out << buf;
  };

  const RegretCurve curve = run_experiment(model, learner, config.horizon, config.seeds, options);

  for (long rep = 0; rep < curve.replicates(); ++rep) {
    const std::string seed = std::to_string(config.seeds[static_cast<std::size_t>(rep)]);
    const fs::path file = record.directory / ("curve-" + seed + ".csv");
    std::ostringstream body;
    auto lines = pre;
    lines.push_back("seed=" + seed);
    write_curve_csv(body, curve.replicate(rep), lines);
    write_text(file, body.str());
    fs::remove(record.directory / ("curve-" + seed + ".partial.csv"));
    record.curve_files.push_back(file);
    if (config.export_paths) {
      std::ostringstream path_body;
      path_body << "# " << pre.front() << "\n# seed=" << seed << "\n";
      write_path_csv(path_body, sample_path(model, static_cast<std::size_t>(config.horizon), config.seeds[static_cast<std::size_t>(rep)]));
      write_text(record.directory / ("path-" + seed + ".csv"), path_body.str());
    }
  }
  {
    std::ostringstream body;
    auto lines = pre;
    lines.push_back("replicates=" + std::to_string(curve.replicates()));
    write_curve_csv(body, curve, lines);
    write_text(record.directory / "curve-mean.csv", body.str());
  }
  {
    std::ostringstream body;
    body << "# " << pre.front() << "\nt,k,m\n";
    for (std::size_t i = 0; i < curve.windows.size(); ++i)
      body << i + 1 << ',' << curve.windows[i].k << ',' << curve.windows[i].m << '\n';
    write_text(record.directory / "windows.csv", body.str());
  }

  const vec cum = curve.mean_cumulative_excess();
  const vec per_step = curve.excess().colwise().mean().transpose();
  record.cum_excess = cum(config.horizon - 1);
  record.avg_excess = record.cum_excess / static_cast<double>(config.horizon);
  const long warmup = std::min(warmup_steps(learner), config.horizon - 1);
  record.tail_avg_excess = per_step.tail(config.horizon - warmup).mean();

  std::optional<double> theoretical;
  if (config.learner_kind == "subsampled") theoretical = theoretical_exponent(config.learner_alpha, config.learner_r);
  json fit_json = {{"schema", kSchemaVersion}, {"config_hash", record.config_hash}, {"version", record.version}};
  const std::vector<long> fit_grid = tail_half(config.checkpoints);
  try {
    record.fit = fit_growth_exponent(curve, fit_grid, theoretical);
    record.fit_status = "ok";
    fit_json["fit"] = fit_to_json(*record.fit);
  } catch (const DegenerateFit& e) {
    record.fit_status = std::string("skipped: ") + e.what();
  } catch (const std::invalid_argument& e) {
    record.fit_status = std::string("skipped: ") + e.what();
  }
  fit_json["status"] = record.fit_status;
  fit_json["cum_excess"] = record.cum_excess;
  fit_json["avg_excess"] = record.avg_excess;
  fit_json["tail_avg_excess"] = record.tail_avg_excess;
  write_text(record.directory / "fit.json", fit_json.dump(2) + "\n");

  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::ostringstream summary;
  summary << "driftlab " << record.version << "  schema " << kSchemaVersion << "  config " << record.config_hash << "\n"
          << "learner      " << learner_name(learner) << "\n"
          << "process      " << (model.kind() == ProcessKind::Product ? "product" : "markov_modulated") << "\n"
          << "horizon      " << config.horizon << "\n"
          << "replicates   " << curve.replicates() << "\n"
          << "cum excess   " << fmt("%.6g", record.cum_excess) << "\n"
          << "avg excess   " << fmt("%.6g", record.avg_excess) << "\n"
          << "tail excess  " << fmt("%.6g", record.tail_avg_excess) << "\n";
  if (record.fit) {
    summary << "exponent     " << fmt("%.4f", record.fit->exponent) << "  over T in [" << record.fit->t_min << ", "
            << record.fit->t_max << "], " << record.fit->points << " points\n";
    if (record.fit->theoretical) summary << "theoretical  " << fmt("%.4f", *record.fit->theoretical) << "\n";
  } else {
    summary << "exponent     " << record.fit_status << "\n";
  }
  summary << "wall clock   " << fmt("%.2f", record.wall_seconds) << " s\n";
  write_text(record.directory / "summary.txt", summary.str());
  return record;
}

namespace {

json::json_pointer pointer_for(const std::string& dotted) {
  std::string p;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) p += "/" + part;
  return json::json_pointer(p);
}

std::string cell_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

SweepResult sweep(const json& base, const json& grid, const std::string& out_dir, unsigned jobs) {
  if (!grid.is_object() || grid.empty()) throw ConfigError("sweep", "empty parameter grid");
  json base_doc = base;
  base_doc.erase("sweep");
  base_doc["out"] = out_dir;
  base_doc["jobs"] = jobs;
  const ExperimentConfig base_cfg = parse_config(base_doc);

  std::vector<std::string> keys;
  std::vector<std::vector<json>> values;
  for (const auto& [key, list] : grid.items()) {
    if (!list.is_array() || list.empty()) throw ConfigError("sweep." + key, "expected a non-empty list of values");
    const auto ptr = pointer_for(key);
    json probe = base_cfg.document;
    if (!probe.contains(ptr)) throw ConfigError("sweep." + key, "not a recognized config path");
    keys.push_back(key);
    values.emplace_back(list.begin(), list.end());
  }

  SweepResult result;
  const std::string sweep_hash = fnv1a_hex(base_cfg.document.dump() + grid.dump());
  struct Row {
    std::vector<std::string> cells;
    std::string line;
  };
  std::vector<Row> rows;
  std::vector<std::size_t> index(keys.size(), 0);
  bool done = false;
  while (!done) {
    json doc = base_cfg.document;
    std::vector<std::string> cells;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      doc[pointer_for(keys[i])] = values[i][index[i]];
      cells.push_back(cell_text(values[i][index[i]]));
    }
    // Learner defaults follow a swept drift value unless the base config pinned them.
    for (const char* key : {"alpha", "gamma"}) {
      const std::string drift_key = std::string("process.drift.") + key;
      const std::string learner_key = std::string("learner.") + key;
      if (grid.contains(drift_key) && !grid.contains(learner_key) && !base.contains(pointer_for(learner_key)))
        doc["learner"][key] = doc["process"]["drift"][key];
    }
    if (grid.contains("horizon") && !grid.contains("checkpoints") && !base.contains("checkpoints"))
      doc["checkpoints"] = nullptr;
    std::string label;
    for (std::size_t i = 0; i < keys.size(); ++i) label += (i ? ", " : "") + keys[i] + "=" + cells[i];

    Row row{cells, {}};
    try {
      const ExperimentConfig cfg = parse_config(doc);
      RunRecord run = simulate(cfg);
      std::ostringstream line;
      for (const auto& c : cells) line << c << ',';
      line << run.config_hash << ',' << cfg.horizon << ',' << fmt("%.17g", run.cum_excess) << ','
           << fmt("%.17g", run.avg_excess) << ',' << fmt("%.17g", run.tail_avg_excess) << ','
           << (run.fit ? fmt("%.17g", run.fit->exponent) : std::string()) << ','
           << (run.fit && run.fit->theoretical ? fmt("%.17g", *run.fit->theoretical) : std::string()) << ",ok";
      row.line = line.str();
      result.runs.push_back(std::move(run));
    } catch (const ConfigError& e) {
      result.failures.push_back(label + ": " + e.what());
      if (result.exit_code == 0) result.exit_code = 2;
      std::ostringstream line;
      for (const auto& c : cells) line << c << ',';
      line << ",,,,,,,config_error";
      row.line = line.str();
    } catch (const std::exception& e) {
      result.failures.push_back(label + ": " + e.what());
      if (result.exit_code == 0) result.exit_code = 3;
      std::ostringstream line;
      for (const auto& c : cells) line << c << ',';
      line << ",,,,,,,runtime_error";
      row.line = line.str();
    }
    rows.push_back(std::move(row));

    std::size_t pos = 0;
    while (pos < keys.size()) {
      if (++index[pos] < values[pos].size()) break;
      index[pos] = 0;
      ++pos;
    }
    done = pos == keys.size();
  }

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.line < b.line; });
  fs::create_directories(out_dir);
  std::ostringstream table;
  table << "# driftlab schema=" << kSchemaVersion << " sweep=" << sweep_hash << " version=" << software_version() << "\n";
  for (const auto& k : keys) table << k << ',';
  table << "config_hash,horizon,cum_excess,avg_excess,tail_avg_excess,fitted_exponent,theoretical_exponent,status\n";
  for (const auto& row : rows) table << row.line << '\n';
  result.table = fs::path(out_dir) / ("sweep-" + sweep_hash + ".csv");
  write_text(result.table, table.str());
  if (!result.failures.empty()) {
    json manifest = {{"schema", kSchemaVersion}, {"sweep", sweep_hash}, {"failures", result.failures}};
    write_text(fs::path(out_dir) / ("sweep-" + sweep_hash + "-failures.json"), manifest.dump(2) + "\n");
  }
  return result;
}

json refit_rates(const fs::path& directory, const std::vector<long>& checkpoints) {
  if (!fs::is_directory(directory)) throw ConfigError("--out", "not a directory: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("curve-", 0) == 0 && name.size() > 4 && name.substr(name.size() - 4) == ".csv" &&
        name.find(".partial") == std::string::npos)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("--out", "no curve-*.csv files in " + directory.string());

  std::optional<double> theoretical;
  const fs::path cfg_path = directory / "config.json";
  if (fs::exists(cfg_path)) {
    std::ifstream in(cfg_path);
    const json doc = json::parse(in).at("config");
    if (doc.at("learner").at("kind") == "subsampled")
      theoretical = theoretical_exponent(doc["learner"]["alpha"].get<double>(), doc["learner"]["r"].get<double>());
  }

  json fits = json::object();
  for (const auto& file : files) {
    std::ifstream in(file);
    const CurveTable table = read_curve_csv(in);
    std::vector<long> grid = checkpoints.empty() ? tail_half(default_checkpoints(table.t.empty() ? 1 : table.t.back()))
                                                 : checkpoints;
    std::vector<double> values;
    json entry;
    try {
      for (long t : grid) {
        if (t < 1 || static_cast<std::size_t>(t) > table.t.size() || table.t[static_cast<std::size_t>(t - 1)] != t)
          throw std::invalid_argument("checkpoint " + std::to_string(t) + " not present in curve");
        values.push_back(table.cum_excess[static_cast<std::size_t>(t - 1)]);
      }
      entry = fit_to_json(fit_growth_exponent(grid, values, theoretical));
      entry["status"] = "ok";
    } catch (const std::exception& e) {
      entry = {{"status", std::string("skipped: ") + e.what()}};
    }
    fits[file.filename().string()] = entry;
  }
  return {{"schema", kSchemaVersion}, {"directory", directory.string()}, {"fits", fits}};
}

}  // namespace driftlab

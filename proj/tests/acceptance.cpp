// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "driftlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace driftlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= n; ++s) seeds.push_back(s);
  return seeds;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("driftlab-acceptance-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Slope and intercept of y on x by least squares.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  mat design(static_cast<long>(x.size()), 2);
  vec target(static_cast<long>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    design(static_cast<long>(i), 0) = 1.0;
    design(static_cast<long>(i), 1) = x[i];
    target(static_cast<long>(i)) = y[i];
  }
  const vec coef = design.colPivHouseholderQr().solve(target);
  return {coef(1), coef(0)};
}

const std::vector<long> kRateGrid = geometric_checkpoints(10, 15, 4);
constexpr long kRateHorizon = 1L << 15;

json rate_config(const std::string& process, const std::string& learner, const fs::path& out) {
  json doc = {{"process", {{"kind", process}, {"eta", 0.1}, {"theta0", 0.5},
                           {"drift", {{"kind", "power_step"}, {"alpha", 0.25}}}}},
              {"learner", {{"kind", learner}}},
              {"horizon", kRateHorizon},
              {"checkpoints", kRateGrid},
              {"seeds", seed_range(32)},
              {"out", out.string()}};
  if (process == "markov_modulated") {
    doc["process"]["states"] = 4;
    doc["process"]["flip"] = 0.3;
  }
  if (learner == "subsampled") doc["learner"].update({{"alpha", 0.25}, {"r", 2}});
  return doc;
}

double fitted_exponent(const json& doc) {
  const ExperimentConfig cfg = parse_config(doc);
  const DriftSchedule schedule = build_schedule(cfg);
  const ProcessModel model = build_process(cfg, schedule);
  const RegretCurve curve = run_experiment(model, build_learner(cfg, schedule), cfg.horizon, cfg.seeds);
  return fit_growth_exponent(curve, kRateGrid).exponent;
}

Outcome blocking() {
  double worst = 1e300;
  int cases = 0;
  for (int s = 2; s <= 4; ++s)
    for (double p : {0.1, 0.3, 0.45}) {
      const auto model = ProcessModel::markov_modulated(
          flip_chain(s, p), std::vector<Marginal>(64, make_threshold_concept(0.5, 0.1)));
      for (int n = 2; n <= 4; ++n)
        for (int k = 1; k <= 8; ++k)
          for (long t = 1; t <= 5; ++t) {
            worst = std::min(worst, verify_blocking(model, t, n, k).slack);
            ++cases;
          }
    }
  return {worst >= -1e-12, fmt("%d configurations, min slack %.3g (need >= -1e-12)", cases, worst)};
}

Outcome uniform_deviation() {
  const FunctionClass cls = FunctionClass::threshold();
  const std::vector<long> ms = geometric_checkpoints(4, 14, 1);
  const int trials = 2000;
  const std::vector<Marginal> identical{make_threshold_concept(0.5, 0.1)};
  const auto drift = make_drift_schedule(DriftKind::TriangleWave, 0.5, std::nullopt, static_cast<std::size_t>(ms.back()), 1);
  const std::vector<Marginal> drifting = concept_path(drift, 0.1, 0.5);
  bool pass = true;
  std::string detail;
  for (const auto& [name, laws] : {std::pair{"identical", &identical}, std::pair{"drifting", &drifting}}) {
    const auto r = verify_uniform_deviation(cls, *laws, ms, trials, 1);
    const std::size_t half = r.ratios.size() / 2;
    const double lower = *std::max_element(r.ratios.begin(), r.ratios.begin() + static_cast<long>(half));
    const double upper = *std::max_element(r.ratios.begin() + static_cast<long>(half), r.ratios.end());
    const bool ok = std::abs(r.exponent + 0.5) <= 0.08 && upper <= 1.25 * lower;
    pass = pass && ok;
    detail += fmt("%s%s: exponent %.4f, ratio max %.3f (lower half %.3f)", detail.empty() ? "" : "; ", name,
                  r.exponent, upper, lower);
  }
  return {pass, detail + " (need -0.50 +- 0.08, bounded ratio)"};
}

Outcome mixing_sublinearity() {
  const double theory = theoretical_exponent(0.25, 2.0);
  const double e = fitted_exponent(rate_config("markov_modulated", "subsampled", scratch("c3")));
  return {e <= theory + 0.10 && e <= 0.97,
          fmt("fitted exponent %.4f (need <= %.4f and <= 0.97)", e, theory + 0.10)};
}

Outcome adaptive_product() {
  const double adaptive = fitted_exponent(rate_config("product", "adaptive", scratch("c4a")));
  const double subsampled = fitted_exponent(rate_config("product", "subsampled", scratch("c4b")));
  return {adaptive <= subsampled + 0.02 && adaptive < 0.95,
          fmt("adaptive %.4f vs subsampled %.4f (need <= %.4f and < 0.95)", adaptive, subsampled, subsampled + 0.02)};
}

Outcome gamma_scaling() {
  std::vector<double> log_gamma, log_excess;
  std::string detail;
  for (double e : {-4.0, -3.5, -3.0, -2.5, -2.0}) {
    const double gamma = std::pow(10.0, e);
    const long horizon = std::max(1L << 14, static_cast<long>(std::ceil(10.0 / gamma)));
    json doc = {{"process", {{"kind", "product"}, {"drift", {{"kind", "constant"}, {"gamma", gamma}}}}},
                {"learner", {{"kind", "constant"}}},
                {"horizon", horizon},
                {"seeds", seed_range(16)}};
    const ExperimentConfig cfg = parse_config(doc);
    const DriftSchedule schedule = build_schedule(cfg);
    const RegretCurve curve =
        run_experiment(build_process(cfg, schedule), build_learner(cfg, schedule), cfg.horizon, cfg.seeds);
    const long mbar = constant_window_size(1, gamma);
    const vec per_step = curve.excess().colwise().mean().transpose();
    const double tail = per_step.tail(horizon - mbar).mean();
    log_gamma.push_back(std::log(gamma));
    log_excess.push_back(std::log(tail));
    detail += fmt("%s%.4g", detail.empty() ? "" : " ", tail);
  }
  const double slope = line_fit(log_gamma, log_excess).first;
  return {std::abs(slope - 0.33) <= 0.12, fmt("slope %.4f (need 0.33 +- 0.12); tail excess %s", slope, detail.c_str())};
}

Outcome erm_equivalence() {
  Rng rng = make_rng(6, 0);
  const FunctionClass threshold = FunctionClass::threshold();
  long threshold_mismatch = 0, table_mismatch = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n = 1 + static_cast<int>(uniform01(rng) * 12);
    std::vector<Observation> pts;
    for (int j = 0; j < n; ++j)
      pts.push_back({std::floor(uniform01(rng) * 2 * n) / (2.0 * n), bernoulli(rng, 0.5) ? 1 : 0});
    double grid = 1e300;
    for (int j = 0; j <= 4 * n; ++j)
      grid = std::min(grid, empirical_loss(threshold, ThresholdHypothesis{j / (4.0 * n)}, pts));
    if (empirical_loss(threshold, erm(threshold, pts), pts) != grid) ++threshold_mismatch;

    const int size = 1 + static_cast<int>(uniform01(rng) * 6);
    std::vector<Observation> support;
    for (int j = 0; j < size; ++j) support.push_back({(j + 0.5) / size, bernoulli(rng, 0.5) ? 1 : 0});
    const int functions = 1 + static_cast<int>(uniform01(rng) * 8);
    mat values(functions, size);
    for (long r = 0; r < values.rows(); ++r)
      for (long c = 0; c < values.cols(); ++c)
        values(r, c) = bernoulli(rng, 0.5) ? std::floor(uniform01(rng) * 3) / 2 : uniform01(rng);
    const FunctionClass table = FunctionClass::finite_explicit(support, values, 1);
    std::vector<Observation> sample;
    for (int j = 0; j < n; ++j) sample.push_back(support[static_cast<std::size_t>(uniform01(rng) * size)]);
    std::size_t best = 0;
    double best_total = 1e300;
    for (long f = 0; f < values.rows(); ++f) {
      double total = 0.0;
      for (const auto& z : sample)
        for (int j = 0; j < size; ++j)
          if (support[static_cast<std::size_t>(j)] == z) total += values(f, j);
      if (total < best_total) {
        best_total = total;
        best = static_cast<std::size_t>(f);
      }
    }
    if (std::get<TableHypothesis>(erm(table, sample)).index != best) ++table_mismatch;
  }
  return {threshold_mismatch == 0 && table_mismatch == 0,
          fmt("10000 samples: %ld threshold and %ld table mismatches", threshold_mismatch, table_mismatch)};
}

Outcome discrepancy_inequality() {
  VerifyOptions options;
  options.kind = "discrepancy";
  options.pairs = 10000;
  const auto outcome = verify(options);
  const auto& r = outcome.report;
  return {outcome.passed,
          fmt("%d pairs: max rho - TV %.3g, %ld violations; %d closed-form pairs: max gap %.3g",
              r.at("pairs").get<int>(), r.at("max_rho_minus_tv").get<double>(), r.at("inequality_failures").get<long>(),
              r.at("closed_form_pairs").get<int>(), r.at("max_closed_form_gap").get<double>())};
}

Outcome learner_equivalence() {
  Rng rng = make_rng(8, 0);
  long mismatches = 0, constant_checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const long t = 2 + static_cast<long>(uniform01(rng) * 400);
    const auto law = make_threshold_concept(uniform01(rng), 0.45 * uniform01(rng));
    std::vector<Observation> history;
    for (long j = 1; j < t; ++j) history.push_back(draw_observation(law, rng));
    const auto drift = std::make_shared<const DriftSchedule>(make_drift_schedule(
        i % 2 ? DriftKind::TriangleWave : DriftKind::PowerStep, 0.9 * uniform01(rng), std::nullopt, 401, static_cast<std::uint64_t>(i)));
    const AdaptiveWindowLearner adaptive{FunctionClass::threshold(), drift};
    const long mt = adaptive_window(t, *drift, 1);
    if (!(adaptive_erm_step(adaptive, history, t) == subsampled_erm(adaptive.cls, history, t, {1, mt}))) ++mismatches;

    const ConstantWindowLearner constant{FunctionClass::threshold(), std::pow(10.0, -3.0 * uniform01(rng))};
    const long mbar = constant_window_size(1, constant.gamma);
    if (t > mbar) {
      ++constant_checked;
      if (!(constant_window_step(constant, history, t) ==
            subsampled_erm(constant.cls, history, t, {1, std::min(mbar, t - 1)})))
        ++mismatches;
    }
  }
  return {mismatches == 0, fmt("1000 histories (%ld with t > window for the constant learner): %ld mismatches",
                               constant_checked, mismatches)};
}

Outcome schedule_properties() {
  const long horizon = 1'000'000;
  long violations = 0;
  for (double alpha : {0.0, 0.25, 0.5})
    for (double r : {0.5, 1.0, 2.0}) {
      std::vector<long> m(static_cast<std::size_t>(horizon + 1), 0);
      for (long t = 2; t <= horizon; ++t) {
        const Window w = schedule_km(t, alpha, r);
        m[static_cast<std::size_t>(t)] = w.m;
        if (!(1 <= w.k && w.k <= w.m && w.m <= t - 1)) ++violations;
        if (t > 2 && w.m < m[static_cast<std::size_t>(t - 1)]) ++violations;
      }
      for (long q = 2; 2 * q <= horizon; ++q)
        if (m[static_cast<std::size_t>(2 * q)] > 4 * m[static_cast<std::size_t>(q)]) ++violations;
    }
  return {violations == 0, fmt("t <= 10^6 on a 3x3 (alpha, r) grid: %ld violations", violations)};
}

Outcome determinism() {
  json first = rate_config("markov_modulated", "subsampled", scratch("c10a"));
  json second = rate_config("markov_modulated", "subsampled", scratch("c10b"));
  second["jobs"] = 2;
  const RunRecord a = simulate(parse_config(first));
  const RunRecord b = simulate(parse_config(second));
  long differing = 0, compared = 0;
  for (const auto& entry : fs::directory_iterator(a.directory)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".csv") continue;
    ++compared;
    if (slurp(entry.path()) != slurp(b.directory / name)) ++differing;
  }
  return {differing == 0 && compared >= 33 && a.config_hash == b.config_hash,
          fmt("%ld CSV files compared, %ld differ", compared, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"blocking inequality, exact enumeration", blocking},
      {"uniform deviation scaling", uniform_deviation},
      {"sublinear excess under mixing", mixing_sublinearity},
      {"adaptive window on product process", adaptive_product},
      {"constant drift gamma scaling", gamma_scaling},
      {"ERM oracle equivalence", erm_equivalence},
      {"discrepancy bounded by TV", discrepancy_inequality},
      {"learner equivalence", learner_equivalence},
      {"schedule properties", schedule_properties},
      {"byte-identical reruns", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    std::printf("%s  %2zu  %-40s %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

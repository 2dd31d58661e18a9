#include "driftlab/harness.hpp"

#include <algorithm>
#include <cmath>

namespace driftlab {

using nlohmann::json;

namespace {

constexpr double kBlockingTolerance = 1e-12;
constexpr double kExponentTarget = -0.5;
constexpr double kExponentTolerance = 0.08;
constexpr double kEnvelopeGrowth = 1.25;
constexpr double kDiscrepancyTolerance = 1e-9;

std::vector<Marginal> flat_path(std::size_t horizon) {
  return std::vector<Marginal>(horizon, make_threshold_concept(0.5, 0.1));
}

VerifyOutcome verify_blocking_grid() {
  json cases = json::array();
  bool passed = true;
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 2; s <= kBlockingMaxStates; ++s)
    for (double p : {0.1, 0.3, 0.45}) {
      const ProcessModel model = ProcessModel::markov_modulated(flip_chain(s, p), flat_path(64));
      for (int n = 2; n <= kBlockingMaxBlocks; ++n)
        for (int k = 1; k <= kBlockingMaxLag; ++k)
          for (long t = 1; t <= 5; ++t) {
            const BlockingReport r = verify_blocking(model, t, n, k);
            worst = std::min(worst, r.slack);
            const bool ok = r.slack >= -kBlockingTolerance;
            passed = passed && ok;
            if (!ok || t == 1)
              cases.push_back({{"states", s}, {"flip", p}, {"n", n}, {"k", k}, {"t", t},
                               {"tv_gap", r.tv_gap}, {"bound", r.bound}, {"slack", r.slack}, {"ok", ok}});
          }
    }
  return {{{"kind", "blocking"}, {"tolerance", kBlockingTolerance}, {"min_slack", worst}, {"cases", cases},
           {"passed", passed}},
          passed};
}

bool envelope_is_flat(const std::vector<double>& ratios) {
  const std::size_t half = ratios.size() / 2;
  if (half == 0) return true;
  const double lower = *std::max_element(ratios.begin(), ratios.begin() + static_cast<long>(half));
  const double upper = *std::max_element(ratios.begin() + static_cast<long>(half), ratios.end());
  return upper <= kEnvelopeGrowth * lower;
}

VerifyOutcome verify_uniform_deviation_grid(const VerifyOptions& options) {
  const FunctionClass cls = FunctionClass::threshold();
  const std::vector<long> ms = geometric_checkpoints(4, 14, 1);
  const long m_max = ms.back();

  const std::vector<Marginal> identical{make_threshold_concept(0.5, 0.1)};
  const DriftSchedule drift = make_drift_schedule(DriftKind::TriangleWave, 0.5, std::nullopt, m_max, options.seed);
  const std::vector<Marginal> drifting = concept_path(drift, 0.1, 0.5);

  json scenarios = json::array();
  bool passed = true;
  for (const auto& [name, laws] : {std::pair{"identical", &identical}, std::pair{"drifting", &drifting}}) {
    const UniformDeviationReport r = verify_uniform_deviation(cls, *laws, ms, options.trials, options.seed);
    const bool exponent_ok = std::abs(r.exponent - kExponentTarget) <= kExponentTolerance;
    const bool envelope_ok = envelope_is_flat(r.ratios);
    passed = passed && exponent_ok && envelope_ok;
    scenarios.push_back({{"marginals", name}, {"m", r.ms}, {"mean", r.means}, {"std_error", r.std_errors},
                         {"ratio", r.ratios}, {"exponent", r.exponent}, {"intercept", r.intercept},
                         {"envelope", r.envelope}, {"exponent_ok", exponent_ok}, {"envelope_ok", envelope_ok}});
  }
  return {{{"kind", "uniform_deviation"}, {"trials", options.trials}, {"target_exponent", kExponentTarget},
           {"tolerance", kExponentTolerance}, {"scenarios", scenarios}, {"passed", passed}},
          passed};
}

// Brute force sup over thresholds on the 0.001 lattice.
double grid_discrepancy(const ThresholdConcept& a, const ThresholdConcept& b) {
  const FunctionClass cls = FunctionClass::threshold();
  double best = 0.0;
  for (int j = 0; j <= 1000; ++j) {
    const Hypothesis h = ThresholdHypothesis{j / 1000.0};
    best = std::max(best, std::abs(risk(cls, h, a) - risk(cls, h, b)));
  }
  return best;
}

FiniteSupport random_finite(Rng& rng, const std::vector<Observation>& support) {
  vec probs(static_cast<long>(support.size()));
  for (long i = 0; i < probs.size(); ++i) probs(i) = uniform01(rng) + 1e-3;
  probs /= probs.sum();
  return make_finite_support(support, probs);
}

VerifyOutcome verify_discrepancy_grid(const VerifyOptions& options) {
  Rng rng = make_rng(options.seed, 0x72686f);
  const FunctionClass threshold = FunctionClass::threshold();
  double worst_excess = -std::numeric_limits<double>::infinity();
  long inequality_failures = 0;

  for (int i = 0; i < options.pairs; ++i) {
    const int family = i % 3;
    double rho = 0.0, tv = 0.0;
    if (family == 0) {
      const auto a = make_threshold_concept(uniform01(rng), 0.49 * uniform01(rng));
      const auto b = make_threshold_concept(uniform01(rng), 0.49 * uniform01(rng));
      rho = discrepancy(a, b, threshold);
      tv = tv_distance(a, b);
    } else {
      const int size = 2 + static_cast<int>(uniform01(rng) * 5);
      std::vector<Observation> support;
      for (int j = 0; j < size; ++j) support.push_back({(j + uniform01(rng) * 0.9) / size, bernoulli(rng, 0.5) ? 1 : 0});
      const auto a = random_finite(rng, support);
      const auto b = random_finite(rng, support);
      if (family == 1) {
        rho = discrepancy(a, b, threshold);
      } else {
        const int functions = 2 + static_cast<int>(uniform01(rng) * 6);
        mat values(functions, size);
        for (long r = 0; r < values.rows(); ++r)
          for (long c = 0; c < values.cols(); ++c) values(r, c) = uniform01(rng);
        rho = discrepancy(a, b, FunctionClass::finite_explicit(support, values, 1));
      }
      tv = tv_distance(a, b);
    }
    worst_excess = std::max(worst_excess, rho - tv);
    if (rho > tv + kDiscrepancyTolerance) ++inequality_failures;
  }

  const int closed_pairs = std::max(1, options.pairs / 10);
  double worst_closed = 0.0;
  long closed_failures = 0;
  for (int i = 0; i < closed_pairs; ++i) {
    const double eta = std::floor(uniform01(rng) * 490.0) / 1000.0;
    const auto a = make_threshold_concept(std::floor(uniform01(rng) * 1001.0) / 1000.0, eta);
    const auto b = make_threshold_concept(std::floor(uniform01(rng) * 1001.0) / 1000.0, eta);
    const double closed = (1.0 - 2.0 * eta) * std::abs(a.theta - b.theta);
    const double gap = std::max({std::abs(closed - grid_discrepancy(a, b)), std::abs(closed - discrepancy(a, b, threshold)),
                                 std::abs(closed - tv_distance(a, b))});
    worst_closed = std::max(worst_closed, gap);
    if (gap > kDiscrepancyTolerance) ++closed_failures;
  }

  const bool passed = inequality_failures == 0 && closed_failures == 0;
  return {{{"kind", "discrepancy"}, {"pairs", options.pairs}, {"tolerance", kDiscrepancyTolerance},
           {"max_rho_minus_tv", worst_excess}, {"inequality_failures", inequality_failures},
           {"closed_form_pairs", closed_pairs}, {"max_closed_form_gap", worst_closed},
           {"closed_form_failures", closed_failures}, {"passed", passed}},
          passed};
}

VerifyOutcome verify_mixing_grid(const VerifyOptions& options) {
  json cases = json::array();
  bool passed = true;
  for (int s : {2, 3, 4, 8}) {
    for (double p : {0.1, 0.3, 0.45}) {
      const ProcessModel model = ProcessModel::markov_modulated(flip_chain(s, p), flat_path(1));
      const MixingProfile profile = mixing_profile(model, options.r);
      const MixingReport report = verify_mixing_rate(profile);
      const double lambda = std::abs(1.0 - p * s / (s - 1.0));
      bool decay_ok = true;
      for (std::size_t k = 1; k <= profile.beta.size(); ++k)
        decay_ok = decay_ok && profile.beta[k - 1] <= profile.beta[0] * std::pow(lambda, double(k - 1)) + 1e-12;
      const bool ok = !report.violation && decay_ok;
      passed = passed && ok;
      cases.push_back({{"states", s}, {"flip", p}, {"bound_constant", report.bound_constant},
                       {"worst_k", report.worst_k}, {"beta_1", profile.beta[0]}, {"violation", report.violation},
                       {"geometric_decay", decay_ok}, {"ok", ok}});
    }
  }
  // A sequence that never decays must be flagged.
  const MixingReport control = verify_mixing_rate(mixing_profile(std::vector<double>(kDefaultMaxLag, 1.0), options.r));
  passed = passed && control.violation;
  return {{{"kind", "mixing_rate"}, {"r", options.r}, {"cases", cases},
           {"non_mixing_control_flagged", control.violation}, {"passed", passed}},
          passed};
}

}  // namespace

VerifyOutcome verify(const VerifyOptions& options) {
  if (options.trials < 2) throw ConfigError("--trials", "at least 2 trials are required");
  if (options.pairs < 1) throw ConfigError("--pairs", "at least 1 pair is required");
  if (!(options.r > 0.0)) throw ConfigError("--r", "mixing rate must be positive");
  VerifyOutcome outcome;
  if (options.kind == "blocking") {
    outcome = verify_blocking_grid();
  } else if (options.kind == "uniform_deviation") {
    outcome = verify_uniform_deviation_grid(options);
  } else if (options.kind == "discrepancy") {
    outcome = verify_discrepancy_grid(options);
  } else if (options.kind == "mixing_rate") {
    outcome = verify_mixing_grid(options);
  } else {
    throw ConfigError("--kind", "expected one of blocking, uniform_deviation, discrepancy, mixing_rate");
  }
  outcome.report["schema"] = kSchemaVersion;
  outcome.report["version"] = software_version();
  outcome.report["seed"] = options.seed;
  return outcome;
}

}  // namespace driftlab

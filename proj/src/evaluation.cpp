#include "driftlab/evaluation.hpp"

#include "driftlab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace driftlab {

mat RegretCurve::cumulative_excess() const {
  mat cum = excess();
  for (long t = 1; t < cum.cols(); ++t) cum.col(t) += cum.col(t - 1);
  return cum;
}

vec RegretCurve::cumulative_excess_se() const {
  const long n = replicates();
  if (n < 2) return vec::Zero(horizon);
  const mat cum = cumulative_excess();
  const vec mean = cum.colwise().mean().transpose();
  const mat centered = cum.rowwise() - mean.transpose();
  const vec var = centered.array().square().colwise().sum().transpose() / static_cast<double>(n - 1);
  return (var / static_cast<double>(n)).cwiseSqrt();
}

RegretCurve RegretCurve::replicate(long i) const {
  RegretCurve one;
  one.horizon = horizon;
  one.seeds = {seeds.at(static_cast<std::size_t>(i))};
  one.risks = risks.row(i);
  one.benchmark = benchmark;
  one.windows = windows;
  return one;
}

RegretCurve run_experiment(const ProcessModel& model, const Learner& learner, long horizon,
                           const std::vector<std::uint64_t>& seeds, const ExperimentOptions& options) {
  if (horizon < 1) throw std::invalid_argument("run_experiment: horizon must be >= 1");
  if (static_cast<std::size_t>(horizon) > model.horizon())
    throw std::invalid_argument("run_experiment: horizon exceeds the marginal path");
  if (seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
  const FunctionClass& cls = learner_class(learner);

  RegretCurve curve;
  curve.horizon = horizon;
  curve.seeds = seeds;
  curve.benchmark.resize(horizon);
  for (long t = 1; t <= horizon; ++t) curve.benchmark(t - 1) = inf_risk(cls, model.marginal(static_cast<std::size_t>(t)));
  curve.windows = window_plan(learner, horizon);
  curve.risks.resize(static_cast<long>(seeds.size()), horizon);

  const Hypothesis initial = default_hypothesis(cls);
  auto run_one = [&](long rep) {
    const SamplePath path = sample_path(model, static_cast<std::size_t>(horizon), seeds[static_cast<std::size_t>(rep)]);
    const std::span<const Observation> all(path.observations);
    std::vector<double> row(static_cast<std::size_t>(horizon));
    for (long t = 1; t <= horizon; ++t) {
      const Window w = curve.windows[static_cast<std::size_t>(t - 1)];
      const Hypothesis h = w.m == 0 ? initial : subsampled_erm(cls, all.first(static_cast<std::size_t>(t - 1)), t, w);
      row[static_cast<std::size_t>(t - 1)] = risk(cls, h, model.marginal(static_cast<std::size_t>(t)));
      if (options.on_checkpoint && (t & (t - 1)) == 0)
        options.on_checkpoint(rep, t, std::span<const double>(row.data(), static_cast<std::size_t>(t)));
    }
    for (long t = 0; t < horizon; ++t) curve.risks(rep, t) = row[static_cast<std::size_t>(t)];
  };

  const long reps = static_cast<long>(seeds.size());
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(reps)));
  if (jobs == 1) {
    for (long rep = 0; rep < reps; ++rep) run_one(rep);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (long rep = next++; rep < reps; rep = next++) run_one(rep);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : workers) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return curve;
}

double theoretical_exponent(double alpha, double r) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("theoretical_exponent: alpha must lie in [0,1)");
  if (!(r > 0.0)) throw std::invalid_argument("theoretical_exponent: r must be positive");
  return alpha + (1.0 - alpha) * (3.0 + 3.0 * r) / (3.0 + 4.0 * r);
}

std::vector<long> geometric_checkpoints(double lo_exponent, double hi_exponent, int per_octave) {
  if (per_octave < 1 || hi_exponent < lo_exponent) throw std::invalid_argument("checkpoints: invalid grid");
  std::vector<long> grid;
  const long steps = std::lround((hi_exponent - lo_exponent) * per_octave);
  for (long j = 0; j <= steps; ++j) {
    const long t = std::lround(std::exp2(lo_exponent + static_cast<double>(j) / per_octave));
    if (grid.empty() || t > grid.back()) grid.push_back(t);
  }
  return grid;
}

std::vector<long> tail_half(std::span<const long> checkpoints) {
  const std::size_t keep = (checkpoints.size() + 1) / 2;
  return {checkpoints.end() - static_cast<std::ptrdiff_t>(keep), checkpoints.end()};
}

RateFit fit_growth_exponent(std::span<const long> checkpoints, std::span<const double> values,
                            std::optional<double> theoretical) {
  if (checkpoints.size() != values.size()) throw std::invalid_argument("fit: checkpoint/value length mismatch");
  if (checkpoints.size() < kMinFitPoints)
    throw std::invalid_argument("fit: at least 8 checkpoints are required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || (i > 0 && checkpoints[i] <= checkpoints[i - 1]))
      throw std::invalid_argument("fit: checkpoints must be positive and strictly increasing");
    if (!(values[i] > 0.0))
      throw DegenerateFit("fit: non-positive cumulative excess at T=" + std::to_string(checkpoints[i]));
  }
  // Geometric spacing: every log gap within a factor 2 of the mean gap.
  const double mean_gap = std::log(static_cast<double>(checkpoints.back()) / static_cast<double>(checkpoints.front())) /
                          static_cast<double>(checkpoints.size() - 1);
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    const double gap = std::log(static_cast<double>(checkpoints[i]) / static_cast<double>(checkpoints[i - 1]));
    if (gap < 0.5 * mean_gap || gap > 2.0 * mean_gap)
      throw std::invalid_argument("fit: checkpoints must be geometrically spaced");
  }

  const long n = static_cast<long>(checkpoints.size());
  mat design(n, 2);
  vec target(n);
  for (long i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(static_cast<double>(checkpoints[static_cast<std::size_t>(i)]));
    target(i) = std::log(values[static_cast<std::size_t>(i)]);
  }
  const vec coef = design.colPivHouseholderQr().solve(target);
  RateFit fit;
  fit.intercept = coef(0);
  fit.exponent = coef(1);
  fit.t_min = checkpoints.front();
  fit.t_max = checkpoints.back();
  fit.points = checkpoints.size();
  fit.residual_norm = (design * coef - target).norm();
  fit.theoretical = theoretical;
  return fit;
}

RateFit fit_growth_exponent(const RegretCurve& curve, std::span<const long> checkpoints,
                            std::optional<double> theoretical) {
  const vec cum = curve.mean_cumulative_excess();
  std::vector<double> values;
  values.reserve(checkpoints.size());
  for (long t : checkpoints) {
    if (t < 1 || t > curve.horizon) throw std::invalid_argument("fit: checkpoint outside the curve horizon");
    values.push_back(cum(t - 1));
  }
  return fit_growth_exponent(checkpoints, values, theoretical);
}

BlockingReport verify_blocking(const ProcessModel& model, long t, int n, int k) {
  if (t < 1 || n < 1 || k < 1) throw std::invalid_argument("verify_blocking: t, n, k must be >= 1");
  if (n > kBlockingMaxBlocks || k > kBlockingMaxLag)
    throw std::invalid_argument("verify_blocking: n <= 4 and k <= 8 are required for exact enumeration");
  if (model.kind() == ProcessKind::Product) return {};
  const int s = model.states();
  if (s > kBlockingMaxStates) throw std::invalid_argument("verify_blocking: at most 4 hidden states");

  // The hidden chain is stationary, so every coordinate has law pi and t drops out.
  const vec& pi = model.stationary();
  const mat Pk = matrix_power(model.transition(), k);
  long cells = 1;
  for (int j = 0; j < n; ++j) cells *= s;
  std::vector<int> tuple(static_cast<std::size_t>(n), 0);
  double gap = 0.0;
  for (long cell = 0; cell < cells; ++cell) {
    long rest = cell;
    for (int j = 0; j < n; ++j) {
      tuple[static_cast<std::size_t>(j)] = static_cast<int>(rest % s);
      rest /= s;
    }
    double joint = pi(tuple[0]);
    double product = pi(tuple[0]);
    for (int j = 1; j < n; ++j) {
      joint *= Pk(tuple[static_cast<std::size_t>(j - 1)], tuple[static_cast<std::size_t>(j)]);
      product *= pi(tuple[static_cast<std::size_t>(j)]);
    }
    gap += std::abs(joint - product);
  }
  BlockingReport report;
  report.tv_gap = 0.5 * gap;
  report.bound = (n - 1) * beta_coefficient(model, k);
  report.slack = report.bound - report.tv_gap;
  return report;
}

namespace {

const Marginal& law_for(std::span<const Marginal> marginals, std::size_t i) {
  return marginals.size() == 1 ? marginals[0] : marginals[i];
}

double threshold_sup_deviation(std::span<const Observation> sample, std::span<const Marginal> marginals) {
  const std::size_t m = sample.size();
  // Expected total loss Sum_i [eta_i + w_i |theta - c_i|], w_i = 1 - 2 eta_i.
  std::vector<std::pair<double, double>> concepts;  // (c_i, w_i)
  double eta_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto* c = std::get_if<ThresholdConcept>(&law_for(marginals, i));
    if (!c) throw std::invalid_argument("sup_deviation: threshold class needs threshold concept marginals");
    concepts.emplace_back(c->theta, 1.0 - 2.0 * c->eta);
    eta_sum += c->eta;
  }
  std::sort(concepts.begin(), concepts.end());
  double w_total = 0.0, wc_total = 0.0;
  for (const auto& [c, w] : concepts) {
    w_total += w;
    wc_total += w * c;
  }

  std::vector<Observation> points(sample.begin(), sample.end());
  std::sort(points.begin(), points.end(), [](const Observation& a, const Observation& b) { return a.x < b.x; });
  double zeros = 0.0;
  for (const auto& z : points) zeros += z.y == 0 ? 1.0 : 0.0;

  std::size_t pi = 0, ci = 0;
  double below_ones = 0.0, above_zeros = zeros;  // empirical pieces for x < theta / x >= theta
  double w_below = 0.0, wc_below = 0.0;          // concepts with c <= theta
  auto advance_to = [&](double theta) {
    while (pi < m && points[pi].x < theta) {
      if (points[pi].y == 1) below_ones += 1.0;
      else above_zeros -= 1.0;
      ++pi;
    }
    while (ci < concepts.size() && concepts[ci].first <= theta) {
      w_below += concepts[ci].second;
      wc_below += concepts[ci].second * concepts[ci].first;
      ++ci;
    }
  };
  auto expected = [&](double theta) {
    return eta_sum + (w_below * theta - wc_below) + ((wc_total - wc_below) - (w_total - w_below) * theta);
  };

  std::vector<double> breaks;
  breaks.reserve(2 * m + 2);
  breaks.push_back(0.0);
  breaks.push_back(1.0);
  for (const auto& z : points) breaks.push_back(z.x);
  for (const auto& c : concepts) breaks.push_back(c.first);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  advance_to(0.0);
  double previous_expected = expected(0.0);
  double best = std::abs(below_ones + above_zeros - previous_expected);
  for (std::size_t b = 1; b < breaks.size(); ++b) {
    // On (breaks[b-1], breaks[b]] the empirical loss is constant and the expected loss linear.
    advance_to(breaks[b]);
    const double empirical = below_ones + above_zeros;
    const double here = expected(breaks[b]);
    best = std::max({best, std::abs(empirical - previous_expected), std::abs(empirical - here)});
    previous_expected = here;
  }
  return best / static_cast<double>(m);
}

double table_sup_deviation(const TableClass& table, std::span<const Observation> sample,
                           std::span<const Marginal> marginals) {
  const long width = static_cast<long>(table.support.size());
  vec counts = vec::Zero(width);
  vec expected_mass = vec::Zero(width);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    auto it = std::find(table.support.begin(), table.support.end(), sample[i]);
    if (it == table.support.end()) throw std::invalid_argument("sup_deviation: sample outside the class support");
    counts(it - table.support.begin()) += 1.0;
    const auto* f = std::get_if<FiniteSupport>(&law_for(marginals, i));
    if (!f) throw std::invalid_argument("sup_deviation: finite classes need finite-support marginals");
    for (std::size_t j = 0; j < f->support.size(); ++j) {
      auto jt = std::find(table.support.begin(), table.support.end(), f->support[j]);
      if (jt == table.support.end()) throw std::invalid_argument("sup_deviation: marginal outside the class support");
      expected_mass(jt - table.support.begin()) += f->probs(static_cast<long>(j));
    }
  }
  return (table.values * (counts - expected_mass)).cwiseAbs().maxCoeff() / static_cast<double>(sample.size());
}

}  // namespace

double sup_deviation(const FunctionClass& cls, std::span<const Observation> sample, std::span<const Marginal> marginals) {
  if (sample.empty()) throw std::invalid_argument("sup_deviation: empty sample");
  if (marginals.size() != 1 && marginals.size() < sample.size())
    throw std::invalid_argument("sup_deviation: need one shared marginal or one per point");
  if (cls.is_threshold()) return threshold_sup_deviation(sample, marginals);
  return table_sup_deviation(cls.table(), sample, marginals);
}

UniformDeviationReport verify_uniform_deviation(const FunctionClass& cls, std::span<const Marginal> marginals,
                                                std::span<const long> m_grid, int trials, std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("trials: at least 2 trials are needed for a standard error");
  if (m_grid.empty()) throw std::invalid_argument("m_grid: empty grid");
  if (marginals.empty()) throw std::invalid_argument("marginals: empty");
  UniformDeviationReport report;
  report.trials = trials;
  const double d = cls.dimension();
  std::vector<Observation> sample;
  for (std::size_t g = 0; g < m_grid.size(); ++g) {
    const long m = m_grid[g];
    if (m < 1 || (marginals.size() != 1 && static_cast<std::size_t>(m) > marginals.size()))
      throw std::invalid_argument("m_grid: sizes must be >= 1 and covered by the marginals");
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(m));
    double sum = 0.0, sum_sq = 0.0;
    sample.resize(static_cast<std::size_t>(m));
    for (int trial = 0; trial < trials; ++trial) {
      for (long i = 0; i < m; ++i)
        sample[static_cast<std::size_t>(i)] = draw_observation(law_for(marginals, static_cast<std::size_t>(i)), rng);
      const double dev = sup_deviation(cls, sample, marginals);
      sum += dev;
      sum_sq += dev * dev;
    }
    const double mean = sum / trials;
    const double var = std::max(0.0, (sum_sq - trials * mean * mean) / (trials - 1));
    report.ms.push_back(m);
    report.means.push_back(mean);
    report.std_errors.push_back(std::sqrt(var / trials));
    report.ratios.push_back(mean / std::sqrt(d / static_cast<double>(m)));
  }
  report.envelope = *std::max_element(report.ratios.begin(), report.ratios.end());
  if (report.ms.size() >= 2) {
    const long n = static_cast<long>(report.ms.size());
    mat design(n, 2);
    vec target(n);
    for (long i = 0; i < n; ++i) {
      design(i, 0) = 1.0;
      design(i, 1) = std::log(static_cast<double>(report.ms[static_cast<std::size_t>(i)]));
      target(i) = std::log(std::max(report.means[static_cast<std::size_t>(i)], 1e-300));
    }
    const vec coef = design.colPivHouseholderQr().solve(target);
    report.intercept = coef(0);
    report.exponent = coef(1);
  }
  return report;
}

void write_curve_csv(std::ostream& out, const RegretCurve& curve, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "t,mean_risk,inf_risk,cum_excess,ci_lo,ci_hi\n";
  const vec mean_risk = curve.mean_risk();
  const vec cum = curve.mean_cumulative_excess();
  const vec se = curve.cumulative_excess_se();
  char buf[256];
  for (long t = 0; t < curve.horizon; ++t) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", t + 1, mean_risk(t), curve.benchmark(t),
                  cum(t), cum(t) - 1.96 * se(t), cum(t) + 1.96 * se(t));
    out << buf;
  }
}

CurveTable read_curve_csv(std::istream& in) {
  CurveTable table;
  std::string line;
  bool header = false;
  std::size_t t_col = 0, cum_col = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      auto find = [&](const std::string& name) {
        auto it = std::find(cells.begin(), cells.end(), name);
        if (it == cells.end()) throw std::runtime_error("curve csv: missing column '" + name + "'");
        return static_cast<std::size_t>(it - cells.begin());
      };
      t_col = find("t");
      cum_col = find("cum_excess");
      header = true;
      continue;
    }
    if (cells.size() <= std::max(t_col, cum_col)) throw std::runtime_error("curve csv: short row");
    table.t.push_back(std::stol(cells[t_col]));
    table.cum_excess.push_back(std::stod(cells[cum_col]));
  }
  if (!header) throw std::runtime_error("curve csv: missing header");
  return table;
}

}  // namespace driftlab

#include "driftlab/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace driftlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t support_index(const TableClass& table, const Observation& z) {
  auto it = std::find(table.support.begin(), table.support.end(), z);
  if (it == table.support.end())
    throw std::invalid_argument("observation outside the finite class support");
  return static_cast<std::size_t>(it - table.support.begin());
}

double threshold_loss(double theta, const Observation& z) {
  const int prediction = z.x >= theta ? 1 : 0;
  return prediction != z.y ? 1.0 : 0.0;
}

}  // namespace

FunctionClass FunctionClass::threshold() { return FunctionClass(ThresholdClass{}); }

FunctionClass FunctionClass::finite_explicit(std::vector<Observation> support, mat values,
                                             int pseudo_dimension) {
  if (values.rows() < 1) throw std::invalid_argument("finite class needs at least one function");
  if (values.cols() != static_cast<long>(support.size()))
    throw std::invalid_argument("finite class: value table width must match support size");
  if ((values.array() < 0.0).any() || (values.array() > 1.0).any())
    throw std::invalid_argument("finite class: function values must lie in [0,1]");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!is_valid(support[i])) throw std::invalid_argument("finite class: invalid support point");
    for (std::size_t j = 0; j < i; ++j)
      if (support[i] == support[j]) throw std::invalid_argument("finite class: duplicate support point");
  }
  const int cap = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(values.rows())))));
  if (pseudo_dimension < 1 || pseudo_dimension > cap)
    throw std::invalid_argument("finite class: pseudo-dimension must lie in [1, ceil(log2 |F|)]");
  return FunctionClass(TableClass{std::move(support), std::move(values), pseudo_dimension});
}

int FunctionClass::dimension() const {
  return std::visit(overloaded{[](const ThresholdClass&) { return 1; },
                               [](const TableClass& t) { return t.pseudo_dimension; }},
                    impl_);
}

std::size_t FunctionClass::size() const {
  return std::visit(overloaded{[](const ThresholdClass&) { return std::size_t{0}; },
                               [](const TableClass& t) { return static_cast<std::size_t>(t.values.rows()); }},
                    impl_);
}

Hypothesis default_hypothesis(const FunctionClass& cls) {
  if (cls.is_threshold()) return ThresholdHypothesis{0.0};
  return TableHypothesis{0};
}

double loss(const FunctionClass& cls, const Hypothesis& h, const Observation& z) {
  if (cls.is_threshold()) {
    const auto* th = std::get_if<ThresholdHypothesis>(&h);
    if (!th) throw std::invalid_argument("loss: hypothesis does not belong to the threshold class");
    return threshold_loss(th->theta, z);
  }
  const auto* tb = std::get_if<TableHypothesis>(&h);
  const TableClass& table = cls.table();
  if (!tb || tb->index >= static_cast<std::size_t>(table.values.rows()))
    throw std::invalid_argument("loss: hypothesis does not belong to the finite class");
  return table.values(static_cast<long>(tb->index), static_cast<long>(support_index(table, z)));
}

double empirical_loss(const FunctionClass& cls, const Hypothesis& h, std::span<const Observation> points) {
  double total = 0.0;
  for (const auto& z : points) total += loss(cls, h, z);
  return total;
}

namespace detail {

ThresholdSweep threshold_sweep(std::span<const double> xs, std::span<const int> ys,
                               std::span<const double> weights) {
  ThresholdSweep sweep;
  const std::size_t n = xs.size();
  double below_ones = 0.0;  // weight of y=1 points with x < theta (predicted 0)
  double above_zeros = 0.0; // weight of y=0 points with x >= theta (predicted 1)
  for (std::size_t i = 0; i < n; ++i)
    if (ys[i] == 0) above_zeros += weights[i];

  sweep.thetas.push_back(0.0);
  sweep.losses.push_back(above_zeros);

  std::size_t i = 0;
  double previous = 0.0;
  bool have_previous = false;
  while (i < n) {
    const double u = xs[i];
    if (have_previous) {
      const double mid = 0.5 * (previous + u);
      sweep.thetas.push_back(mid);
      sweep.losses.push_back(below_ones + above_zeros);
    }
    if (u > 0.0) {
      sweep.thetas.push_back(u);
      sweep.losses.push_back(below_ones + above_zeros);
    }
    // Points at x == u move below the threshold for every later candidate.
    while (i < n && xs[i] == u) {
      if (ys[i] == 1) below_ones += weights[i];
      else above_zeros -= weights[i];
      ++i;
    }
    previous = u;
    have_previous = true;
  }
  if (!have_previous || previous < 1.0) {
    sweep.thetas.push_back(1.0);
    sweep.losses.push_back(below_ones + above_zeros);
  }
  return sweep;
}

ThresholdHypothesis weighted_threshold_erm(std::span<const Observation> points,
                                           std::span<const double> weights) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a].x < points[b].x; });
  std::vector<double> xs(points.size()), ws(points.size());
  std::vector<int> ys(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    xs[i] = points[order[i]].x;
    ys[i] = points[order[i]].y;
    ws[i] = weights[order[i]];
  }
  const ThresholdSweep sweep = threshold_sweep(xs, ys, ws);
  std::size_t best = 0;
  for (std::size_t c = 1; c < sweep.losses.size(); ++c)
    if (sweep.losses[c] < sweep.losses[best]) best = c;
  return ThresholdHypothesis{sweep.thetas[best]};
}

}  // namespace detail

Hypothesis erm(const FunctionClass& cls, std::span<const Observation> points) {
  if (points.empty()) throw std::invalid_argument("erm: empty sample");
  if (cls.is_threshold()) {
    const std::vector<double> unit(points.size(), 1.0);
    return detail::weighted_threshold_erm(points, unit);
  }
  const TableClass& table = cls.table();
  vec counts = vec::Zero(static_cast<long>(table.support.size()));
  for (const auto& z : points) counts(static_cast<long>(support_index(table, z))) += 1.0;
  const vec totals = table.values * counts;
  long best = 0;
  for (long i = 1; i < totals.size(); ++i)
    if (totals(i) < totals(best)) best = i;
  return TableHypothesis{static_cast<std::size_t>(best)};
}

double risk(const FunctionClass& cls, const Hypothesis& h, const Marginal& p) {
  return std::visit(
      overloaded{
          [&](const ThresholdConcept& c) -> double {
            const auto* th = std::get_if<ThresholdHypothesis>(&h);
            if (!cls.is_threshold() || !th)
              throw std::invalid_argument("risk: finite classes are not paired with threshold concepts");
            return c.eta + (1.0 - 2.0 * c.eta) * std::abs(th->theta - c.theta);
          },
          [&](const FiniteSupport& f) -> double {
            double total = 0.0;
            for (std::size_t i = 0; i < f.support.size(); ++i)
              total += f.probs(static_cast<long>(i)) * loss(cls, h, f.support[i]);
            return total;
          }},
      p);
}

double inf_risk(const FunctionClass& cls, const Marginal& p) {
  return std::visit(
      overloaded{
          [&](const ThresholdConcept& c) -> double {
            if (!cls.is_threshold())
              throw std::invalid_argument("inf_risk: finite classes are not paired with threshold concepts");
            return c.eta;
          },
          [&](const FiniteSupport& f) -> double {
            if (cls.is_threshold()) {
              std::vector<double> w(f.probs.data(), f.probs.data() + f.probs.size());
              const Hypothesis best = detail::weighted_threshold_erm(f.support, w);
              return risk(cls, best, p);
            }
            const TableClass& table = cls.table();
            vec aligned = vec::Zero(static_cast<long>(table.support.size()));
            for (std::size_t i = 0; i < f.support.size(); ++i)
              aligned(static_cast<long>(support_index(table, f.support[i]))) += f.probs(static_cast<long>(i));
            return (table.values * aligned).minCoeff();
          }},
      p);
}

FunctionClass function_class_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", std::string("finite"));
  if (kind == "threshold") return FunctionClass::threshold();
  if (kind != "finite") throw std::invalid_argument("class.kind: expected 'threshold' or 'finite'");
  std::vector<Observation> support;
  for (const auto& point : j.at("support")) support.push_back({point.at(0).get<double>(), point.at(1).get<int>()});
  const auto& rows = j.at("values");
  mat values(static_cast<long>(rows.size()), static_cast<long>(support.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != support.size())
      throw std::invalid_argument("class.values: row width must match support size");
    for (std::size_t c = 0; c < support.size(); ++c)
      values(static_cast<long>(r), static_cast<long>(c)) = rows[r][c].get<double>();
  }
  return FunctionClass::finite_explicit(std::move(support), std::move(values), j.at("d").get<int>());
}

nlohmann::json to_json(const FunctionClass& cls) {
  if (cls.is_threshold()) return {{"kind", "threshold"}, {"d", 1}};
  const TableClass& table = cls.table();
  nlohmann::json support = nlohmann::json::array();
  for (const auto& z : table.support) support.push_back({z.x, z.y});
  nlohmann::json values = nlohmann::json::array();
  for (long r = 0; r < table.values.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (long c = 0; c < table.values.cols(); ++c) row.push_back(table.values(r, c));
    values.push_back(row);
  }
  return {{"kind", "finite"}, {"support", support}, {"values", values}, {"d", table.pseudo_dimension}};
}

}  // namespace driftlab

#pragma once

#include "driftlab/marginal.hpp"

#include "json.hpp"

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace driftlab {

/// Losses f_theta(x, y) = 1[1[x >= theta] != y] for theta in [0,1]. Pseudo-dimension 1.
struct ThresholdClass {};

/// An explicit finite list of loss tables over a shared finite support.
/// Row i of `values` is the i-th function evaluated on `support`.
struct TableClass {
  std::vector<Observation> support;
  mat values;
  int pseudo_dimension = 1;
};

class FunctionClass {
 public:
  static FunctionClass threshold();
  static FunctionClass finite_explicit(std::vector<Observation> support, mat values, int pseudo_dimension);

  bool is_threshold() const { return std::holds_alternative<ThresholdClass>(impl_); }
  const TableClass& table() const { return std::get<TableClass>(impl_); }

  int dimension() const;
  /// Number of members; 0 for the (uncountable) threshold class.
  std::size_t size() const;

  const std::variant<ThresholdClass, TableClass>& impl() const { return impl_; }

 private:
  explicit FunctionClass(std::variant<ThresholdClass, TableClass> impl) : impl_(std::move(impl)) {}
  std::variant<ThresholdClass, TableClass> impl_;
};

struct ThresholdHypothesis {
  double theta = 0.0;
  friend bool operator==(const ThresholdHypothesis&, const ThresholdHypothesis&) = default;
};

struct TableHypothesis {
  std::size_t index = 0;
  friend bool operator==(const TableHypothesis&, const TableHypothesis&) = default;
};

using Hypothesis = std::variant<ThresholdHypothesis, TableHypothesis>;

/// Smallest-parameter member; used wherever a learner needs an arbitrary fixed predictor.
Hypothesis default_hypothesis(const FunctionClass& cls);

double loss(const FunctionClass& cls, const Hypothesis& h, const Observation& z);

/// Sum (not mean) of the losses over `points`.
double empirical_loss(const FunctionClass& cls, const Hypothesis& h, std::span<const Observation> points);

/// Exact empirical risk minimizer; ties go to the smallest threshold / index.
Hypothesis erm(const FunctionClass& cls, std::span<const Observation> points);

/// Exact expected loss of h under p.
double risk(const FunctionClass& cls, const Hypothesis& h, const Marginal& p);

/// Exact inf over the class of the expected loss under p.
double inf_risk(const FunctionClass& cls, const Marginal& p);

/// Loads a finite class from {"support": [[x,y],...], "values": [[...],...], "d": n}.
FunctionClass function_class_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FunctionClass& cls);

namespace detail {

/// Candidate thresholds {0} U {x_i} U {midpoints of consecutive distinct x_i} U {1},
/// in ascending order, each with its weighted loss. `xs` must be sorted ascending.
struct ThresholdSweep {
  std::vector<double> thetas;
  std::vector<double> losses;
};
ThresholdSweep threshold_sweep(std::span<const double> xs, std::span<const int> ys,
                               std::span<const double> weights);

/// Smallest candidate attaining the minimal weighted loss.
ThresholdHypothesis weighted_threshold_erm(std::span<const Observation> points,
                                           std::span<const double> weights);

}  // namespace detail

}  // namespace driftlab

#pragma once

#include "driftlab/distributions.hpp"
#include "driftlab/hypotheses.hpp"

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace driftlab {

/// A trailing training window: ERM over Z_{t - s k} for s = 1..floor(m / k).
struct Window {
  long k = 1;
  long m = 1;
  friend bool operator==(const Window&, const Window&) = default;
};

/// (k_t, m_t) for the subsampled learner. Requires t >= 2, alpha in [0,1), r > 0.
Window schedule_km(long t, double alpha, double r);

/// 1-based time indices of the subsample for step t, nearest first.
std::vector<long> subsample_indices(long t, Window window);

/// ERM on {Z_{t - s k} : s = 1..floor(m/k)} from a history of length t - 1.
Hypothesis subsampled_erm(const FunctionClass& cls, std::span<const Observation> history, long t, Window window);

/// Drift-rate-aware learner: alpha and the mixing exponent r fix the window schedule.
struct SubsampledErmLearner {
  double alpha = 0.0;
  double r = 1.0;
  FunctionClass cls = FunctionClass::threshold();
};

/// Learner with direct access to the drift magnitudes.
struct AdaptiveWindowLearner {
  FunctionClass cls = FunctionClass::threshold();
  std::shared_ptr<const DriftSchedule> drift;
};

/// Learner for a known constant drift bound gamma; window ceil(d^(1/3) gamma^(-2/3)).
struct ConstantWindowLearner {
  FunctionClass cls = FunctionClass::threshold();
  double gamma = 0.01;
};

enum class BaselineKind { FullHistoryErm, LastPoint };

struct BaselineLearner {
  BaselineKind kind = BaselineKind::FullHistoryErm;
  FunctionClass cls = FunctionClass::threshold();
};

using Learner = std::variant<SubsampledErmLearner, AdaptiveWindowLearner, ConstantWindowLearner, BaselineLearner>;

std::string learner_name(const Learner& learner);
const FunctionClass& learner_class(const Learner& learner);

Hypothesis subsampled_erm_step(const SubsampledErmLearner& learner, std::span<const Observation> history, long t);

/// argmin over m in 1..t-1 of (Sum_{q=t-m}^{t-1} Delta_{q+1} + sqrt(d/m)); ties to the smallest m.
long adaptive_window(long t, const DriftSchedule& drift, int d);

Hypothesis adaptive_erm_step(const AdaptiveWindowLearner& learner, std::span<const Observation> history, long t);

long constant_window_size(int d, double gamma);

Hypothesis constant_window_step(const ConstantWindowLearner& learner, std::span<const Observation> history, long t);

Hypothesis baseline_step(const BaselineLearner& learner, std::span<const Observation> history, long t);

/// Dispatches to the learner's step; t = 1 yields the fixed initial predictor.
Hypothesis learner_step(const Learner& learner, std::span<const Observation> history, long t);

/// The window each step trains on, for t = 1..horizon. Entry 0 (t = 1) is {0, 0}:
/// no data, fixed predictor. Also {0, 0} for constant-window warm-up steps.
std::vector<Window> window_plan(const Learner& learner, long horizon);

/// Validates parameter domains; throws std::invalid_argument naming the field.
void validate(const Learner& learner);

}  // namespace driftlab

#include "driftlab/learners.hpp"

#include <cmath>
#include <stdexcept>

namespace driftlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Values within 2^-40 of an integer are taken as that integer before the ceiling,
// so rounding in pow() cannot move a window by one.
long snapped_ceil(double v) {
  const double nearest = std::round(v);
  if (std::abs(v - nearest) <= 0x1.0p-40) return static_cast<long>(nearest);
  return static_cast<long>(std::ceil(v));
}

void check_history(std::span<const Observation> history, long t) {
  if (t < 1) throw std::invalid_argument("learner step: t must be >= 1");
  if (static_cast<long>(history.size()) != t - 1)
    throw std::invalid_argument("learner step: history length must equal t - 1");
}

Hypothesis contiguous_erm(const FunctionClass& cls, std::span<const Observation> history, long m) {
  return erm(cls, history.last(static_cast<std::size_t>(m)));
}

}  // namespace

Window schedule_km(long t, double alpha, double r) {
  if (t < 2) throw std::invalid_argument("schedule_km: t must be >= 2");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("schedule_km: alpha must lie in [0,1)");
  if (!(r > 0.0)) throw std::invalid_argument("schedule_km: r must be positive");
  const double td = static_cast<double>(t);
  const double k_exponent = (1.0 - alpha) * 3.0 / (3.0 + 4.0 * r);
  const double m_exponent = (1.0 - alpha) * (3.0 + 2.0 * r) / (3.0 + 4.0 * r);
  const long k = std::min(snapped_ceil(std::pow(td, k_exponent)), t - 1);
  const long m = std::min(snapped_ceil(std::pow(td, m_exponent)), t - 1);
  return {k, m};
}

std::vector<long> subsample_indices(long t, Window window) {
  if (window.k < 1 || window.m < window.k || window.m > t - 1)
    throw std::invalid_argument("subsample: window must satisfy 1 <= k <= m <= t - 1");
  std::vector<long> idx;
  const long count = window.m / window.k;
  idx.reserve(static_cast<std::size_t>(count));
  for (long s = 1; s <= count; ++s) idx.push_back(t - s * window.k);
  return idx;
}

Hypothesis subsampled_erm(const FunctionClass& cls, std::span<const Observation> history, long t, Window window) {
  check_history(history, t);
  const auto idx = subsample_indices(t, window);
  std::vector<Observation> sample;
  sample.reserve(idx.size());
  for (long i : idx) sample.push_back(history[static_cast<std::size_t>(i - 1)]);
  return erm(cls, sample);
}

std::string learner_name(const Learner& learner) {
  return std::visit(overloaded{[](const SubsampledErmLearner&) -> std::string { return "subsampled"; },
                               [](const AdaptiveWindowLearner&) -> std::string { return "adaptive"; },
                               [](const ConstantWindowLearner&) -> std::string { return "constant"; },
                               [](const BaselineLearner& b) -> std::string {
                                 return b.kind == BaselineKind::FullHistoryErm ? "full_history" : "last_point";
                               }},
                    learner);
}

const FunctionClass& learner_class(const Learner& learner) {
  return std::visit([](const auto& l) -> const FunctionClass& { return l.cls; }, learner);
}

Hypothesis subsampled_erm_step(const SubsampledErmLearner& learner, std::span<const Observation> history, long t) {
  check_history(history, t);
  if (t == 1) return default_hypothesis(learner.cls);
  return subsampled_erm(learner.cls, history, t, schedule_km(t, learner.alpha, learner.r));
}

long adaptive_window(long t, const DriftSchedule& drift, int d) {
  if (t < 2) throw std::invalid_argument("adaptive_window: t must be >= 2");
  if (static_cast<std::size_t>(t) > drift.horizon())
    throw std::invalid_argument("adaptive_window: drift schedule does not cover t");
  if (d < 1) throw std::invalid_argument("adaptive_window: d must be >= 1");
  const std::size_t tu = static_cast<std::size_t>(t);
  // Sum_{q=t-m}^{t-1} Delta_{q+1} = prefix(t) - prefix(t - m)
  long best = 1;
  double best_value = drift.prefix(tu) - drift.prefix(tu - 1) + std::sqrt(static_cast<double>(d));
  for (long m = 2; m <= t - 1; ++m) {
    const double value = drift.prefix(tu) - drift.prefix(tu - static_cast<std::size_t>(m)) +
                         std::sqrt(static_cast<double>(d) / static_cast<double>(m));
    if (value < best_value) {
      best_value = value;
      best = m;
    }
  }
  return best;
}

Hypothesis adaptive_erm_step(const AdaptiveWindowLearner& learner, std::span<const Observation> history, long t) {
  check_history(history, t);
  if (!learner.drift) throw std::invalid_argument("adaptive learner: missing drift schedule");
  if (t == 1) return default_hypothesis(learner.cls);
  return contiguous_erm(learner.cls, history, adaptive_window(t, *learner.drift, learner.cls.dimension()));
}

long constant_window_size(int d, double gamma) {
  if (d < 1) throw std::invalid_argument("constant window: d must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("constant window: gamma must lie in (0,1]");
  return std::max(1L, snapped_ceil(std::cbrt(static_cast<double>(d)) * std::pow(gamma, -2.0 / 3.0)));
}

Hypothesis constant_window_step(const ConstantWindowLearner& learner, std::span<const Observation> history, long t) {
  check_history(history, t);
  const long window = constant_window_size(learner.cls.dimension(), learner.gamma);
  if (t <= window) return default_hypothesis(learner.cls);
  return contiguous_erm(learner.cls, history, window);
}

Hypothesis baseline_step(const BaselineLearner& learner, std::span<const Observation> history, long t) {
  check_history(history, t);
  if (history.empty()) throw std::invalid_argument("baseline: empty history");
  if (learner.kind == BaselineKind::FullHistoryErm) return erm(learner.cls, history);
  return erm(learner.cls, history.last(1));
}

Hypothesis learner_step(const Learner& learner, std::span<const Observation> history, long t) {
  if (t == 1) {
    check_history(history, t);
    return default_hypothesis(learner_class(learner));
  }
  return std::visit(overloaded{[&](const SubsampledErmLearner& l) { return subsampled_erm_step(l, history, t); },
                               [&](const AdaptiveWindowLearner& l) { return adaptive_erm_step(l, history, t); },
                               [&](const ConstantWindowLearner& l) { return constant_window_step(l, history, t); },
                               [&](const BaselineLearner& l) { return baseline_step(l, history, t); }},
                    learner);
}

std::vector<Window> window_plan(const Learner& learner, long horizon) {
  validate(learner);
  std::vector<Window> plan(static_cast<std::size_t>(std::max(0L, horizon)), Window{0, 0});
  const long fixed = std::holds_alternative<ConstantWindowLearner>(learner)
                         ? constant_window_size(learner_class(learner).dimension(),
                                                std::get<ConstantWindowLearner>(learner).gamma)
                         : 0;
  for (long t = 2; t <= horizon; ++t) {
    Window& w = plan[static_cast<std::size_t>(t - 1)];
    std::visit(overloaded{[&](const SubsampledErmLearner& l) { w = schedule_km(t, l.alpha, l.r); },
                          [&](const AdaptiveWindowLearner& l) {
                            w = {1, adaptive_window(t, *l.drift, l.cls.dimension())};
                          },
                          [&](const ConstantWindowLearner&) {
                            if (t > fixed) w = {1, fixed};
                          },
                          [&](const BaselineLearner& l) {
                            w = {1, l.kind == BaselineKind::FullHistoryErm ? t - 1 : 1};
                          }},
               learner);
  }
  return plan;
}

void validate(const Learner& learner) {
  std::visit(overloaded{[](const SubsampledErmLearner& l) {
                          if (!(l.alpha >= 0.0 && l.alpha < 1.0))
                            throw std::invalid_argument("learner.alpha: must lie in [0,1)");
                          if (!(l.r > 0.0)) throw std::invalid_argument("learner.r: must be positive");
                        },
                        [](const AdaptiveWindowLearner& l) {
                          if (!l.drift) throw std::invalid_argument("learner: adaptive learner needs the drift schedule");
                        },
                        [](const ConstantWindowLearner& l) {
                          if (!(l.gamma > 0.0 && l.gamma < 1.0))
                            throw std::invalid_argument("learner.gamma: must lie in (0,1)");
                        },
                        [](const BaselineLearner&) {}},
             learner);
}

}  // namespace driftlab

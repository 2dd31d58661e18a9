#include "doctest.h"
#include "support.hpp"

#include "driftlab/learners.hpp"

using namespace driftlab;
using testing::Gen;

namespace {

long scan_adaptive_window(long t, const DriftSchedule& s, int d) {
  long best = 1;
  double best_value = 1e300;
  for (long m = 1; m <= t - 1; ++m) {
    double drift = 0.0;
    for (long q = t - m; q <= t - 1; ++q) drift += s.delta(static_cast<std::size_t>(q + 1));
    const double value = drift + std::sqrt(double(d) / double(m));
    if (value < best_value) {
      best_value = value;
      best = m;
    }
  }
  return best;
}

DriftSchedule explicit_schedule(std::vector<double> deltas) {
  DriftSchedule s;
  s.directions.assign(deltas.size(), 1);
  s.deltas = std::move(deltas);
  s.finalize();
  return s;
}

}  // namespace

TEST_SUITE("learners") {
  TEST_CASE("schedule examples") {
    CHECK(schedule_km(2, 0.0, 1.0) == Window{1, 1});
    CHECK(schedule_km(100, 0.0, 1.0) == Window{8, 27});
    for (double r : {0.5, 1.0, 2.0}) {
      const long t = 1'000'000;
      const auto w = schedule_km(t, 0.99, r);
      CHECK(w.k == static_cast<long>(std::ceil(std::pow(double(t), 0.01 * 3.0 / (3.0 + 4.0 * r)))));
      CHECK(w.k <= 2);
    }
    CHECK_THROWS(schedule_km(1, 0.0, 1.0));
    CHECK_THROWS(schedule_km(10, 1.0, 1.0));
    CHECK_THROWS(schedule_km(10, 0.0, 0.0));
  }

  TEST_CASE("exact integer powers are not rounded up") {
    // r = 0.75 gives exponents 1/2 and 3/4; alpha = 0.5 halves them.
    CHECK(schedule_km(16, 0.0, 0.75) == Window{4, 8});
    CHECK(schedule_km(64, 0.0, 0.75) == Window{8, 23});
    CHECK(schedule_km(81, 0.5, 0.75) == Window{3, 6});
    CHECK(schedule_km(4096, 0.0, 0.75) == Window{64, 512});
  }

  TEST_CASE("subsample indices") {
    CHECK(subsample_indices(100, {8, 27}) == std::vector<long>{92, 84, 76});
    CHECK(subsample_indices(2, {1, 1}) == std::vector<long>{1});
    CHECK_THROWS(subsample_indices(5, {3, 2}));
    CHECK_THROWS(subsample_indices(5, {1, 5}));
  }

  TEST_CASE("schedule invariants") {
    for (double alpha : {0.0, 0.5})
      for (double r : {1.0, 3.0}) {
        Window prev{1, 1};
        for (long t = 2; t <= 200000; ++t) {
          const auto w = schedule_km(t, alpha, r);
          REQUIRE(1 <= w.k);
          REQUIRE(w.k <= w.m);
          REQUIRE(w.m <= t - 1);
          REQUIRE(w.m / w.k >= 1);
          REQUIRE(w.m >= prev.m);
          if (t >= 4 && t % 2 == 0) REQUIRE(w.m <= 4 * schedule_km(t / 2, alpha, r).m);
          prev = w;
        }
      }
  }

  TEST_CASE("subsample indices are distinct, in range and evenly spaced") {
    Gen g(1);
    for (int i = 0; i < 2000; ++i) {
      const long t = g.integer(2, 100000);
      const auto w = schedule_km(t, g.real(0, 0.95), g.real(0.2, 4));
      const auto idx = subsample_indices(t, w);
      REQUIRE(static_cast<long>(idx.size()) == w.m / w.k);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        REQUIRE(idx[j] >= 1);
        REQUIRE(idx[j] <= t - 1);
        REQUIRE(idx[j] == t - static_cast<long>(j + 1) * w.k);
      }
    }
  }

  TEST_CASE("subsampled step uses exactly the subsample") {
    Gen g(2);
    const auto history = g.sample(make_threshold_concept(0.4, 0.2), 99);
    const SubsampledErmLearner learner{0.0, 1.0, FunctionClass::threshold()};
    const std::vector<Observation> picked{history[91], history[83], history[75]};
    CHECK(subsampled_erm_step(learner, history, 100) == erm(learner.cls, picked));
    CHECK(subsampled_erm_step(learner, std::span(history).first(1), 2) == erm(learner.cls, std::span(history).first(1)));
  }

  TEST_CASE("noiseless subsample error shrinks like an order statistic") {
    Gen g(3);
    const auto concept_law = make_threshold_concept(0.5, 0.0);
    const SubsampledErmLearner learner{0.0, 1.0, FunctionClass::threshold()};
    const long t = 5000;
    const auto w = schedule_km(t, 0.0, 1.0);
    const long n = w.m / w.k;
    double total = 0.0;
    const int runs = 2000;
    for (int i = 0; i < runs; ++i) {
      const auto history = g.sample(concept_law, static_cast<std::size_t>(t - 1));
      total += std::abs(std::get<ThresholdHypothesis>(subsampled_erm_step(learner, history, t)).theta - 0.5);
    }
    CHECK(total / runs <= 1.0 / double(n + 1));
  }

  TEST_CASE("adaptive window examples") {
    CHECK(adaptive_window(50, explicit_schedule(std::vector<double>(60, 0.0)), 1) == 49);
    std::vector<double> ones(20, 1.0);
    ones[0] = 0.0;
    const auto unit = explicit_schedule(ones);
    CHECK(adaptive_window(10, unit, 1) == 1);
    CHECK(scan_adaptive_window(10, unit, 1) == 1);

    const auto gamma = make_drift_schedule(DriftKind::Constant, 0.0, 0.01, 1000, 0);
    CHECK(scan_adaptive_window(900, gamma, 1) == 14);
    CHECK(adaptive_window(900, gamma, 1) == 14);
  }

  TEST_CASE("adaptive window equals an exhaustive scan") {
    Gen g(4);
    for (int i = 0; i < 300; ++i) {
      const auto s = make_drift_schedule(i % 2 ? DriftKind::PowerStep : DriftKind::TriangleWave, g.real(0, 0.9),
                                         std::nullopt, 400, static_cast<std::uint64_t>(i));
      const long t = g.integer(2, 400);
      const int d = static_cast<int>(g.integer(1, 4));
      REQUIRE(adaptive_window(t, s, d) == scan_adaptive_window(t, s, d));
    }
  }

  TEST_CASE("constant window sizes") {
    CHECK(constant_window_size(1, 0.001) == 100);
    CHECK(constant_window_size(1, 1.0) == 1);
    CHECK(constant_window_size(8, 0.008) == 50);
    CHECK_THROWS(constant_window_size(1, 0.0));
  }

  TEST_CASE("windowed learners agree with the subsampled rule") {
    Gen g(5);
    for (int i = 0; i < 1000; ++i) {
      const long t = g.integer(2, 300);
      const auto history = g.sample(g.threshold_concept(0.45), static_cast<std::size_t>(t - 1));
      const auto s = make_drift_schedule(DriftKind::PowerStep, g.real(0, 0.9), std::nullopt, 300, 0);
      const AdaptiveWindowLearner adaptive{FunctionClass::threshold(), std::make_shared<const DriftSchedule>(s)};
      const long mt = adaptive_window(t, s, 1);
      REQUIRE(adaptive_erm_step(adaptive, history, t) == subsampled_erm(adaptive.cls, history, t, {1, mt}));

      const ConstantWindowLearner constant{FunctionClass::threshold(), std::pow(10.0, g.real(-4, 0))};
      const long mbar = constant_window_size(1, constant.gamma);
      if (t > mbar) {
        REQUIRE(constant_window_step(constant, history, t) ==
                subsampled_erm(constant.cls, history, t, {1, std::min(mbar, t - 1)}));
      }
    }
  }

  TEST_CASE("adaptive learner uses full history without drift") {
    Gen g(6);
    const auto history = g.sample(make_threshold_concept(0.3, 0.0), 199);
    const AdaptiveWindowLearner learner{FunctionClass::threshold(),
                                        std::make_shared<const DriftSchedule>(explicit_schedule(std::vector<double>(200, 0.0)))};
    const auto h = adaptive_erm_step(learner, history, 200);
    CHECK(h == erm(learner.cls, history));
    CHECK(empirical_loss(learner.cls, h, history) == 0.0);
  }

  TEST_CASE("baselines and dispatch") {
    Gen g(7);
    const auto history = g.sample(make_threshold_concept(0.3, 0.1), 50);
    const BaselineLearner full{BaselineKind::FullHistoryErm, FunctionClass::threshold()};
    const BaselineLearner last{BaselineKind::LastPoint, FunctionClass::threshold()};
    CHECK(baseline_step(full, history, 51) == erm(full.cls, history));
    CHECK(baseline_step(last, history, 51) == erm(last.cls, std::span(history).last(1)));
    CHECK(learner_step(Learner{full}, history, 51) == baseline_step(full, history, 51));
    CHECK(learner_step(Learner{full}, {}, 1) == default_hypothesis(full.cls));
    CHECK(learner_name(Learner{last}) != learner_name(Learner{full}));
  }

  TEST_CASE("window plans") {
    const auto plan = window_plan(Learner{SubsampledErmLearner{0.0, 1.0, FunctionClass::threshold()}}, 100);
    REQUIRE(plan.size() == 100);
    CHECK(plan[0] == Window{0, 0});
    CHECK(plan[99] == Window{8, 27});
    const auto cplan = window_plan(Learner{ConstantWindowLearner{FunctionClass::threshold(), 0.001}}, 150);
    CHECK(cplan[100] == Window{1, 100});
    CHECK(cplan[99] == Window{0, 0});
    CHECK(cplan[149] == Window{1, 100});
  }

  TEST_CASE("learner steps are deterministic") {
    Gen g(8);
    const auto history = g.sample(make_threshold_concept(0.6, 0.2), 999);
    const Learner l = SubsampledErmLearner{0.25, 2.0, FunctionClass::threshold()};
    CHECK(learner_step(l, history, 1000) == learner_step(l, history, 1000));
  }
}

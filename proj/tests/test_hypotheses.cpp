#include "doctest.h"
#include "support.hpp"

using namespace driftlab;
using testing::Gen;

namespace {

double theta_of(const Hypothesis& h) { return std::get<ThresholdHypothesis>(h).theta; }

std::size_t exhaustive_table_erm(const FunctionClass& cls, std::span<const Observation> points) {
  const auto& t = cls.table();
  std::size_t best = 0;
  double best_loss = 1e300;
  for (long f = 0; f < t.values.rows(); ++f) {
    double total = 0.0;
    for (const auto& z : points)
      for (std::size_t j = 0; j < t.support.size(); ++j)
        if (t.support[j] == z) total += t.values(f, static_cast<long>(j));
    if (total < best_loss) {
      best_loss = total;
      best = static_cast<std::size_t>(f);
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("hypotheses") {
  TEST_CASE("threshold loss follows the closed-below convention") {
    const FunctionClass cls = FunctionClass::threshold();
    const Hypothesis h = ThresholdHypothesis{0.5};
    CHECK(loss(cls, h, {0.7, 1}) == 0.0);
    CHECK(loss(cls, h, {0.7, 0}) == 1.0);
    CHECK(loss(cls, h, {0.5, 1}) == 0.0);
    CHECK(loss(cls, h, {0.49, 1}) == 1.0);
  }

  TEST_CASE("realizable samples are fit exactly") {
    Gen g(1);
    const FunctionClass cls = FunctionClass::threshold();
    for (int i = 0; i < 200; ++i) {
      const auto pts = g.sample(make_threshold_concept(0.5, 0.0), static_cast<std::size_t>(g.integer(1, 40)));
      REQUIRE(empirical_loss(cls, erm(cls, pts), pts) == 0.0);
    }
  }

  TEST_CASE("inconsistent pair breaks ties toward zero") {
    const FunctionClass cls = FunctionClass::threshold();
    const std::vector<Observation> pts{{0.2, 1}, {0.8, 0}};
    const Hypothesis h = erm(cls, pts);
    CHECK(theta_of(h) == 0.0);
    CHECK(empirical_loss(cls, h, pts) == 1.0);
    CHECK(testing::grid_min_threshold_loss(pts, 1000) == 1.0);
  }

  TEST_CASE("threshold erm equals the lattice grid minimum") {
    Gen g(2);
    const FunctionClass cls = FunctionClass::threshold();
    for (int i = 0; i < 10000; ++i) {
      const auto n = static_cast<std::size_t>(g.integer(1, 12));
      const auto pts = g.lattice_sample(n, static_cast<int>(2 * n));
      const double got = empirical_loss(cls, erm(cls, pts), pts);
      REQUIRE(got == testing::grid_min_threshold_loss(pts, static_cast<int>(4 * n)));
    }
  }

  TEST_CASE("threshold erm is never beaten by the grid on continuous samples") {
    Gen g(3);
    const FunctionClass cls = FunctionClass::threshold();
    for (int i = 0; i < 3000; ++i) {
      const auto n = static_cast<std::size_t>(g.integer(1, 12));
      const auto pts = g.sample(g.threshold_concept(0.4), n);
      const double got = empirical_loss(cls, erm(cls, pts), pts);
      REQUIRE(got <= testing::grid_min_threshold_loss(pts, static_cast<int>(4 * n)));
      REQUIRE(got <= testing::grid_min_threshold_loss(pts, 1000));
      REQUIRE(erm(cls, pts) == erm(cls, pts));
    }
  }

  TEST_CASE("table erm equals exhaustive enumeration") {
    Gen g(4);
    for (int i = 0; i < 2000; ++i) {
      const auto sup = g.support(static_cast<int>(g.integer(1, 6)));
      const auto cls = g.table_class(sup, static_cast<int>(g.integer(1, 9)));
      std::vector<Observation> pts;
      const auto n = g.integer(1, 12);
      for (long j = 0; j < n; ++j) pts.push_back(sup[static_cast<std::size_t>(g.integer(0, static_cast<long>(sup.size()) - 1))]);
      REQUIRE(std::get<TableHypothesis>(erm(cls, pts)).index == exhaustive_table_erm(cls, pts));
    }
  }

  TEST_CASE("table class validation") {
    const std::vector<Observation> sup{{0.1, 0}, {0.2, 1}};
    CHECK_THROWS(FunctionClass::finite_explicit(sup, mat::Constant(2, 2, 1.5), 1));
    CHECK_THROWS(FunctionClass::finite_explicit({{0.1, 0}, {0.1, 0}}, mat::Zero(2, 2), 1));
    CHECK_THROWS(FunctionClass::finite_explicit(sup, mat::Zero(2, 2), 2));
    CHECK_THROWS(FunctionClass::finite_explicit(sup, mat::Zero(2, 3), 1));
    CHECK(FunctionClass::finite_explicit(sup, mat::Zero(4, 2), 2).dimension() == 2);
    CHECK(FunctionClass::threshold().dimension() == 1);
  }

  TEST_CASE("risk examples") {
    const FunctionClass cls = FunctionClass::threshold();
    const auto p = make_threshold_concept(0.5, 0.1);
    CHECK(risk(cls, ThresholdHypothesis{0.5}, p) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(risk(cls, ThresholdHypothesis{0.2}, p) == doctest::Approx(0.34).epsilon(1e-15));

    const std::vector<Observation> sup{{0.25, 0}, {0.75, 1}};
    mat values(1, 2);
    values << 0.0, 1.0;
    const auto table = FunctionClass::finite_explicit(sup, values, 1);
    const auto uniform = make_finite_support(sup, vec{{0.5, 0.5}});
    CHECK(risk(table, TableHypothesis{0}, uniform) == doctest::Approx(0.5));
    CHECK(inf_risk(table, uniform) == doctest::Approx(0.5));
    CHECK_THROWS(risk(table, TableHypothesis{0}, p));
  }

  TEST_CASE("threshold risk agrees with Monte Carlo") {
    Gen g(5);
    const FunctionClass cls = FunctionClass::threshold();
    const auto p = make_threshold_concept(0.5, 0.1);
    const int n = 1'000'000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += loss(cls, ThresholdHypothesis{0.2}, draw_observation(p, g.rng));
    const double mean = total / n;
    const double se = std::sqrt(0.34 * 0.66 / n);
    CHECK(std::abs(mean - 0.34) <= 3 * se);
  }

  TEST_CASE("inf risk examples") {
    const FunctionClass cls = FunctionClass::threshold();
    CHECK(inf_risk(cls, make_threshold_concept(0.3, 0.1)) == 0.1);
    CHECK(inf_risk(cls, make_threshold_concept(0.3, 0.0)) == 0.0);
    double grid = 1.0;
    for (int j = 0; j <= 1000; ++j) grid = std::min(grid, risk(cls, ThresholdHypothesis{j / 1000.0}, make_threshold_concept(0.3, 0.1)));
    CHECK(grid == doctest::Approx(0.1).epsilon(1e-12));
  }

  TEST_CASE("inf risk lower-bounds every hypothesis") {
    Gen g(6);
    const FunctionClass cls = FunctionClass::threshold();
    for (int i = 0; i < 2000; ++i) {
      if (i % 2 == 0) {
        const auto p = g.threshold_concept();
        REQUIRE(inf_risk(cls, p) <= risk(cls, ThresholdHypothesis{g.real(0, 1)}, p) + 1e-15);
      } else {
        const auto sup = g.support(static_cast<int>(g.integer(1, 6)));
        const auto p = g.finite(sup);
        const auto table = g.table_class(sup, 5);
        for (std::size_t f = 0; f < 5; ++f) REQUIRE(inf_risk(table, p) <= risk(table, TableHypothesis{f}, p) + 1e-15);
        REQUIRE(inf_risk(cls, p) <= risk(cls, ThresholdHypothesis{g.real(0, 1)}, p) + 1e-15);
        for (const auto& z : sup) REQUIRE(inf_risk(cls, p) <= risk(cls, ThresholdHypothesis{z.x}, p) + 1e-15);
      }
    }
  }

  TEST_CASE("threshold risk has slope 1 - 2 eta on both sides of the concept") {
    const FunctionClass cls = FunctionClass::threshold();
    for (double eta : {0.0, 0.1, 0.3}) {
      const auto p = make_threshold_concept(0.4, eta);
      for (int j = 0; j < 100; ++j) {
        const double a = j / 100.0, b = (j + 1) / 100.0;
        const double slope = (risk(cls, ThresholdHypothesis{b}, p) - risk(cls, ThresholdHypothesis{a}, p)) / (b - a);
        REQUIRE(std::abs(slope) == doctest::Approx(1 - 2 * eta).epsilon(1e-9));
        REQUIRE((slope < 0) == (b <= 0.4 + 1e-12));
      }
    }
  }

  TEST_CASE("class json round trip") {
    const std::vector<Observation> sup{{0.1, 0}, {0.2, 1}, {0.3, 1}};
    mat values(2, 3);
    values << 0.0, 0.5, 1.0, 1.0, 0.25, 0.0;
    const auto cls = FunctionClass::finite_explicit(sup, values, 1);
    const auto back = function_class_from_json(to_json(cls));
    CHECK(back.table().values == values);
    CHECK(back.table().support == sup);
    CHECK(function_class_from_json(to_json(FunctionClass::threshold())).is_threshold());
  }
}

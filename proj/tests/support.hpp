#pragma once

#include "driftlab/distributions.hpp"
#include "driftlab/hypotheses.hpp"
#include "driftlab/processes.hpp"
#include "driftlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace testing {

using namespace driftlab;

// Hand-rolled generators over a seeded stream.
struct Gen {
  Rng rng;
  explicit Gen(std::uint64_t seed, std::uint64_t stream = 0) : rng(make_rng(seed, stream)) {}

  double real(double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }
  long integer(long lo, long hi) {
    return lo + static_cast<long>(uniform01(rng) * static_cast<double>(hi - lo + 1));
  }
  bool coin(double p = 0.5) { return bernoulli(rng, p); }
  double lattice(int denominator) { return static_cast<double>(integer(0, denominator)) / denominator; }

  ThresholdConcept threshold_concept(double eta_max = 0.49) {
    return make_threshold_concept(uniform01(rng), real(0.0, eta_max));
  }

  std::vector<Observation> support(int size) {
    std::vector<Observation> s;
    for (int j = 0; j < size; ++j) s.push_back({(j + real(0.0, 0.9)) / size, coin() ? 1 : 0});
    return s;
  }

  FiniteSupport finite(const std::vector<Observation>& support) {
    vec probs(static_cast<long>(support.size()));
    for (long i = 0; i < probs.size(); ++i) probs(i) = coin(0.2) ? 0.0 : real(0.0, 1.0);
    if (probs.sum() <= 0.0) probs(0) = 1.0;
    probs /= probs.sum();
    return make_finite_support(support, probs);
  }

  FunctionClass table_class(const std::vector<Observation>& support, int functions) {
    mat values(functions, static_cast<long>(support.size()));
    for (long r = 0; r < values.rows(); ++r)
      for (long c = 0; c < values.cols(); ++c) values(r, c) = coin(0.5) ? static_cast<double>(integer(0, 1)) : real(0, 1);
    return FunctionClass::finite_explicit(support, values, 1);
  }

  std::vector<Observation> sample(const Marginal& p, std::size_t n) {
    std::vector<Observation> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(draw_observation(p, rng));
    return out;
  }

  std::vector<Observation> lattice_sample(std::size_t n, int denominator) {
    std::vector<Observation> out;
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({static_cast<double>(integer(0, denominator - 1)) / denominator, coin() ? 1 : 0});
    return out;
  }
};

// Minimum empirical threshold loss over theta in {0, 1/g, ..., 1}.
inline double grid_min_threshold_loss(std::span<const Observation> points, int g) {
  const FunctionClass cls = FunctionClass::threshold();
  double best = 1e300;
  for (int j = 0; j <= g; ++j) best = std::min(best, empirical_loss(cls, ThresholdHypothesis{double(j) / g}, points));
  return best;
}

}  // namespace testing

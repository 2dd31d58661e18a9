#pragma once

#include "driftlab/linalg.hpp"

#include <variant>
#include <vector>

namespace driftlab {

/// A data point z = (x, y) with x in [0,1] and y in {0,1}.
struct Observation {
  double x = 0.0;
  int y = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

bool is_valid(const Observation& z);

/// Uniform x on [0,1]; y = 1[x >= theta] flipped independently with probability eta.
struct ThresholdConcept {
  double theta = 0.5;
  double eta = 0.0;
};

/// Explicit law over an enumerated finite set of observations.
struct FiniteSupport {
  std::vector<Observation> support;
  vec probs;
};

/// The marginal law P_t of one data point.
using Marginal = std::variant<ThresholdConcept, FiniteSupport>;

ThresholdConcept make_threshold_concept(double theta, double eta);
FiniteSupport make_finite_support(std::vector<Observation> support, vec probs);

void validate(const Marginal& p);

/// P(y = 1) under the marginal.
double label_one_probability(const Marginal& p);

}  // namespace driftlab

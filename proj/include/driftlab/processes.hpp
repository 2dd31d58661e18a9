#pragma once

#include "driftlab/linalg.hpp"
#include "driftlab/marginal.hpp"
#include "driftlab/rng.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace driftlab {

enum class ProcessKind { Product, MarkovModulated };

/// A nonstationary process with exactly known marginals P_1..P_T.
///
/// Product: Z_t ~ P_t independently. MarkovModulated: a stationary hidden chain on
/// S states emits x uniformly from [s/S, (s+1)/S), and y is labelled by the drifting
/// threshold concept of P_t. The transition matrix must be doubly stochastic so the
/// x-marginal stays uniform.
class ProcessModel {
 public:
  static ProcessModel product(std::vector<Marginal> marginals);
  static ProcessModel markov_modulated(mat transition, std::vector<Marginal> marginals);

  ProcessKind kind() const { return kind_; }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const Marginal& marginal(std::size_t t) const { return marginals_.at(t - 1); }
  std::size_t horizon() const { return marginals_.size(); }

  int states() const { return static_cast<int>(transition_.rows()); }
  const mat& transition() const { return transition_; }
  const vec& stationary() const { return stationary_; }

 private:
  ProcessKind kind_ = ProcessKind::Product;
  std::vector<Marginal> marginals_;
  mat transition_;
  vec stationary_;
};

inline constexpr int kMaxStates = 16;

/// Stay with probability 1 - p, otherwise jump uniformly to one of the other S - 1 states.
mat flip_chain(int states, double flip);

/// One independent draw from p.
Observation draw_observation(const Marginal& p, Rng& rng);

struct SamplePath {
  std::vector<Observation> observations;
  /// Hidden state per step; -1 for product processes.
  std::vector<int> states;
};

SamplePath sample_path(const ProcessModel& model, std::size_t horizon, std::uint64_t seed);

/// Exact beta_k of the hidden chain: sum_s pi(s) ||P^k(s,.) - pi||_TV. Zero for product processes.
double beta_coefficient(const ProcessModel& model, int k);

struct MixingProfile {
  double r = 1.0;
  std::vector<double> beta;  // beta[k-1] = beta_k
  double bound_constant = 0.0;
};

inline constexpr int kDefaultMaxLag = 64;

MixingProfile mixing_profile(const ProcessModel& model, double r, int max_lag = kDefaultMaxLag);
MixingProfile mixing_profile(std::vector<double> beta, double r);

struct MixingReport {
  double r = 1.0;
  double bound_constant = 0.0;
  int worst_k = 1;
  bool violation = false;
};

/// Smallest C with beta_k <= C k^-r over the computed lags. A violation is flagged
/// when C exceeds `cap` or when beta_k k^r peaks at the last lag while still increasing.
MixingReport verify_mixing_rate(const MixingProfile& profile, double cap = 1e6);

nlohmann::json to_json(const ProcessModel& model);
ProcessModel process_model_from_json(const nlohmann::json& j);

/// CSV with columns t,x,y,state.
void write_path_csv(std::ostream& out, const SamplePath& path);

}  // namespace driftlab

#pragma once

#include "driftlab/hypotheses.hpp"
#include "driftlab/learners.hpp"
#include "driftlab/linalg.hpp"
#include "driftlab/processes.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftlab {

/// Per-step exact conditional risks risk(f_t, P_t) for each replicate, against the
/// exact benchmark inf_f risk(f, P_t).
struct RegretCurve {
  long horizon = 0;
  std::vector<std::uint64_t> seeds;
  mat risks;      // replicates x horizon
  vec benchmark;  // horizon
  std::vector<Window> windows;

  long replicates() const { return risks.rows(); }
  mat excess() const { return risks.rowwise() - benchmark.transpose(); }
  /// Running sums of the per-step excess, replicates x horizon.
  mat cumulative_excess() const;
  vec mean_risk() const { return risks.colwise().mean().transpose(); }
  vec mean_cumulative_excess() const { return cumulative_excess().colwise().mean().transpose(); }
  /// Standard error of the replicate mean of the cumulative excess (0 with one replicate).
  vec cumulative_excess_se() const;

  RegretCurve replicate(long i) const;
};

struct ExperimentOptions {
  unsigned jobs = 1;
  /// Called after replicate `r` finishes step t, for every power of two t.
  std::function<void(long replicate, long t, std::span<const double> risks)> on_checkpoint;
};

RegretCurve run_experiment(const ProcessModel& model, const Learner& learner, long horizon,
                           const std::vector<std::uint64_t>& seeds, const ExperimentOptions& options = {});

/// alpha + (1 - alpha)(3 + 3r)/(3 + 4r).
double theoretical_exponent(double alpha, double r);

/// round(2^(lo + j / per_octave)) for j = 0..(hi - lo) per_octave, deduplicated.
std::vector<long> geometric_checkpoints(double lo_exponent, double hi_exponent, int per_octave);

/// The upper half (by count) of a checkpoint grid.
std::vector<long> tail_half(std::span<const long> checkpoints);

inline constexpr std::size_t kMinFitPoints = 8;

struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;
  long t_min = 0;
  long t_max = 0;
  std::size_t points = 0;
  double residual_norm = 0.0;
  std::optional<double> theoretical;
};

/// Thrown when a checkpoint carries non-positive cumulative excess.
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least squares line through (log T, log value).
RateFit fit_growth_exponent(std::span<const long> checkpoints, std::span<const double> values,
                            std::optional<double> theoretical = std::nullopt);

/// Fits the mean cumulative excess of `curve` at the checkpoints.
RateFit fit_growth_exponent(const RegretCurve& curve, std::span<const long> checkpoints,
                            std::optional<double> theoretical = std::nullopt);

struct BlockingReport {
  double tv_gap = 0.0;
  double bound = 0.0;
  double slack = 0.0;
};

inline constexpr int kBlockingMaxStates = 4;
inline constexpr int kBlockingMaxBlocks = 4;
inline constexpr int kBlockingMaxLag = 8;

/// Exact TV between the joint law of the hidden states at t, t+k, ..., t+(n-1)k and the
/// product of their marginals, against (n - 1) beta_k.
BlockingReport verify_blocking(const ProcessModel& model, long t, int n, int k);

/// sup_f |(1/m) Sum_i (f(z_i) - E_{P_i} f)| computed exactly for one sample.
/// `marginals` holds either one law shared by all points or one law per point.
double sup_deviation(const FunctionClass& cls, std::span<const Observation> sample,
                     std::span<const Marginal> marginals);

struct UniformDeviationReport {
  std::vector<long> ms;
  std::vector<double> means;
  std::vector<double> std_errors;
  /// means / sqrt(d / m)
  std::vector<double> ratios;
  double exponent = 0.0;
  double intercept = 0.0;
  double envelope = 0.0;
  int trials = 0;
};

UniformDeviationReport verify_uniform_deviation(const FunctionClass& cls, std::span<const Marginal> marginals,
                                                std::span<const long> m_grid, int trials, std::uint64_t seed);

/// CSV columns t,mean_risk,inf_risk,cum_excess,ci_lo,ci_hi; `preamble` lines are
/// written first as '#' comments.
void write_curve_csv(std::ostream& out, const RegretCurve& curve, const std::vector<std::string>& preamble = {});

/// Reads (t, cum_excess) back from a curve CSV; '#' lines are skipped.
struct CurveTable {
  std::vector<long> t;
  std::vector<double> cum_excess;
};
CurveTable read_curve_csv(std::istream& in);

}  // namespace driftlab

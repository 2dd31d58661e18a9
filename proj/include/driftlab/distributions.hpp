#pragma once

#include "driftlab/hypotheses.hpp"
#include "driftlab/marginal.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace driftlab {

enum class DriftKind { TriangleWave, PowerStep, Constant };

std::string to_string(DriftKind kind);
DriftKind drift_kind_from_string(const std::string& name);

/// The drift magnitudes Delta_1..Delta_T, stored explicitly and indexed from t = 1.
///
/// `directions[t-1]` is the intended sign of the concept move at step t; paths
/// built from the schedule still reflect at 0 and 1.
struct DriftSchedule {
  DriftKind kind = DriftKind::PowerStep;
  double alpha = 0.0;
  std::optional<double> gamma;
  double growth_constant = 0.0;
  std::vector<double> deltas;
  std::vector<int> directions;

  std::size_t horizon() const { return deltas.size(); }
  double delta(std::size_t t) const { return deltas.at(t - 1); }
  /// Sum_{i <= t} Delta_i, with prefix(0) = 0.
  double prefix(std::size_t t) const { return prefix_.at(t); }

  void finalize();

 private:
  std::vector<double> prefix_;
};

struct DriftOptions {
  double c0 = 1.0;
  /// Triangle-wave leg length, in accumulated Delta units.
  double leg = 0.25;
};

DriftSchedule make_drift_schedule(DriftKind kind, double alpha, std::optional<double> gamma,
                                  std::size_t horizon, std::uint64_t seed, const DriftOptions& options = {});

/// Smallest C with sum_{t<=T} Delta_t <= C T^alpha over the whole horizon.
double empirical_growth_constant(const DriftSchedule& schedule);

/// Threshold marginals whose concept moves Delta_t / (1 - 2 eta) per step, reflecting at 0 and 1.
std::vector<Marginal> concept_path(const DriftSchedule& schedule, double eta, double theta0);

double tv_distance(const Marginal& p, const Marginal& q);

/// sup_f |E_p f - E_q f| over the class.
double discrepancy(const Marginal& p, const Marginal& q, const FunctionClass& cls);

/// {"kind", "alpha", "deltas", "thetas", "eta"}; the last two only when a path is supplied.
nlohmann::json to_json(const DriftSchedule& schedule, const std::vector<Marginal>* path = nullptr);
DriftSchedule drift_schedule_from_json(const nlohmann::json& j);

}  // namespace driftlab

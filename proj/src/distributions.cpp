#include "driftlab/distributions.hpp"

#include "driftlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftlab {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

const ThresholdConcept* as_threshold(const Marginal& p) { return std::get_if<ThresholdConcept>(&p); }
const FiniteSupport* as_finite(const Marginal& p) { return std::get_if<FiniteSupport>(&p); }

double conditional_label_one(const ThresholdConcept& c, double x) {
  return x >= c.theta ? 1.0 - c.eta : c.eta;
}

// Probability vector of q re-indexed onto p's support.
vec align_onto(const FiniteSupport& p, const FiniteSupport& q) {
  if (p.support.size() != q.support.size())
    throw std::invalid_argument("finite-support marginals have different supports");
  vec aligned(static_cast<long>(p.support.size()));
  for (std::size_t i = 0; i < p.support.size(); ++i) {
    auto it = std::find(q.support.begin(), q.support.end(), p.support[i]);
    if (it == q.support.end()) throw std::invalid_argument("finite-support marginals have different supports");
    aligned(static_cast<long>(i)) = q.probs(it - q.support.begin());
  }
  return aligned;
}

}  // namespace

bool is_valid(const Observation& z) {
  return z.x >= 0.0 && z.x <= 1.0 && (z.y == 0 || z.y == 1);
}

ThresholdConcept make_threshold_concept(double theta, double eta) {
  ThresholdConcept c{theta, eta};
  validate(c);
  return c;
}

FiniteSupport make_finite_support(std::vector<Observation> support, vec probs) {
  FiniteSupport f{std::move(support), std::move(probs)};
  validate(f);
  return f;
}

void validate(const Marginal& p) {
  if (const auto* c = as_threshold(p)) {
    if (!(c->theta >= 0.0 && c->theta <= 1.0)) throw std::invalid_argument("threshold concept: theta outside [0,1]");
    if (!(c->eta >= 0.0 && c->eta < 0.5)) throw std::invalid_argument("threshold concept: eta outside [0, 1/2)");
    return;
  }
  const auto& f = std::get<FiniteSupport>(p);
  if (static_cast<long>(f.support.size()) != f.probs.size())
    throw std::invalid_argument("finite support: probability vector length mismatch");
  if (!is_probability_vector(f.probs, kProbabilityTolerance))
    throw std::invalid_argument("finite support: probabilities must be non-negative and sum to 1");
  for (const auto& z : f.support)
    if (!is_valid(z)) throw std::invalid_argument("finite support: observation outside [0,1] x {0,1}");
}

double label_one_probability(const Marginal& p) {
  if (const auto* c = as_threshold(p)) return c->eta * c->theta + (1.0 - c->eta) * (1.0 - c->theta);
  const auto& f = std::get<FiniteSupport>(p);
  double total = 0.0;
  for (std::size_t i = 0; i < f.support.size(); ++i)
    if (f.support[i].y == 1) total += f.probs(static_cast<long>(i));
  return total;
}

std::string to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::TriangleWave: return "triangle_wave";
    case DriftKind::PowerStep: return "power_step";
    case DriftKind::Constant: return "constant";
  }
  return "unknown";
}

DriftKind drift_kind_from_string(const std::string& name) {
  if (name == "triangle_wave") return DriftKind::TriangleWave;
  if (name == "power_step") return DriftKind::PowerStep;
  if (name == "constant") return DriftKind::Constant;
  throw std::invalid_argument("unknown drift kind '" + name + "'");
}

void DriftSchedule::finalize() {
  prefix_.assign(deltas.size() + 1, 0.0);
  for (std::size_t t = 1; t <= deltas.size(); ++t) prefix_[t] = prefix_[t - 1] + deltas[t - 1];
}

double empirical_growth_constant(const DriftSchedule& schedule) {
  double c = 0.0;
  for (std::size_t t = 1; t <= schedule.horizon(); ++t)
    c = std::max(c, schedule.prefix(t) / std::pow(static_cast<double>(t), schedule.alpha));
  return c;
}

DriftSchedule make_drift_schedule(DriftKind kind, double alpha, std::optional<double> gamma,
                                  std::size_t horizon, std::uint64_t seed, const DriftOptions& options) {
  if (horizon < 1) throw std::invalid_argument("drift schedule: horizon must be >= 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("drift schedule: alpha must lie in [0,1)");
  if (kind == DriftKind::Constant && !gamma)
    throw std::invalid_argument("drift schedule: gamma is required for the constant kind");
  if (gamma && !(*gamma > 0.0 && *gamma < 1.0))
    throw std::invalid_argument("drift schedule: gamma must lie in (0,1)");
  if (!(options.c0 > 0.0)) throw std::invalid_argument("drift schedule: c0 must be positive");

  DriftSchedule s;
  s.kind = kind;
  s.alpha = alpha;
  s.gamma = gamma;
  s.deltas.assign(horizon, 0.0);
  s.directions.assign(horizon, 1);

  for (std::size_t t = 2; t <= horizon; ++t) {
    s.deltas[t - 1] = kind == DriftKind::Constant
                          ? *gamma
                          : std::min(1.0, options.c0 * std::pow(static_cast<double>(t), alpha - 1.0));
  }

  if (kind == DriftKind::TriangleWave) {
    if (!(options.leg > 0.0)) throw std::invalid_argument("drift schedule: triangle leg must be positive");
    Rng rng = make_rng(seed, 0x7472);
    int sign = (rng() & 1) ? 1 : -1;
    double travelled = 0.0;
    for (std::size_t t = 2; t <= horizon; ++t) {
      s.directions[t - 1] = sign;
      travelled += s.deltas[t - 1];
      if (travelled >= options.leg) {
        sign = -sign;
        travelled = 0.0;
      }
    }
  }

  s.finalize();
  const double measured = empirical_growth_constant(s);
  // sum_{t=2}^T c0 t^(alpha-1) <= c0 (T^alpha - 1) / alpha
  if (kind != DriftKind::Constant && alpha > 0.0)
    s.growth_constant = std::max(options.c0 / alpha, measured);
  else
    s.growth_constant = measured;
  return s;
}

std::vector<Marginal> concept_path(const DriftSchedule& schedule, double eta, double theta0) {
  if (!(theta0 >= 0.0 && theta0 <= 1.0)) throw std::invalid_argument("concept path: theta0 outside [0,1]");
  if (!(eta >= 0.0 && eta < 0.5)) throw std::invalid_argument("concept path: eta outside [0, 1/2)");
  const double scale = 1.0 - 2.0 * eta;
  std::vector<Marginal> path;
  path.reserve(schedule.horizon());
  double theta = theta0;
  int orientation = 1;
  path.emplace_back(ThresholdConcept{theta, eta});
  for (std::size_t t = 2; t <= schedule.horizon(); ++t) {
    const double step = schedule.delta(t) / scale;
    if (step > 1.0) throw std::invalid_argument("concept path: drift step exceeds 1 for this eta");
    theta += orientation * schedule.directions[t - 1] * step;
    if (theta > 1.0) {
      theta = 2.0 - theta;
      orientation = -orientation;
    } else if (theta < 0.0) {
      theta = -theta;
      orientation = -orientation;
    }
    path.emplace_back(ThresholdConcept{theta, eta});
  }
  return path;
}

double tv_distance(const Marginal& p, const Marginal& q) {
  if (const auto* a = as_threshold(p)) {
    const auto* b = as_threshold(q);
    if (!b) throw std::invalid_argument("tv_distance: mismatched families");
    // The joint densities differ only through P(y=1|x), which is piecewise constant
    // with breaks at the two concepts.
    const double lo = std::min(a->theta, b->theta);
    const double hi = std::max(a->theta, b->theta);
    const double cuts[4] = {0.0, lo, hi, 1.0};
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double len = cuts[i + 1] - cuts[i];
      if (len <= 0.0) continue;
      const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
      total += len * std::abs(conditional_label_one(*a, mid) - conditional_label_one(*b, mid));
    }
    return total;
  }
  const auto* b = as_finite(q);
  if (!b) throw std::invalid_argument("tv_distance: mismatched families");
  const auto& a = std::get<FiniteSupport>(p);
  return half_l1(a.probs, align_onto(a, *b));
}

double discrepancy(const Marginal& p, const Marginal& q, const FunctionClass& cls) {
  if (const auto* a = as_threshold(p)) {
    const auto* b = as_threshold(q);
    if (!b) throw std::invalid_argument("discrepancy: mismatched families");
    if (!cls.is_threshold()) throw std::invalid_argument("discrepancy: finite classes have no risk under threshold concepts");
    // Both risks are piecewise linear in theta with kinks at the concepts.
    double best = 0.0;
    for (double theta : {0.0, a->theta, b->theta, 1.0}) {
      const Hypothesis h = ThresholdHypothesis{theta};
      best = std::max(best, std::abs(risk(cls, h, p) - risk(cls, h, q)));
    }
    return best;
  }
  const auto* b = as_finite(q);
  if (!b) throw std::invalid_argument("discrepancy: mismatched families");
  const auto& a = std::get<FiniteSupport>(p);
  const vec signed_mass = a.probs - align_onto(a, *b);

  if (cls.is_threshold()) {
    std::vector<Observation> points = a.support;
    std::vector<double> weights(signed_mass.data(), signed_mass.data() + signed_mass.size());
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return points[i].x < points[j].x; });
    std::vector<double> xs, ws;
    std::vector<int> ys;
    for (std::size_t i : order) {
      xs.push_back(points[i].x);
      ys.push_back(points[i].y);
      ws.push_back(weights[i]);
    }
    const auto sweep = detail::threshold_sweep(xs, ys, ws);
    double best = 0.0;
    for (double l : sweep.losses) best = std::max(best, std::abs(l));
    return best;
  }

  const TableClass& table = cls.table();
  vec aligned = vec::Zero(static_cast<long>(table.support.size()));
  for (std::size_t i = 0; i < a.support.size(); ++i) {
    auto it = std::find(table.support.begin(), table.support.end(), a.support[i]);
    if (it == table.support.end()) throw std::invalid_argument("discrepancy: marginal support outside the class support");
    aligned(it - table.support.begin()) += signed_mass(static_cast<long>(i));
  }
  return (table.values * aligned).cwiseAbs().maxCoeff();
}

nlohmann::json to_json(const DriftSchedule& schedule, const std::vector<Marginal>* path) {
  nlohmann::json j;
  j["kind"] = to_string(schedule.kind);
  j["alpha"] = schedule.alpha;
  j["gamma"] = schedule.gamma ? nlohmann::json(*schedule.gamma) : nlohmann::json(nullptr);
  j["growth_constant"] = schedule.growth_constant;
  j["deltas"] = schedule.deltas;
  j["directions"] = schedule.directions;
  if (path) {
    std::vector<double> thetas;
    double eta = 0.0;
    for (const auto& m : *path) {
      const auto* c = as_threshold(m);
      if (!c) throw std::invalid_argument("to_json: only threshold concept paths serialize thetas");
      thetas.push_back(c->theta);
      eta = c->eta;
    }
    j["thetas"] = thetas;
    j["eta"] = eta;
  }
  return j;
}

DriftSchedule drift_schedule_from_json(const nlohmann::json& j) {
  DriftSchedule s;
  s.kind = drift_kind_from_string(j.at("kind").get<std::string>());
  s.alpha = j.at("alpha").get<double>();
  if (j.contains("gamma") && !j["gamma"].is_null()) s.gamma = j["gamma"].get<double>();
  s.deltas = j.at("deltas").get<std::vector<double>>();
  if (s.deltas.empty()) throw std::invalid_argument("deltas: empty schedule");
  if (j.contains("directions")) s.directions = j["directions"].get<std::vector<int>>();
  else s.directions.assign(s.deltas.size(), 1);
  if (s.directions.size() != s.deltas.size()) throw std::invalid_argument("directions: length mismatch");
  if (s.deltas.front() != 0.0) throw std::invalid_argument("deltas: Delta_1 must be 0");
  for (double d : s.deltas)
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("deltas: values must lie in [0,1]");
  s.finalize();
  s.growth_constant = j.contains("growth_constant") ? j["growth_constant"].get<double>() : empirical_growth_constant(s);
  return s;
}

}  // namespace driftlab

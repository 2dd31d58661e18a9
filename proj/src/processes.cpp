#include "driftlab/processes.hpp"

#include "driftlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace driftlab {

namespace {

void validate_marginals(const std::vector<Marginal>& marginals) {
  if (marginals.empty()) throw std::invalid_argument("process: empty marginal path");
  for (const auto& m : marginals) validate(m);
}

}  // namespace

Observation draw_observation(const Marginal& p, Rng& rng) {
  if (const auto* c = std::get_if<ThresholdConcept>(&p)) {
    const double x = uniform01(rng);
    const int clean = x >= c->theta ? 1 : 0;
    const int y = bernoulli(rng, c->eta) ? 1 - clean : clean;
    return {x, y};
  }
  const auto& f = std::get<FiniteSupport>(p);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.support.size(); ++i) {
    acc += f.probs(static_cast<long>(i));
    if (u < acc) return f.support[i];
  }
  return f.support.back();
}

namespace {

int draw_state(const vec& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (long s = 0; s < probs.size(); ++s) {
    acc += probs(s);
    if (u < acc) return static_cast<int>(s);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

ProcessModel ProcessModel::product(std::vector<Marginal> marginals) {
  validate_marginals(marginals);
  ProcessModel m;
  m.kind_ = ProcessKind::Product;
  m.marginals_ = std::move(marginals);
  return m;
}

ProcessModel ProcessModel::markov_modulated(mat transition, std::vector<Marginal> marginals) {
  validate_marginals(marginals);
  for (const auto& p : marginals)
    if (!std::holds_alternative<ThresholdConcept>(p))
      throw std::invalid_argument("markov-modulated process: marginals must be threshold concepts");
  const long s = transition.rows();
  if (s < 2 || s > kMaxStates) throw std::invalid_argument("markov-modulated process: state count must lie in [2, 16]");
  if (!is_row_stochastic(transition)) throw std::invalid_argument("transition: rows must be non-negative and sum to 1");
  if (!is_primitive(transition)) throw std::invalid_argument("transition: chain must be irreducible and aperiodic");
  vec pi = stationary_distribution(transition);
  if ((pi.array() - 1.0 / static_cast<double>(s)).abs().maxCoeff() > 1e-12)
    throw std::invalid_argument("transition: stationary law must be uniform (doubly stochastic) to keep x uniform");
  ProcessModel m;
  m.kind_ = ProcessKind::MarkovModulated;
  m.marginals_ = std::move(marginals);
  m.transition_ = std::move(transition);
  m.stationary_ = std::move(pi);
  return m;
}

mat flip_chain(int states, double flip) {
  if (states < 2 || states > kMaxStates) throw std::invalid_argument("flip chain: state count must lie in [2, 16]");
  if (!(flip > 0.0 && flip < 1.0)) throw std::invalid_argument("flip chain: flip probability must lie in (0,1)");
  mat P = mat::Constant(states, states, flip / (states - 1));
  P.diagonal().setConstant(1.0 - flip);
  return P;
}

SamplePath sample_path(const ProcessModel& model, std::size_t horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("sample_path: horizon must be >= 1");
  if (horizon > model.horizon()) throw std::invalid_argument("sample_path: horizon exceeds the marginal path");
  Rng rng = make_rng(seed, 0x70617468);
  SamplePath path;
  path.observations.reserve(horizon);
  path.states.reserve(horizon);

  if (model.kind() == ProcessKind::Product) {
    for (std::size_t t = 1; t <= horizon; ++t) {
      path.observations.push_back(draw_observation(model.marginal(t), rng));
      path.states.push_back(-1);
    }
    return path;
  }

  const mat& P = model.transition();
  const double width = 1.0 / model.states();
  int state = draw_state(model.stationary(), rng);
  for (std::size_t t = 1; t <= horizon; ++t) {
    if (t > 1) state = draw_state(P.row(state).transpose(), rng);
    const auto& c = std::get<ThresholdConcept>(model.marginal(t));
    const double x = std::min((state + uniform01(rng)) * width, std::nextafter(1.0, 0.0));
    const int clean = x >= c.theta ? 1 : 0;
    const int y = bernoulli(rng, c.eta) ? 1 - clean : clean;
    path.observations.push_back({x, y});
    path.states.push_back(state);
  }
  return path;
}

double beta_coefficient(const ProcessModel& model, int k) {
  if (k < 1) throw std::invalid_argument("beta_coefficient: k must be >= 1");
  if (model.kind() == ProcessKind::Product) return 0.0;
  const vec& pi = model.stationary();
  const mat Pk = matrix_power(model.transition(), k);
  double beta = 0.0;
  for (long s = 0; s < Pk.rows(); ++s) beta += pi(s) * half_l1(Pk.row(s).transpose(), pi);
  return std::clamp(beta, 0.0, 1.0);
}

MixingProfile mixing_profile(const ProcessModel& model, double r, int max_lag) {
  if (max_lag < 1) throw std::invalid_argument("mixing_profile: max_lag must be >= 1");
  std::vector<double> beta;
  beta.reserve(static_cast<std::size_t>(max_lag));
  for (int k = 1; k <= max_lag; ++k) beta.push_back(beta_coefficient(model, k));
  return mixing_profile(std::move(beta), r);
}

MixingProfile mixing_profile(std::vector<double> beta, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("mixing_profile: r must be positive");
  if (beta.empty()) throw std::invalid_argument("mixing_profile: empty beta sequence");
  MixingProfile profile{r, std::move(beta), 0.0};
  for (std::size_t i = 0; i < profile.beta.size(); ++i)
    profile.bound_constant =
        std::max(profile.bound_constant, profile.beta[i] * std::pow(static_cast<double>(i + 1), r));
  return profile;
}

MixingReport verify_mixing_rate(const MixingProfile& profile, double cap) {
  MixingReport report;
  report.r = profile.r;
  const std::size_t n = profile.beta.size();
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = profile.beta[i] * std::pow(static_cast<double>(i + 1), profile.r);
  const auto worst = std::max_element(scaled.begin(), scaled.end());
  report.bound_constant = *worst;
  report.worst_k = static_cast<int>(worst - scaled.begin()) + 1;
  const bool unbounded = n >= 2 && report.worst_k == static_cast<int>(n) && scaled[n - 1] > scaled[n - 2];
  report.violation = report.bound_constant > cap || unbounded;
  return report;
}

nlohmann::json to_json(const ProcessModel& model) {
  nlohmann::json j;
  j["kind"] = model.kind() == ProcessKind::Product ? "product" : "markov_modulated";
  std::vector<double> thetas;
  double eta = 0.0;
  bool threshold_path = true;
  for (const auto& m : model.marginals()) {
    if (const auto* c = std::get_if<ThresholdConcept>(&m)) {
      thetas.push_back(c->theta);
      eta = c->eta;
    } else {
      threshold_path = false;
    }
  }
  if (!threshold_path) throw std::invalid_argument("to_json: only threshold concept paths are serializable");
  j["thetas"] = thetas;
  j["eta"] = eta;
  if (model.kind() == ProcessKind::MarkovModulated) {
    nlohmann::json rows = nlohmann::json::array();
    for (long r = 0; r < model.transition().rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(model.transition().cols()));
      for (long c = 0; c < model.transition().cols(); ++c) row[static_cast<std::size_t>(c)] = model.transition()(r, c);
      rows.push_back(row);
    }
    j["transition"] = rows;
    j["emission"] = "uniform_subinterval";
  } else {
    j["transition"] = nullptr;
    j["emission"] = nullptr;
  }
  return j;
}

ProcessModel process_model_from_json(const nlohmann::json& j) {
  const auto thetas = j.at("thetas").get<std::vector<double>>();
  const double eta = j.at("eta").get<double>();
  std::vector<Marginal> marginals;
  marginals.reserve(thetas.size());
  for (double theta : thetas) marginals.emplace_back(make_threshold_concept(theta, eta));
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "product") return ProcessModel::product(std::move(marginals));
  if (kind != "markov_modulated") throw std::invalid_argument("kind: expected 'product' or 'markov_modulated'");
  if (j.value("emission", std::string("uniform_subinterval")) != "uniform_subinterval")
    throw std::invalid_argument("emission: only 'uniform_subinterval' is supported");
  const auto& rows = j.at("transition");
  mat P(static_cast<long>(rows.size()), static_cast<long>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.size()) throw std::invalid_argument("transition: matrix must be square");
    for (std::size_t c = 0; c < rows.size(); ++c) P(static_cast<long>(r), static_cast<long>(c)) = rows[r][c].get<double>();
  }
  return ProcessModel::markov_modulated(std::move(P), std::move(marginals));
}

void write_path_csv(std::ostream& out, const SamplePath& path) {
  out << "t,x,y,state\n";
  char buf[96];
  for (std::size_t i = 0; i < path.observations.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%d\n", i + 1, path.observations[i].x, path.observations[i].y,
                  path.states[i]);
    out << buf;
  }
}

}  // namespace driftlab

#include "selfnet/stability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace selfnet {

double StabilityBounds::steady_state_bound() const {
  if (rho_max >= 1.0) return std::numeric_limits<double>::infinity();
  return mu * mu * kappa / (1.0 - rho_max * rho_max);
}

StabilityBounds compute_bounds(const DataModel& model, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  StabilityBounds b;
  b.mu = mu;
  b.rho_max = 0.0;
  b.rho_min = std::numeric_limits<double>::infinity();
  b.beta = std::numeric_limits<double>::infinity();
  double lambda_max = 0.0;
  for (int k = 0; k < model.n_agents(); ++k) {
    const Matrix& r = model.covariance(k);
    Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
    for (double lam : es.eigenvalues()) {
      const double rho = std::abs(1.0 - mu * lam);
      b.rho_max = std::max(b.rho_max, rho);
      b.rho_min = std::min(b.rho_min, rho);
    }
    b.beta = std::min(b.beta, es.eigenvalues().minCoeff());
    lambda_max = std::max(lambda_max, es.eigenvalues().maxCoeff());
    b.kappa = std::max(b.kappa, (r * r).trace() * model.noise_var(k));
  }
  b.mu_max = 2.0 / lambda_max;
  return b;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::far_field: return "FarField";
    case Regime::near_field: return "NearField";
    case Regime::middle_field: return "MiddleField";
  }
  return "?";
}

double RegimeVerdict::empirical_prob() const {
  switch (regime) {
    case Regime::far_field: return far_prob;
    case Regime::near_field: return near_prob;
    case Regime::middle_field: break;
  }
  return std::max(far_prob, near_prob);
}

RegimeVerdict classify_regime(const std::vector<double>& werr, double c, double chi,
                              const StabilityBounds& bounds, double eps, double phi) {
  if (werr.empty()) throw std::invalid_argument("classify_regime: empty sample");
  if (!(phi > 0.0 && phi <= 1.0)) throw std::invalid_argument("phi must lie in (0,1]");
  RegimeVerdict v;
  v.phi = phi;
  v.far_threshold = c * chi / (bounds.rho_min * bounds.rho_min * eps);
  v.near_threshold = c * chi / (bounds.rho_max * bounds.rho_max);
  std::size_t above = 0, below = 0;
  for (double x : werr) {
    if (x > v.far_threshold) ++above;
    if (x < v.near_threshold) ++below;
  }
  v.far_prob = static_cast<double>(above) / werr.size();
  v.near_prob = static_cast<double>(below) / werr.size();
  if (v.far_prob > phi) {
    v.regime = Regime::far_field;
  } else if (v.near_prob > phi) {
    v.regime = Regime::near_field;
  }
  return v;
}

double CoopRateBound::bound(double c) const {
  if (!(c > 0.0)) return 1.0;
  return std::min(c_o / c, 1.0);
}

std::vector<double> steady_state_werr(const std::vector<IterationRecord>& records,
                                      int window_begin) {
  if (records.empty() || window_begin < 0 ||
      window_begin >= static_cast<int>(records.size())) {
    throw std::invalid_argument("steady-state window is empty");
  }
  std::vector<double> mean(records.front().werr.size(), 0.0);
  for (std::size_t i = static_cast<std::size_t>(window_begin); i < records.size(); ++i) {
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += records[i].werr[k];
  }
  const double len = static_cast<double>(records.size()) - window_begin;
  for (double& m : mean) m /= len;
  return mean;
}

CoopRateBound cooperation_bound(const std::vector<IterationRecord>& records, int window_begin,
                                const StabilityBounds& bounds, double chi_min, double mu,
                                int min_window) {
  const int len = static_cast<int>(records.size()) - window_begin;
  if (len < min_window) {
    throw std::invalid_argument("steady-state window shorter than " + std::to_string(min_window) +
                                " iterations");
  }
  const std::vector<double> mean = steady_state_werr(records, window_begin);
  CoopRateBound b;
  b.eta = *std::max_element(mean.begin(), mean.end()) / mu;
  b.c_o = b.eta * mu * bounds.rho_max * bounds.rho_max / chi_min;
  return b;
}

double steady_state_mean(const std::vector<IterationRecord>& records, int window_begin,
                         double IterationRecord::*field) {
  if (window_begin < 0 || window_begin >= static_cast<int>(records.size())) {
    throw std::invalid_argument("steady-state window is empty");
  }
  double sum = 0.0;
  for (std::size_t i = static_cast<std::size_t>(window_begin); i < records.size(); ++i) {
    sum += records[i].*field;
  }
  return sum / (static_cast<double>(records.size()) - window_begin);
}

PublicCostReport public_cost_bounds(const RunResult& reputation, const RunResult& cooperative,
                                    const DataModel& model, const PairingStats& stats,
                                    const StabilityBounds& bounds, const CoopRateBound& coop,
                                    double c) {
  if (reputation.records.empty() || cooperative.records.empty()) {
    throw std::invalid_argument("public_cost_bounds: missing companion run");
  }
  const int n = model.n_agents();
  double noise = 0.0, pair_mass = 0.0;
  for (int k = 0; k < n; ++k) {
    noise += model.noise_var(k);
    pair_mass += 1.0 - stats.self_prob(k);
  }
  PublicCostReport r;
  r.c = c;
  r.eta = coop.eta;
  r.c_o = coop.c_o;
  r.jpub_reputation =
      steady_state_mean(reputation.records, reputation.window_begin, &IterationRecord::jpub);
  r.jpub_cooperative =
      steady_state_mean(cooperative.records, cooperative.window_begin, &IterationRecord::jpub);
  r.msd_coop = steady_state_mean(cooperative.records, cooperative.window_begin, &IterationRecord::msd);
  r.upper_bound = n * coop.eta * bounds.mu + noise + coop.c_o * pair_mass;
  r.coop_lower_bound = n * bounds.beta * r.msd_coop + noise + c * pair_mass;
  r.crossover = pair_mass > 0.0
                    ? coop.c_o + n * (coop.eta * bounds.mu - bounds.beta * r.msd_coop) / pair_mass
                    : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace selfnet

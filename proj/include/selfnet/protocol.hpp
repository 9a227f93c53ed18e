#pragma once

#include <string_view>

#include "selfnet/model.hpp"

namespace selfnet {

/// How an agent predicts its largest achievable benefit.
enum class BenefitMode {
  oracle,    // ||(I - mu R) w~||^2_R with the true error (simulator privilege)
  realtime,  // instantaneous regressor plus moving-average target estimate
};

std::string_view to_string(BenefitMode mode);

struct BenefitEstimate {
  double value = 0.0;
  BenefitMode mode = BenefitMode::oracle;
};

struct ActionDecision {
  bool share = false;
  double ratio = 0.0;      // benefit / c
  double threshold = 0.0;  // chi / theta
};

/// Sharing threshold constant (1 - delta r) / (delta (1 - r)).
double chi(double discount, double smoothing);

/// One reputation step for a neighbor. Unpaired rounds leave theta unchanged;
/// paired rounds smooth toward the observed action and floor at eps.
double reputation_update(double theta, bool paired, bool opponent_action,
                         double smoothing, double eps);

/// Subjective probability that the opponent shares: theta_kl * theta_lk.
double belief(double theta_kl, double theta_lk);

/// (I - mu R)^T R (I - mu R), the weight of the oracle benefit quadratic form.
Matrix oracle_benefit_weight(const Matrix& cov, double mu);

/// w~^T (I - mu R) R (I - mu R) w~.
double benefit_oracle(const Vector& w_err, const Matrix& cov, double mu);

/// Real-time prediction. Updates state.wo_hat from state.psi first, then
/// approximates w~ by wo_hat - w and returns (1 - mu|u|^2)^2 (u w~)^2, clamped
/// at zero. state.psi must already hold this iteration's intermediate estimate.
double benefit_realtime(AgentState& state, const Vector& u, double mu, double nu);

/// Risk-taking best response: share iff benefit / c > chi / theta_opponent.
ActionDecision decide_action(const BenefitEstimate& benefit, double comm_cost,
                             double chi_value, double theta_opponent);

}  // namespace selfnet

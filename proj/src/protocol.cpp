#include "selfnet/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace selfnet {

namespace {

void require_unit_open(double x, const char* what) {
  if (!(x > 0.0 && x < 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in (0,1)");
  }
}

void require_score(double theta, const char* what) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in (0,1]");
  }
}

}  // namespace

std::string_view to_string(BenefitMode mode) {
  return mode == BenefitMode::oracle ? "oracle" : "realtime";
}

double chi(double discount, double smoothing) {
  require_unit_open(discount, "discount");
  require_unit_open(smoothing, "smoothing");
  return (1.0 - discount * smoothing) / (discount * (1.0 - smoothing));
}

double reputation_update(double theta, bool paired, bool opponent_action,
                         double smoothing, double eps) {
  require_unit_open(eps, "reputation floor");
  require_unit_open(smoothing, "smoothing");
  if (!(theta >= eps && theta <= 1.0)) {
    throw std::invalid_argument("reputation score outside [eps, 1]");
  }
  if (!paired) return theta;
  const double a = opponent_action ? 1.0 : 0.0;
  return std::max(smoothing * theta + (1.0 - smoothing) * a, eps);
}

double belief(double theta_kl, double theta_lk) {
  require_score(theta_kl, "theta_kl");
  require_score(theta_lk, "theta_lk");
  return theta_kl * theta_lk;
}

Matrix oracle_benefit_weight(const Matrix& cov, double mu) {
  const Matrix shrink = Matrix::Identity(cov.rows(), cov.cols()) - mu * cov;
  return shrink.transpose() * cov * shrink;
}

double benefit_oracle(const Vector& w_err, const Matrix& cov, double mu) {
  if (cov.rows() != w_err.size() || cov.cols() != w_err.size()) {
    throw std::invalid_argument("benefit_oracle: dimension mismatch");
  }
  const Vector shrunk = w_err - mu * (cov * w_err);
  return std::max(0.0, shrunk.dot(cov * shrunk));
}

double benefit_realtime(AgentState& state, const Vector& u, double mu, double nu) {
  if (u.size() != state.w.size() || state.psi.size() != state.w.size() ||
      state.wo_hat.size() != state.w.size()) {
    throw std::invalid_argument("benefit_realtime: dimension mismatch");
  }
  state.wo_hat = (1.0 - nu) * state.wo_hat + nu * state.psi;
  const double projected = u.dot(state.wo_hat - state.w);
  const double prefactor = 1.0 - mu * u.squaredNorm();
  return std::max(0.0, prefactor * prefactor * projected * projected);
}

ActionDecision decide_action(const BenefitEstimate& benefit, double comm_cost,
                             double chi_value, double theta_opponent) {
  if (!(comm_cost > 0.0)) throw std::invalid_argument("decide_action: c must be positive");
  require_score(theta_opponent, "theta_opponent");
  ActionDecision out;
  out.ratio = benefit.value / comm_cost;
  out.threshold = chi_value / theta_opponent;
  out.share = out.ratio > out.threshold;
  return out;
}

}  // namespace selfnet

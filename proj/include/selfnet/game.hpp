#pragma once

#include <string_view>

#include "selfnet/model.hpp"
#include "selfnet/rng.hpp"

namespace selfnet {

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean
};

/// One side of a stage game: an agent index, its current error w^o - w_{i-1}
/// and its parameters.
struct StageAgent {
  int agent = 0;
  Vector w_err;
  double mu = 0.01;
  double alpha = 0.5;
  double comm_cost = 1e-4;
};

/// E||psi~_k||^2_{R_k} - E||alpha psi~_k + (1 - alpha) psi~_l||^2_{R_k} given
/// both current errors, by Monte Carlo over fresh data of both agents.
MonteCarloEstimate exact_benefit(const DataModel& model, const StageAgent& k,
                                 const StageAgent& l, int n_samples, RandomStream& rng);

/// payoffs[a_k][a_l][player] is the expected one-shot cost of player 0 (k)
/// or 1 (l) under the action profile (a_k, a_l).
struct StageGameTable {
  double payoffs[2][2][2] = {};
  MonteCarloEstimate benefit_k;
  MonteCarloEstimate benefit_l;
};

StageGameTable stage_game(const DataModel& model, const StageAgent& k, const StageAgent& l,
                          int n_samples, RandomStream& rng);

/// True iff a=0 weakly beats a=1 for both players against every opponent action.
bool no_share_dominant(const StageGameTable& table);

enum class ParetoLabel { share_dominates, no_share_dominates, mixed };
std::string_view to_string(ParetoLabel label);

struct ParetoVerdict {
  double gamma_k = 0.0;
  double gamma_l = 0.0;
  ParetoLabel label = ParetoLabel::mixed;
};

/// Compares mutual sharing with mutual withholding via gamma = b / c.
ParetoVerdict pareto_classify(double benefit_k, double benefit_l, double c_k, double c_l);

struct ThresholdOracle {
  bool share = false;
  bool boundary = false;    // |difference| within the truncation/rounding band
  double difference = 0.0;  // cost(share) - cost(withhold), summed over the horizon
};

/// ceil(log(tol) / log(delta)).
int default_horizon(double delta, double tol = 1e-12);

/// Brute-force evaluation of the long-horizon cost difference between sharing
/// and withholding now, with reputations iterated explicitly over `horizon`
/// future rounds. Throws std::invalid_argument if delta^horizon >= tol.
ThresholdOracle appendix_threshold_oracle(double benefit, double c, double delta, double r,
                                          double theta_lk, double theta_kl, int horizon,
                                          double tol = 1e-12);

}  // namespace selfnet

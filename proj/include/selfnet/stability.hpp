#pragma once

#include <string_view>
#include <vector>

#include "selfnet/diffusion.hpp"
#include "selfnet/model.hpp"
#include "selfnet/pairing.hpp"

namespace selfnet {

struct StabilityBounds {
  double rho_max = 0.0;  // max_k max |1 - mu lambda(R_k)|
  double rho_min = 0.0;  // min_k min |1 - mu lambda(R_k)|
  double kappa = 0.0;    // max_k Tr(R_k^2) sigma_k^2
  double beta = 0.0;     // min_k lambda_min(R_k)
  double mu_max = 0.0;   // 2 / max_k lambda_max(R_k)
  double mu = 0.0;

  /// mu^2 kappa / (1 - rho_max^2); infinite when rho_max >= 1.
  double steady_state_bound() const;
};

StabilityBounds compute_bounds(const DataModel& model, double mu);

enum class Regime { far_field, near_field, middle_field };
std::string_view to_string(Regime regime);

struct RegimeVerdict {
  Regime regime = Regime::middle_field;
  double far_prob = 0.0;   // fraction above c chi / (rho_min^2 eps)
  double near_prob = 0.0;  // fraction below c chi / rho_max^2
  double far_threshold = 0.0;
  double near_threshold = 0.0;
  double phi = 0.9;

  /// Probability backing the verdict (the larger one for middle field).
  double empirical_prob() const;
};

/// Classifies an empirical sample of weighted errors.
RegimeVerdict classify_regime(const std::vector<double>& weighted_errors, double c, double chi,
                              const StabilityBounds& bounds, double eps, double phi = 0.9);

struct CoopRateBound {
  double c_o = 0.0;
  double eta = 0.0;

  /// min(c_o / c, 1).
  double bound(double c) const;
};

/// Mean weighted error of each agent over records[window_begin..].
std::vector<double> steady_state_werr(const std::vector<IterationRecord>& records,
                                      int window_begin);

/// eta = max_k steady-state mean error / mu; c_o = eta mu rho_max^2 / chi_min.
/// Throws std::invalid_argument if the window has fewer than `min_window`
/// records.
CoopRateBound cooperation_bound(const std::vector<IterationRecord>& records, int window_begin,
                                const StabilityBounds& bounds, double chi_min, double mu,
                                int min_window = 10);

struct PublicCostReport {
  double c = 0.0;
  double jpub_reputation = 0.0;
  double jpub_cooperative = 0.0;
  double upper_bound = 0.0;        // N eta mu + sum sigma^2 + c_o sum (1 - p_kk)
  double coop_lower_bound = 0.0;   // N beta MSD_coop + sum sigma^2 + c sum (1 - p_kk)
  double crossover = 0.0;          // c above which the protocol beats cooperation
  double msd_coop = 0.0;
  double eta = 0.0;
  double c_o = 0.0;
};

/// Steady-state mean of a scalar record field over records[window_begin..].
double steady_state_mean(const std::vector<IterationRecord>& records, int window_begin,
                         double IterationRecord::*field);

/// Compares a reputation run with a cooperative run at the same cost c.
/// `coop_bound` should come from the reputation run.
PublicCostReport public_cost_bounds(const RunResult& reputation, const RunResult& cooperative,
                                    const DataModel& model, const PairingStats& pairing_stats,
                                    const StabilityBounds& bounds, const CoopRateBound& coop_bound,
                                    double c);

}  // namespace selfnet

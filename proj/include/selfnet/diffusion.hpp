#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "selfnet/model.hpp"
#include "selfnet/pairing.hpp"
#include "selfnet/protocol.hpp"
#include "selfnet/rng.hpp"

namespace selfnet {

/// Action-selection policy of a run.
enum class Mode {
  reputation,           // threshold rule with the oracle benefit
  reputation_realtime,  // threshold rule with the real-time benefit
  always_share,         // cooperative baseline
  never_share,          // non-cooperative baseline
};

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);
inline constexpr Mode kAllModes[] = {Mode::reputation, Mode::reputation_realtime,
                                     Mode::always_share, Mode::never_share};

/// psi = w + mu u^T (d - u w).
Vector adapt(const Vector& w, const DataSample& sample, double mu);

/// Gated combination: alpha psi_self + (1 - alpha) psi_partner when the
/// partner shared, psi_self otherwise.
Vector combine(const Vector& psi_self, const Vector& psi_partner, double alpha,
               bool partner_shared);

/// Everything a run needs that stays fixed over time.
class Scenario {
 public:
  /// Throws std::invalid_argument on inconsistent sizes or invalid params.
  Scenario(DataModel model, PairingEngine pairing, std::vector<AgentParams> params,
           Mode mode);

  const DataModel& model() const { return model_; }
  const PairingEngine& pairing() const { return pairing_; }
  const Topology& topology() const { return pairing_.topology(); }
  const std::vector<AgentParams>& params() const { return params_; }
  const AgentParams& params(int k) const { return params_[static_cast<std::size_t>(k)]; }
  Mode mode() const { return mode_; }
  int n_agents() const { return model_.n_agents(); }
  int dim() const { return model_.dim(); }
  double chi(int k) const { return chi_[static_cast<std::size_t>(k)]; }

  /// Copy of this scenario with a different mode.
  Scenario with_mode(Mode mode) const;
  /// Copy with every agent's communication cost replaced.
  Scenario with_comm_cost(double c) const;

  /// Oracle benefit ||(I - mu R_k) w~||^2_{R_k} for agent k's current error.
  double oracle_benefit(int k, const Vector& w_err) const;

 private:
  DataModel model_;
  PairingEngine pairing_;
  std::vector<AgentParams> params_;
  Mode mode_;
  std::vector<double> chi_;
  std::vector<Matrix> benefit_weight_;
  std::vector<Vector> benefit_diag_;
};

struct NetworkState {
  std::vector<AgentState> agents;
  std::int64_t time = 0;

  static NetworkState initial(const Scenario& scenario);
};

/// What happened during one network step.
struct StepTrace {
  PairingOutcome pairing;
  /// a_{k,partner(k)} for paired agents; nullopt for self-paired agents.
  std::vector<std::optional<bool>> actions;
  std::vector<double> oracle_benefits;
  std::vector<double> realtime_benefits;
  /// Benefit the agent's policy actually used.
  std::vector<double> benefits;
  std::vector<double> comm_costs_paid;

  /// a_{kl}(i) when k and l were paired, nullopt otherwise.
  std::optional<bool> action(int k, int l) const;
};

/// Combination weights g_{lk} implied by a trace: (neighbor, weight) pairs
/// including k itself.
std::vector<std::pair<int, double>> combination_weights(const StepTrace& trace,
                                                        const Scenario& scenario,
                                                        int k);

/// Scratch buffers reused across steps.
struct StepWorkspace {
  std::vector<DataSample> samples;
  Vector err;
};

/// One iteration: pairing, adaptation with benefit prediction, simultaneous
/// action selection, reputation update, gated combination.
StepTrace network_step(NetworkState& state, const Scenario& scenario,
                       RandomStream& data_rng, RandomStream& pairing_rng,
                       StepWorkspace& workspace);
StepTrace network_step(NetworkState& state, const Scenario& scenario,
                       RandomStream& data_rng, RandomStream& pairing_rng);

/// Ensemble-averaged metrics for one iteration.
struct IterationRecord {
  int iter = 0;
  double jpub = 0.0;       // sum_k (werr_k + sigma_k^2 + comm_k)
  double msd = 0.0;        // mean_k ||w^o - w_k||^2
  double coop_rate = 0.0;  // shares / paired agents
  double bnet = 0.0;       // mean real-time benefit
  std::vector<double> werr;       // ||w^o - w_{k,i}||^2_{R_k}
  std::vector<double> comm_cost;  // realized c_k a_kl
  std::vector<double> shares;     // mean number of share actions
  std::vector<double> paired;     // mean number of paired events
};

/// Steady-state window totals for one agent in one repetition.
struct AgentWindowStats {
  double werr_sum = 0.0;
  double shares = 0.0;
  double paired = 0.0;
  int samples = 0;
};

struct RunOptions {
  int n_iters = 3000;
  int n_monte_carlo = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  double steady_fraction = 0.2;
  bool collect_window_samples = false;
};

struct RunResult {
  std::vector<IterationRecord> records;
  int window_begin = 0;  // first iteration of the steady-state window
  std::vector<std::vector<AgentWindowStats>> per_rep;  // [rep][agent]
  /// [agent] -> weighted errors over the window, all repetitions in order.
  std::vector<std::vector<double>> window_samples;
};

/// Number of trailing iterations forming the steady-state window.
int steady_window_length(int n_iters, double steady_fraction);

/// Seeds of repetition `rep`: data and pairing streams.
std::uint64_t repetition_seed(std::uint64_t master, int rep);
std::uint64_t data_stream_seed(std::uint64_t rep_seed);
std::uint64_t pairing_stream_seed(std::uint64_t rep_seed);

/// Monte Carlo ensemble driver. Repetitions run in fixed-size blocks that are
/// merged in index order, so the output does not depend on the thread count.
RunResult run(const Scenario& scenario, const RunOptions& options);

}  // namespace selfnet

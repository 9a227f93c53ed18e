#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "selfnet/model.hpp"
#include "selfnet/rng.hpp"

namespace selfnet {

/// Matching at one time instant. partner[k] == k encodes the self-pair event.
struct PairingOutcome {
  std::vector<int> partner;

  int n_agents() const { return static_cast<int>(partner.size()); }
  bool is_paired(int k) const { return partner[static_cast<std::size_t>(k)] != k; }
};

/// True iff the outcome is an involution that respects the topology.
bool is_valid_pairing(const PairingOutcome& outcome, const Topology& topology);

/// Uniform perfect matching over a complete network of even size.
/// Throws std::invalid_argument for odd or non-positive N.
PairingOutcome pair_fully(int n_agents, RandomStream& rng);

/// Greedy mechanism: every agent draws a value in [0,1]; in increasing value
/// order, each still-unpaired agent pairs with its unpaired neighbor holding
/// the smallest value. Leftovers are self-paired. Ties go to the lower index.
PairingOutcome pair_distributed(const Topology& topology, RandomStream& rng);

enum class PairingKind { full, distributed };

std::string_view to_string(PairingKind kind);
PairingKind parse_pairing_kind(std::string_view name);

/// A pairing engine bound to a topology.
class PairingEngine {
 public:
  /// Throws std::invalid_argument if `full` is requested on a topology that is
  /// not complete or has an odd number of agents.
  PairingEngine(PairingKind kind, Topology topology);

  PairingOutcome draw(RandomStream& rng) const;
  PairingKind kind() const { return kind_; }
  const Topology& topology() const { return topology_; }

 private:
  PairingKind kind_;
  Topology topology_;
};

/// Empirical pairing frequencies; counts[k][k] counts self-pair events.
struct PairingStats {
  std::vector<std::vector<std::int64_t>> counts;
  std::int64_t trials = 0;

  double prob(int k, int l) const;
  /// Estimated p_kk.
  double self_prob(int k) const { return prob(k, k); }
};

/// Monte Carlo estimate of the pairing probabilities p_kl.
PairingStats estimate_pairing_probs(const PairingEngine& engine,
                                    std::int64_t trials, RandomStream& rng);

}  // namespace selfnet

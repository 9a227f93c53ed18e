#include "selfnet/pairing.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace selfnet {

bool is_valid_pairing(const PairingOutcome& outcome, const Topology& topology) {
  const int n = outcome.n_agents();
  if (n != topology.n_agents()) return false;
  for (int k = 0; k < n; ++k) {
    const int l = outcome.partner[k];
    if (l < 0 || l >= n) return false;
    if (outcome.partner[l] != k) return false;
    if (!topology.adjacent(k, l)) return false;
  }
  return true;
}

PairingOutcome pair_fully(int n_agents, RandomStream& rng) {
  if (n_agents <= 0 || n_agents % 2 != 0) {
    throw std::invalid_argument("pair_fully: number of agents must be even, got " +
                                std::to_string(n_agents));
  }
  std::vector<int> order(static_cast<std::size_t>(n_agents));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  PairingOutcome out;
  out.partner.assign(static_cast<std::size_t>(n_agents), -1);
  for (std::size_t j = 0; j < order.size(); j += 2) {
    out.partner[order[j]] = order[j + 1];
    out.partner[order[j + 1]] = order[j];
  }
  return out;
}

PairingOutcome pair_distributed(const Topology& topology, RandomStream& rng) {
  const int n = topology.n_agents();
  std::vector<double> value(static_cast<std::size_t>(n));
  for (auto& x : value) x = rng.uniform01();

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto before = [&value](int a, int b) {
    return value[a] < value[b] || (value[a] == value[b] && a < b);
  };
  std::sort(order.begin(), order.end(), before);

  PairingOutcome out;
  out.partner.assign(static_cast<std::size_t>(n), -1);
  for (int k : order) {
    if (out.partner[k] != -1) continue;
    int best = -1;
    for (int l : topology.neighbors(k)) {
      if (out.partner[l] != -1) continue;
      if (best == -1 || before(l, best)) best = l;
    }
    if (best == -1) {
      out.partner[k] = k;
    } else {
      out.partner[k] = best;
      out.partner[best] = k;
    }
  }
  return out;
}

std::string_view to_string(PairingKind kind) {
  return kind == PairingKind::full ? "full" : "distributed";
}

PairingKind parse_pairing_kind(std::string_view name) {
  if (name == "full") return PairingKind::full;
  if (name == "distributed") return PairingKind::distributed;
  throw std::invalid_argument("unknown pairing engine '" + std::string(name) + "'");
}

PairingEngine::PairingEngine(PairingKind kind, Topology topology)
    : kind_(kind), topology_(std::move(topology)) {
  if (kind_ == PairingKind::full) {
    if (!topology_.is_complete()) {
      throw std::invalid_argument("pairing 'full' requires a complete topology");
    }
    if (topology_.n_agents() % 2 != 0) {
      throw std::invalid_argument("pairing 'full' requires an even number of agents");
    }
  }
}

PairingOutcome PairingEngine::draw(RandomStream& rng) const {
  if (kind_ == PairingKind::full) return pair_fully(topology_.n_agents(), rng);
  return pair_distributed(topology_, rng);
}

double PairingStats::prob(int k, int l) const {
  if (trials <= 0) return 0.0;
  return static_cast<double>(counts.at(k).at(l)) / static_cast<double>(trials);
}

PairingStats estimate_pairing_probs(const PairingEngine& engine,
                                    std::int64_t trials, RandomStream& rng) {
  if (trials < 1) throw std::invalid_argument("estimate_pairing_probs: trials must be >= 1");
  const auto n = static_cast<std::size_t>(engine.topology().n_agents());
  PairingStats stats;
  stats.counts.assign(n, std::vector<std::int64_t>(n, 0));
  stats.trials = trials;
  for (std::int64_t t = 0; t < trials; ++t) {
    const PairingOutcome p = engine.draw(rng);
    for (std::size_t k = 0; k < n; ++k) ++stats.counts[k][p.partner[k]];
  }
  return stats;
}

}  // namespace selfnet

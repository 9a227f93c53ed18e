#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selfnet/diffusion.hpp"
#include "selfnet/model.hpp"
#include "selfnet/pairing.hpp"

namespace selfnet {

/// Invalid or unparsable configuration. `field` names the offending key
/// (empty for syntax errors); `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

/// Fully resolved experiment description. Randomized defaults (noise profile,
/// target, random covariances) are drawn at load time from the seed so the
/// echoed config reproduces the run exactly.
struct ExperimentConfig {
  int n_agents = 0;
  int dim = 0;
  double mu = 0.0;
  std::vector<double> alpha, comm_cost, delta, r, epsilon, nu;  // one per agent
  std::uint64_t seed = 1;
  std::vector<double> noise_vars;
  std::vector<Matrix> covariances;
  Vector wo;
  bool full_topology = true;
  std::vector<std::pair<int, int>> edges;  // 0-based
  PairingKind pairing = PairingKind::distributed;
  std::vector<Mode> modes;
  Distribution distribution = Distribution::gaussian;
  int n_iters = 3000;
  int n_monte_carlo = 100;
  double steady_fraction = 0.2;
  int threads = 0;  // 0: hardware concurrency
  std::vector<double> sweep;
  std::string out = "out";
  double phi = 0.9;
  int stage_game_samples = 100000;
  std::int64_t pairing_trials = 100000;

  DataModel make_model() const;
  Topology make_topology() const;
  std::vector<AgentParams> make_params() const;
  Scenario make_scenario(Mode mode) const;
  RunOptions run_options() const;
};

/// `seed` replaces the file's seed before any randomized default is drawn.
ExperimentConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed = std::nullopt);
/// `source` only labels error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                              std::optional<std::uint64_t> seed = std::nullopt);

/// Canonical YAML with every value explicit; parse_config(echo_config(c))
/// echoes to the same text.
std::string echo_config(const ExperimentConfig& config);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace selfnet

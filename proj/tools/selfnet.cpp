// Command-line driver: run, sweep, analyze, pairing-stats.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "selfnet/config.hpp"
#include "selfnet/experiment.hpp"
#include "selfnet/game.hpp"
#include "selfnet/pairing.hpp"

namespace fs = std::filesystem;
using namespace selfnet;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Thrown for bad command-line input that the config loader cannot see.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<int> threads;
};

ExperimentConfig load_with(const std::string& path, const Overrides& ov) {
  ExperimentConfig c = load_config(path, ov.seed);
  if (ov.out) c.out = *ov.out;
  if (ov.threads) {
    if (*ov.threads < 0) throw UsageError("--threads must be nonnegative");
    c.threads = *ov.threads;
  }
  if (ov.mode) {
    if (*ov.mode == "all") {
      c.modes.assign(std::begin(kAllModes), std::end(kAllModes));
    } else {
      try {
        c.modes = {parse_mode(*ov.mode)};
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--mode: ") + e.what());
      }
    }
  }
  return c;
}

void add_overrides(CLI::App* cmd, Overrides& ov, bool with_mode) {
  cmd->add_option("--seed", ov.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", ov.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", ov.threads, "Worker threads, 0 for all cores");
  if (with_mode) cmd->add_option("--mode", ov.mode, "reputation | reputation_realtime | always_share | never_share | all");
}

Vector read_vector_file(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read error vector file '" + path + "'");
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    for (char& ch : tok) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream parts(tok);
    double x;
    while (parts >> x) v.push_back(x);
  }
  if (static_cast<int>(v.size()) != dim) {
    throw UsageError("'" + path + "' holds " + std::to_string(v.size()) + " values, expected " +
                     std::to_string(dim));
  }
  return Eigen::Map<const Vector>(v.data(), dim);
}

// Error vector with ||w~||^2_R = mag along a seeded random direction.
Vector synthetic_error(const DataModel& model, int k, double mag, RandomStream& rng) {
  Vector dir(model.dim());
  for (int j = 0; j < model.dim(); ++j) dir(j) = rng.normal();
  const double q = dir.dot(model.covariance(k) * dir);
  return dir * std::sqrt(mag / q);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reputation-driven diffusion estimation over networks of self-interested agents"};
  app.require_subcommand(1);

  Overrides run_ov, sweep_ov, game_ov, pair_ov;
  std::string run_cfg, sweep_cfg, game_cfg, pair_cfg, run_dir;

  CLI::App* run_cmd = app.add_subcommand("run", "Run every configured mode on matched seeds");
  run_cmd->add_option("config", run_cfg, "Config file")->required();
  add_overrides(run_cmd, run_ov, true);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Steady-state metrics over the configured c grid");
  sweep_cmd->add_option("config", sweep_cfg, "Config file")->required();
  add_overrides(sweep_cmd, sweep_ov, true);

  CLI::App* analyze = app.add_subcommand("analyze", "Offline analysis");
  analyze->require_subcommand(1);
  CLI::App* stab = analyze->add_subcommand("stability", "Stability report for a run directory");
  stab->add_option("run-dir", run_dir, "Directory written by run or sweep")->required();

  CLI::App* game = analyze->add_subcommand("stage-game", "Expected one-shot payoff table of a pair");
  std::vector<int> agents;
  std::vector<double> mags;
  std::string err_k, err_l;
  int samples = 0;
  game->add_option("config", game_cfg, "Config file")->required();
  game->add_option("--agents", agents, "Two agent numbers (1-based)")->expected(2)->required();
  game->add_option("--mag", mags, "Weighted error magnitudes ||w~||^2_R of both agents")->expected(2);
  game->add_option("--err-k", err_k, "File with agent k's error vector");
  game->add_option("--err-l", err_l, "File with agent l's error vector");
  game->add_option("--samples", samples, "Monte Carlo samples (default from config)");
  add_overrides(game, game_ov, false);

  CLI::App* pair_cmd = app.add_subcommand("pairing-stats", "Empirical pairing probabilities");
  std::int64_t trials = 0;
  pair_cmd->add_option("config", pair_cfg, "Config file")->required();
  pair_cmd->add_option("--trials", trials, "Number of draws (default from config)");
  add_overrides(pair_cmd, pair_ov, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*run_cmd) {
      const ExperimentConfig c = load_with(run_cfg, run_ov);
      const auto runs = run_experiment(c, c.out);
      for (const ModeSummary& s : runs) {
        std::cout << to_string(s.mode) << ": steady-state jpub "
                  << format_double(steady_state_mean(s.records, s.window_begin, &IterationRecord::jpub))
                  << "\n";
      }
      std::cout << "wrote " << c.out << "\n";
    } else if (*sweep_cmd) {
      const ExperimentConfig c = load_with(sweep_cfg, sweep_ov);
      if (c.sweep.empty()) throw UsageError("config has no 'sweep' list");
      run_sweep(c, c.out);
      std::cout << "wrote " << (fs::path(c.out) / "sweep.csv").string() << "\n";
    } else if (*stab) {
      const std::string report = report_from_directory(run_dir);
      std::cout << report;
      std::ofstream(fs::path(run_dir) / "report.txt") << report;
    } else if (*game) {
      const ExperimentConfig c = load_with(game_cfg, game_ov);
      const DataModel model = c.make_model();
      const int k = agents[0] - 1, l = agents[1] - 1;
      if (k < 0 || l < 0 || k >= c.n_agents || l >= c.n_agents || k == l) {
        throw UsageError("--agents needs two distinct agent numbers in 1.." + std::to_string(c.n_agents));
      }
      RandomStream rng(derive_seed(c.seed, streams::kAnalysis, 1));
      StageAgent a{k, Vector(), c.mu, c.alpha[static_cast<std::size_t>(k)], c.comm_cost[static_cast<std::size_t>(k)]};
      StageAgent b{l, Vector(), c.mu, c.alpha[static_cast<std::size_t>(l)], c.comm_cost[static_cast<std::size_t>(l)]};
      if (!err_k.empty() || !err_l.empty()) {
        if (err_k.empty() || err_l.empty()) throw UsageError("--err-k and --err-l go together");
        a.w_err = read_vector_file(err_k, c.dim);
        b.w_err = read_vector_file(err_l, c.dim);
      } else if (mags.size() == 2) {
        if (!(mags[0] >= 0.0 && mags[1] >= 0.0)) throw UsageError("--mag values must be nonnegative");
        a.w_err = synthetic_error(model, k, mags[0], rng);
        b.w_err = synthetic_error(model, l, mags[1], rng);
      } else {
        throw UsageError("give either --mag or --err-k/--err-l");
      }
      const int n = samples > 0 ? samples : c.stage_game_samples;
      const StageGameTable t = stage_game(model, a, b, n, rng);
      std::cout << "a_k,a_l,cost_k,cost_l\n";
      for (int ak = 0; ak < 2; ++ak) {
        for (int al = 0; al < 2; ++al) {
          std::cout << ak << ',' << al << ',' << format_double(t.payoffs[ak][al][0]) << ','
                    << format_double(t.payoffs[ak][al][1]) << "\n";
        }
      }
      const ParetoVerdict v = pareto_classify(t.benefit_k.mean, t.benefit_l.mean, a.comm_cost, b.comm_cost);
      std::cout << "benefit_k = " << format_double(t.benefit_k.mean) << " +- " << format_double(t.benefit_k.stderr_) << "\n";
      std::cout << "benefit_l = " << format_double(t.benefit_l.mean) << " +- " << format_double(t.benefit_l.stderr_) << "\n";
      std::cout << "gamma_k = " << format_double(v.gamma_k) << ", gamma_l = " << format_double(v.gamma_l)
                << ", " << to_string(v.label) << "\n";
      std::cout << "no-share dominant: " << (no_share_dominant(t) ? "yes" : "no") << "\n";
    } else if (*pair_cmd) {
      const ExperimentConfig c = load_with(pair_cfg, pair_ov);
      const PairingEngine engine(c.pairing, c.make_topology());
      RandomStream rng(derive_seed(c.seed, streams::kAnalysis, 0));
      const PairingStats st = estimate_pairing_probs(engine, trials > 0 ? trials : c.pairing_trials, rng);
      std::ostringstream csv;
      csv << "agent";
      for (int l = 1; l <= c.n_agents; ++l) csv << ",p_" << l;
      csv << "\n";
      for (int k = 0; k < c.n_agents; ++k) {
        csv << k + 1;
        for (int l = 0; l < c.n_agents; ++l) csv << ',' << format_double(st.prob(k, l));
        csv << "\n";
      }
      std::cout << csv.str();
      if (pair_ov.out) {
        fs::create_directories(*pair_ov.out);
        std::ofstream(fs::path(*pair_ov.out) / "pairing_stats.csv") << csv.str();
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

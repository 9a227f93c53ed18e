#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "selfnet/config.hpp"
#include "selfnet/diffusion.hpp"
#include "selfnet/stability.hpp"

namespace selfnet {

/// Steady-state summary of one agent in one run.
struct AgentSummary {
  double werr = 0.0;
  double coop_rate = 0.0;    // shares / paired over the window, all repetitions
  double paired_rate = 0.0;  // paired iterations / window iterations
  double far_prob = 0.0;
  double near_prob = 0.0;
  Regime regime = Regime::middle_field;
};

/// What the report needs from a finished run; rebuildable from its CSV files.
struct ModeSummary {
  Mode mode = Mode::reputation;
  std::vector<IterationRecord> records;
  int window_begin = 0;
  std::vector<AgentSummary> agents;
};

ModeSummary summarize(const ExperimentConfig& config, Mode mode, const RunResult& result,
                      const StabilityBounds& bounds);

/// Time series: iter,jpub,msd,mean_coop_rate,bnet,werr_1..werr_N.
void write_timeseries_csv(std::ostream& out, const std::vector<IterationRecord>& records);
/// Per agent: agent,werr,coop_rate,paired_rate,far_prob,near_prob,regime.
void write_agents_csv(std::ostream& out, const std::vector<AgentSummary>& agents);

std::vector<IterationRecord> read_timeseries_csv(const std::filesystem::path& path);
std::vector<AgentSummary> read_agents_csv(const std::filesystem::path& path);

/// Runs every configured mode on matched seeds. Writes <mode>.csv,
/// <mode>_agents.csv and config.yaml into `out_dir`.
std::vector<ModeSummary> run_experiment(const ExperimentConfig& config,
                                        const std::filesystem::path& out_dir);

struct SweepRow {
  double c = 0.0;
  Mode mode = Mode::reputation;
  double jpub = 0.0;
  double msd = 0.0;
  double coop_rate = 0.0;
  double bnet = 0.0;
  double comm_cost = 0.0;      // network communication cost per iteration
  double c_o = 0.0;            // cooperation-rate bound constant of this run
  double coop_bound = 0.0;     // min(c_o / c, 1)
  double max_agent_coop = 0.0; // largest per-agent steady-state rate
};

/// Steady-state metrics of one finished run at communication cost c.
SweepRow sweep_row(const Scenario& scenario, const RunResult& result, double c);

/// For each c in config.sweep and each configured mode, runs the experiment
/// with every agent's cost set to c. Writes sweep.csv and config.yaml when
/// `out_dir` is non-empty.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

/// Cost at which the reputation run's relative advantage over always_share
/// rises past 1%, interpolated in log c. Infinity when it never does, 0 when
/// it already does at the smallest swept c.
double measured_crossover(const std::vector<SweepRow>& rows);

/// Human-readable stability report over the runs of one directory.
std::string emit_report(const ExperimentConfig& config, const std::vector<ModeSummary>& runs,
                        const std::vector<SweepRow>& sweep);

/// Loads config.yaml and every <mode>.csv / sweep.csv present in `dir`.
std::string report_from_directory(const std::filesystem::path& dir);

}  // namespace selfnet

#include "selfnet/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "selfnet/pairing.hpp"

namespace selfnet {

namespace fs = std::filesystem;

namespace {

double chi_min_of(const Scenario& s) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.n_agents(); ++k) m = std::min(m, s.chi(k));
  return m;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const fs::path& path) {
  if (s == ".inf" || s == "inf") return std::numeric_limits<double>::infinity();
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(path.string() + ": malformed number '" + s + "'");
  }
  return x;
}

Regime parse_regime(const std::string& s) {
  for (Regime r : {Regime::far_field, Regime::near_field, Regime::middle_field}) {
    if (to_string(r) == s) return r;
  }
  throw std::runtime_error("unknown regime '" + s + "'");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

// Reads a CSV file: header plus rows, checking that every row is complete.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  header = split(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split(line));
    if (rows.back().size() != header.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(rows.size()) +
                               " has the wrong number of columns");
    }
  }
  return rows;
}

void write_config(const ExperimentConfig& config, const fs::path& out_dir) {
  std::ofstream out = open_out(out_dir / "config.yaml");
  out << echo_config(config);
}

}  // namespace

ModeSummary summarize(const ExperimentConfig& config, Mode mode, const RunResult& result,
                      const StabilityBounds& bounds) {
  ModeSummary s;
  s.mode = mode;
  s.records = result.records;
  s.window_begin = result.window_begin;
  const std::vector<double> werr = steady_state_werr(result.records, result.window_begin);
  const int n = config.n_agents;
  s.agents.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    AgentSummary& a = s.agents[i];
    a.werr = werr[i];
    double shares = 0.0, paired = 0.0, samples = 0.0;
    for (const auto& rep : result.per_rep) {
      shares += rep[i].shares;
      paired += rep[i].paired;
      samples += rep[i].samples;
    }
    a.coop_rate = paired > 0.0 ? shares / paired : 0.0;
    a.paired_rate = samples > 0.0 ? paired / samples : 0.0;
    if (!result.window_samples.empty()) {
      const RegimeVerdict v =
          classify_regime(result.window_samples[i], config.comm_cost[i],
                          chi(config.delta[i], config.r[i]), bounds, config.epsilon[i], config.phi);
      a.far_prob = v.far_prob;
      a.near_prob = v.near_prob;
      a.regime = v.regime;
    }
  }
  return s;
}

void write_timeseries_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  const std::size_t n = records.empty() ? 0 : records.front().werr.size();
  out << "iter,jpub,msd,mean_coop_rate,bnet";
  for (std::size_t k = 1; k <= n; ++k) out << ",werr_" << k;
  out << "\n";
  for (const IterationRecord& r : records) {
    out << r.iter << ',' << format_double(r.jpub) << ',' << format_double(r.msd) << ','
        << format_double(r.coop_rate) << ',' << format_double(r.bnet);
    for (double w : r.werr) out << ',' << format_double(w);
    out << "\n";
  }
}

void write_agents_csv(std::ostream& out, const std::vector<AgentSummary>& agents) {
  out << "agent,werr,coop_rate,paired_rate,far_prob,near_prob,regime\n";
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const AgentSummary& a = agents[k];
    out << k + 1 << ',' << format_double(a.werr) << ',' << format_double(a.coop_rate) << ','
        << format_double(a.paired_rate) << ',' << format_double(a.far_prob) << ','
        << format_double(a.near_prob) << ',' << to_string(a.regime) << "\n";
  }
}

std::vector<IterationRecord> read_timeseries_csv(const fs::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, header);
  if (header.size() < 5 || header[0] != "iter" || header[1] != "jpub") {
    throw std::runtime_error(path.string() + ": not a time-series file");
  }
  std::vector<IterationRecord> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    IterationRecord r;
    r.iter = static_cast<int>(parse_number(row[0], path));
    r.jpub = parse_number(row[1], path);
    r.msd = parse_number(row[2], path);
    r.coop_rate = parse_number(row[3], path);
    r.bnet = parse_number(row[4], path);
    for (std::size_t j = 5; j < row.size(); ++j) r.werr.push_back(parse_number(row[j], path));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AgentSummary> read_agents_csv(const fs::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, header);
  if (header.size() != 7 || header[0] != "agent") {
    throw std::runtime_error(path.string() + ": not an agents file");
  }
  std::vector<AgentSummary> out;
  for (const auto& row : rows) {
    AgentSummary a;
    a.werr = parse_number(row[1], path);
    a.coop_rate = parse_number(row[2], path);
    a.paired_rate = parse_number(row[3], path);
    a.far_prob = parse_number(row[4], path);
    a.near_prob = parse_number(row[5], path);
    a.regime = parse_regime(row[6]);
    out.push_back(a);
  }
  return out;
}

std::vector<ModeSummary> run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  if (!out_dir.empty()) fs::create_directories(out_dir);
  const StabilityBounds bounds = compute_bounds(config.make_model(), config.mu);
  RunOptions opt = config.run_options();
  opt.collect_window_samples = true;
  std::vector<ModeSummary> out;
  for (Mode mode : config.modes) {
    const RunResult result = run(config.make_scenario(mode), opt);
    ModeSummary s = summarize(config, mode, result, bounds);
    if (!out_dir.empty()) {
      const std::string name(to_string(mode));
      std::ofstream ts = open_out(out_dir / (name + ".csv"));
      write_timeseries_csv(ts, s.records);
      std::ofstream ag = open_out(out_dir / (name + "_agents.csv"));
      write_agents_csv(ag, s.agents);
    }
    out.push_back(std::move(s));
  }
  if (!out_dir.empty()) write_config(config, out_dir);
  return out;
}

SweepRow sweep_row(const Scenario& scenario, const RunResult& result, double c) {
  const auto& recs = result.records;
  const int wb = result.window_begin;
  SweepRow row;
  row.c = c;
  row.mode = scenario.mode();
  row.jpub = steady_state_mean(recs, wb, &IterationRecord::jpub);
  row.msd = steady_state_mean(recs, wb, &IterationRecord::msd);
  row.bnet = steady_state_mean(recs, wb, &IterationRecord::bnet);
  double comm = 0.0;
  for (std::size_t i = static_cast<std::size_t>(wb); i < recs.size(); ++i) {
    for (double x : recs[i].comm_cost) comm += x;
  }
  row.comm_cost = comm / static_cast<double>(recs.size() - static_cast<std::size_t>(wb));

  const int n = scenario.n_agents();
  double shares = 0.0, paired = 0.0;
  for (int k = 0; k < n; ++k) {
    double sk = 0.0, pk = 0.0;
    for (const auto& rep : result.per_rep) {
      sk += rep[static_cast<std::size_t>(k)].shares;
      pk += rep[static_cast<std::size_t>(k)].paired;
    }
    shares += sk;
    paired += pk;
    if (pk > 0.0) row.max_agent_coop = std::max(row.max_agent_coop, sk / pk);
  }
  row.coop_rate = paired > 0.0 ? shares / paired : 0.0;

  const double mu = scenario.params(0).mu;
  const StabilityBounds bounds = compute_bounds(scenario.model(), mu);
  const CoopRateBound cb =
      cooperation_bound(recs, wb, bounds, chi_min_of(scenario), mu, /*min_window=*/1);
  row.c_o = cb.c_o;
  row.coop_bound = cb.bound(c);
  return row;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const fs::path& out_dir) {
  if (config.sweep.empty()) throw std::invalid_argument("sweep: no communication costs configured");
  const RunOptions opt = config.run_options();
  std::vector<SweepRow> rows;
  for (double c : config.sweep) {
    for (Mode mode : config.modes) {
      const Scenario sc = config.make_scenario(mode).with_comm_cost(c);
      rows.push_back(sweep_row(sc, run(sc, opt), c));
    }
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out = open_out(out_dir / "sweep.csv");
    write_sweep_csv(out, rows);
    write_config(config, out_dir);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "c,mode,jpub,msd,coop_rate,bnet,comm_cost,c_o,coop_bound,max_agent_coop_rate\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.c) << ',' << to_string(r.mode) << ',' << format_double(r.jpub) << ','
        << format_double(r.msd) << ',' << format_double(r.coop_rate) << ','
        << format_double(r.bnet) << ',' << format_double(r.comm_cost) << ','
        << format_double(r.c_o) << ',' << format_double(r.coop_bound) << ','
        << format_double(r.max_agent_coop) << "\n";
  }
}

std::vector<SweepRow> read_sweep_csv(const fs::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, header);
  if (header.size() != 10 || header[0] != "c") throw std::runtime_error(path.string() + ": not a sweep file");
  std::vector<SweepRow> out;
  for (const auto& row : rows) {
    SweepRow r;
    r.c = parse_number(row[0], path);
    r.mode = parse_mode(row[1]);
    r.jpub = parse_number(row[2], path);
    r.msd = parse_number(row[3], path);
    r.coop_rate = parse_number(row[4], path);
    r.bnet = parse_number(row[5], path);
    r.comm_cost = parse_number(row[6], path);
    r.c_o = parse_number(row[7], path);
    r.coop_bound = parse_number(row[8], path);
    r.max_agent_coop = parse_number(row[9], path);
    out.push_back(r);
  }
  return out;
}

double measured_crossover(const std::vector<SweepRow>& rows) {
  std::map<double, double> rep, coop;
  for (const SweepRow& r : rows) {
    if (r.mode == Mode::reputation) rep[r.c] = r.jpub;
    if (r.mode == Mode::always_share) coop[r.c] = r.jpub;
  }
  // Relative gap (coop - rep) / coop; the crossover is where it rises past 1%.
  std::vector<std::pair<double, double>> gap;
  for (const auto& [c, j] : rep) {
    auto it = coop.find(c);
    if (it != coop.end()) gap.emplace_back(c, (it->second - j) / it->second);
  }
  constexpr double kLevel = 0.01;
  int last_below = -1;
  for (int i = 0; i < static_cast<int>(gap.size()); ++i) {
    if (gap[static_cast<std::size_t>(i)].second <= kLevel) last_below = i;
  }
  if (gap.empty() || last_below == static_cast<int>(gap.size()) - 1) {
    return std::numeric_limits<double>::infinity();
  }
  if (last_below < 0) return 0.0;
  const auto [c0, g0] = gap[static_cast<std::size_t>(last_below)];
  const auto [c1, g1] = gap[static_cast<std::size_t>(last_below + 1)];
  const double t = (kLevel - g0) / (g1 - g0);
  return std::exp(std::log(c0) + t * (std::log(c1) - std::log(c0)));
}

std::string emit_report(const ExperimentConfig& config, const std::vector<ModeSummary>& runs,
                        const std::vector<SweepRow>& sweep) {
  std::ostringstream o;
  const DataModel model = config.make_model();
  const StabilityBounds b = compute_bounds(model, config.mu);
  o << "stability bounds (mu = " << format_double(config.mu) << ")\n";
  o << "  rho_max = " << format_double(b.rho_max) << "\n";
  o << "  rho_min = " << format_double(b.rho_min) << "\n";
  o << "  kappa = " << format_double(b.kappa) << "\n";
  o << "  beta = " << format_double(b.beta) << "\n";
  o << "  mu_max = " << format_double(b.mu_max) << (config.mu < b.mu_max ? " (stable)" : " (UNSTABLE)") << "\n";
  o << "  steady-state error bound = " << format_double(b.steady_state_bound()) << "\n";

  double chi_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < config.n_agents; ++k) {
    chi_min = std::min(chi_min, chi(config.delta[static_cast<std::size_t>(k)],
                                     config.r[static_cast<std::size_t>(k)]));
  }

  const ModeSummary* reputation = nullptr;
  const ModeSummary* cooperative = nullptr;
  for (const ModeSummary& s : runs) {
    if (s.mode == Mode::reputation) reputation = &s;
    if (s.mode == Mode::always_share) cooperative = &s;
    o << "\nmode " << to_string(s.mode) << "\n";
    o << "  steady-state jpub = "
      << format_double(steady_state_mean(s.records, s.window_begin, &IterationRecord::jpub))
      << ", msd = " << format_double(steady_state_mean(s.records, s.window_begin, &IterationRecord::msd))
      << ", coop rate = "
      << format_double(steady_state_mean(s.records, s.window_begin, &IterationRecord::coop_rate))
      << "\n";
    const CoopRateBound cb = cooperation_bound(s.records, s.window_begin, b, chi_min, config.mu, 1);
    o << "  eta = " << format_double(cb.eta) << ", c_o = " << format_double(cb.c_o) << "\n";
    int violations = 0;
    o << "  agent  c  werr  coop_rate  coop_bound  regime  far_prob  near_prob\n";
    for (std::size_t k = 0; k < s.agents.size(); ++k) {
      const AgentSummary& a = s.agents[k];
      const double bound = cb.bound(config.comm_cost[k]);
      const bool applies = s.mode == Mode::reputation;
      if (applies && a.coop_rate > bound) ++violations;
      o << "  " << k + 1 << "  " << format_double(config.comm_cost[k]) << "  "
        << format_double(a.werr) << "  " << format_double(a.coop_rate) << "  "
        << format_double(bound) << "  " << to_string(a.regime) << "  "
        << format_double(a.far_prob) << "  " << format_double(a.near_prob) << "\n";
    }
    if (s.mode == Mode::reputation) {
      o << "  cooperation-rate bound violations: " << violations << "\n";
    }
  }

  if (reputation && cooperative) {
    const PairingEngine engine(config.pairing, config.make_topology());
    RandomStream rng(derive_seed(config.seed, streams::kAnalysis, 0));
    const PairingStats stats = estimate_pairing_probs(engine, config.pairing_trials, rng);
    RunResult rep_run, coop_run;
    rep_run.records = reputation->records;
    rep_run.window_begin = reputation->window_begin;
    coop_run.records = cooperative->records;
    coop_run.window_begin = cooperative->window_begin;
    const CoopRateBound cb =
        cooperation_bound(reputation->records, reputation->window_begin, b, chi_min, config.mu, 1);
    double c_mean = 0.0;
    for (double c : config.comm_cost) c_mean += c / config.n_agents;
    const PublicCostReport r = public_cost_bounds(rep_run, coop_run, model, stats, b, cb, c_mean);
    o << "\npublic cost (c = " << format_double(c_mean) << ")\n";
    o << "  reputation jpub = " << format_double(r.jpub_reputation) << " (upper bound "
      << format_double(r.upper_bound) << (r.jpub_reputation <= r.upper_bound ? ", holds" : ", VIOLATED")
      << ")\n";
    o << "  cooperative jpub = " << format_double(r.jpub_cooperative) << " (lower bound "
      << format_double(r.coop_lower_bound) << ", msd_coop " << format_double(r.msd_coop) << ")\n";
    o << "  analytic crossover c* = " << format_double(r.crossover) << "\n";
  }
  if (!sweep.empty()) {
    o << "  measured crossover c = " << format_double(measured_crossover(sweep)) << "\n";
  }
  return o.str();
}

std::string report_from_directory(const fs::path& dir) {
  const ExperimentConfig config = load_config((dir / "config.yaml").string());
  std::vector<ModeSummary> runs;
  for (Mode mode : kAllModes) {
    const std::string name(to_string(mode));
    const fs::path ts = dir / (name + ".csv");
    if (!fs::exists(ts)) continue;
    ModeSummary s;
    s.mode = mode;
    s.records = read_timeseries_csv(ts);
    if (s.records.empty()) throw std::runtime_error(ts.string() + ": no records");
    s.window_begin = static_cast<int>(s.records.size()) -
                     steady_window_length(static_cast<int>(s.records.size()), config.steady_fraction);
    const fs::path ag = dir / (name + "_agents.csv");
    s.agents = fs::exists(ag) ? read_agents_csv(ag)
                              : std::vector<AgentSummary>(static_cast<std::size_t>(config.n_agents));
    runs.push_back(std::move(s));
  }
  std::vector<SweepRow> sweep;
  if (fs::exists(dir / "sweep.csv")) sweep = read_sweep_csv(dir / "sweep.csv");
  if (runs.empty() && sweep.empty()) {
    throw std::runtime_error("no run output found in '" + dir.string() + "'");
  }
  return emit_report(config, runs, sweep);
}

}  // namespace selfnet

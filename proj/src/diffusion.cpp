#include "selfnet/diffusion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace selfnet {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::reputation: return "reputation";
    case Mode::reputation_realtime: return "reputation_realtime";
    case Mode::always_share: return "always_share";
    case Mode::never_share: return "never_share";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : kAllModes) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

Vector adapt(const Vector& w, const DataSample& sample, double mu) {
  if (sample.u.size() != w.size()) throw std::invalid_argument("adapt: dimension mismatch");
  return w + mu * (sample.d - sample.u.dot(w)) * sample.u;
}

Vector combine(const Vector& psi_self, const Vector& psi_partner, double alpha,
               bool partner_shared) {
  if (psi_self.size() != psi_partner.size()) {
    throw std::invalid_argument("combine: dimension mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("combine: alpha must lie in [0,1]");
  if (!partner_shared) return psi_self;
  return alpha * psi_self + (1.0 - alpha) * psi_partner;
}

Scenario::Scenario(DataModel model, PairingEngine pairing, std::vector<AgentParams> params,
                   Mode mode)
    : model_(std::move(model)), pairing_(std::move(pairing)), params_(std::move(params)),
      mode_(mode) {
  const int n = model_.n_agents();
  if (pairing_.topology().n_agents() != n) {
    throw std::invalid_argument("topology size does not match the number of agents");
  }
  if (static_cast<int>(params_.size()) != n) {
    throw std::invalid_argument("expected one parameter set per agent");
  }
  chi_.reserve(params_.size());
  benefit_weight_.resize(params_.size());
  benefit_diag_.resize(params_.size());
  for (int k = 0; k < n; ++k) {
    const AgentParams& p = params_[static_cast<std::size_t>(k)];
    p.validate();
    chi_.push_back(selfnet::chi(p.discount, p.smoothing));
    const Matrix& cov = model_.covariance(k);
    if (model_.is_diagonal(k)) {
      const Vector d = cov.diagonal();
      benefit_diag_[static_cast<std::size_t>(k)] =
          d.cwiseProduct((1.0 - p.mu * d.array()).square().matrix());
    } else {
      benefit_weight_[static_cast<std::size_t>(k)] = oracle_benefit_weight(cov, p.mu);
    }
  }
}

Scenario Scenario::with_mode(Mode mode) const {
  Scenario copy = *this;
  copy.mode_ = mode;
  return copy;
}

Scenario Scenario::with_comm_cost(double c) const {
  std::vector<AgentParams> params = params_;
  for (AgentParams& p : params) p.comm_cost = c;
  return Scenario(model_, pairing_, std::move(params), mode_);
}

double Scenario::oracle_benefit(int k, const Vector& w_err) const {
  const auto i = static_cast<std::size_t>(k);
  double b = model_.is_diagonal(k) ? w_err.cwiseAbs2().dot(benefit_diag_[i])
                                   : w_err.dot(benefit_weight_[i] * w_err);
  return std::max(0.0, b);
}

NetworkState NetworkState::initial(const Scenario& scenario) {
  NetworkState s;
  s.agents.reserve(static_cast<std::size_t>(scenario.n_agents()));
  for (int k = 0; k < scenario.n_agents(); ++k) {
    s.agents.push_back(AgentState::initial(scenario.dim(), scenario.topology().neighbors(k)));
  }
  return s;
}

std::optional<bool> StepTrace::action(int k, int l) const {
  if (k == l || pairing.partner[static_cast<std::size_t>(k)] != l) return std::nullopt;
  return actions[static_cast<std::size_t>(k)];
}

std::vector<std::pair<int, double>> combination_weights(const StepTrace& trace,
                                                        const Scenario& scenario, int k) {
  const int l = trace.pairing.partner[static_cast<std::size_t>(k)];
  if (l == k || !trace.actions[static_cast<std::size_t>(l)].value_or(false)) {
    return {{k, 1.0}};
  }
  const double alpha = scenario.params(k).alpha;
  return {{k, alpha}, {l, 1.0 - alpha}};
}

namespace {

double weighted_error_with(const Vector& w, const DataModel& model, int k, Vector& err) {
  err = model.wo() - w;
  if (model.is_diagonal(k)) return err.cwiseAbs2().dot(model.covariance(k).diagonal());
  return err.dot(model.covariance(k) * err);
}

}  // namespace

StepTrace network_step(NetworkState& state, const Scenario& scenario, RandomStream& data_rng,
                       RandomStream& pairing_rng, StepWorkspace& ws) {
  const int n = scenario.n_agents();
  const auto nn = static_cast<std::size_t>(n);
  if (state.agents.size() != nn) throw std::invalid_argument("network_step: state size mismatch");
  const DataModel& model = scenario.model();

  StepTrace trace;
  trace.pairing = scenario.pairing().draw(pairing_rng);
  trace.actions.assign(nn, std::nullopt);
  trace.oracle_benefits.assign(nn, 0.0);
  trace.realtime_benefits.assign(nn, 0.0);
  trace.benefits.assign(nn, 0.0);
  trace.comm_costs_paid.assign(nn, 0.0);
  ws.samples.resize(nn);

  // Stage 1: adaptation and benefit prediction. w still holds w_{k,i-1}.
  for (int k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    AgentState& a = state.agents[i];
    const AgentParams& p = scenario.params(k);
    DataSample& s = ws.samples[i];
    generate_sample_into(model, k, data_rng, s);
    a.psi = a.w + p.mu * (s.d - s.u.dot(a.w)) * s.u;
    trace.realtime_benefits[i] = benefit_realtime(a, s.u, p.mu, p.forget);
    ws.err = model.wo() - a.w;
    trace.oracle_benefits[i] = scenario.oracle_benefit(k, ws.err);
    trace.benefits[i] = scenario.mode() == Mode::reputation_realtime
                            ? trace.realtime_benefits[i]
                            : trace.oracle_benefits[i];
  }

  // Stage 2: simultaneous action selection from pre-step reputations.
  for (int k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const int l = trace.pairing.partner[i];
    if (l == k) continue;
    const AgentParams& p = scenario.params(k);
    bool share = false;
    switch (scenario.mode()) {
      case Mode::always_share: share = true; break;
      case Mode::never_share: share = false; break;
      case Mode::reputation:
      case Mode::reputation_realtime: {
        const BenefitMode bm = scenario.mode() == Mode::reputation ? BenefitMode::oracle
                                                                   : BenefitMode::realtime;
        share = decide_action({trace.benefits[i], bm}, p.comm_cost, scenario.chi(k),
                              state.agents[i].reputations.at(l))
                    .share;
        break;
      }
    }
    trace.actions[i] = share;
    if (share) trace.comm_costs_paid[i] = p.comm_cost;
  }

  // Stage 3: reputation update from the opponent's realized action.
  for (int k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const int l = trace.pairing.partner[i];
    if (l == k) continue;
    const AgentParams& p = scenario.params(k);
    ReputationTable& rep = state.agents[i].reputations;
    rep.set(l, reputation_update(rep.at(l), true, *trace.actions[static_cast<std::size_t>(l)],
                                 p.smoothing, p.rep_floor));
  }

  // Stage 4: gated combination; reads psi only, so in-place is safe.
  for (int k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    AgentState& a = state.agents[i];
    const int l = trace.pairing.partner[i];
    if (l != k && *trace.actions[static_cast<std::size_t>(l)]) {
      const double alpha = scenario.params(k).alpha;
      a.w = alpha * a.psi + (1.0 - alpha) * state.agents[static_cast<std::size_t>(l)].psi;
    } else {
      a.w = a.psi;
    }
  }
  ++state.time;
  return trace;
}

StepTrace network_step(NetworkState& state, const Scenario& scenario, RandomStream& data_rng,
                       RandomStream& pairing_rng) {
  StepWorkspace ws;
  return network_step(state, scenario, data_rng, pairing_rng, ws);
}

int steady_window_length(int n_iters, double steady_fraction) {
  if (n_iters < 1) throw std::invalid_argument("n_iters must be at least 1");
  if (!(steady_fraction > 0.0 && steady_fraction <= 1.0)) {
    throw std::invalid_argument("steady_fraction must lie in (0,1]");
  }
  const int len = static_cast<int>(std::ceil(steady_fraction * n_iters - 1e-9));
  return std::clamp(len, 1, n_iters);
}

std::uint64_t repetition_seed(std::uint64_t master, int rep) {
  return derive_seed(master, streams::kRepetition, static_cast<std::uint64_t>(rep));
}
std::uint64_t data_stream_seed(std::uint64_t rep_seed) {
  return derive_seed(rep_seed, streams::kData, 0);
}
std::uint64_t pairing_stream_seed(std::uint64_t rep_seed) {
  return derive_seed(rep_seed, streams::kPairing, 0);
}

namespace {

constexpr int kBlockSize = 4;

// Per-iteration accumulator layout.
struct Layout {
  int n;
  std::size_t stride() const { return 5 + 4 * static_cast<std::size_t>(n); }
  static constexpr std::size_t jpub = 0, msd = 1, bnet = 2, shares = 3, paired = 4;
  std::size_t werr(int k) const { return 5 + static_cast<std::size_t>(k); }
  std::size_t comm(int k) const { return 5 + static_cast<std::size_t>(n + k); }
  std::size_t agent_shares(int k) const { return 5 + static_cast<std::size_t>(2 * n + k); }
  std::size_t agent_paired(int k) const { return 5 + static_cast<std::size_t>(3 * n + k); }
};

struct RepOutput {
  std::vector<AgentWindowStats> stats;
  std::vector<std::vector<double>> samples;
};

void simulate_rep(const Scenario& sc, const RunOptions& opt, int rep, int window_begin,
                  std::vector<double>& acc, RepOutput& out) {
  const int n = sc.n_agents();
  const Layout L{n};
  const std::uint64_t rs = repetition_seed(opt.seed, rep);
  RandomStream data_rng(data_stream_seed(rs));
  RandomStream pairing_rng(pairing_stream_seed(rs));
  NetworkState state = NetworkState::initial(sc);
  StepWorkspace ws;
  out.stats.assign(static_cast<std::size_t>(n), {});
  out.samples.assign(opt.collect_window_samples ? static_cast<std::size_t>(n) : 0, {});

  for (int it = 0; it < opt.n_iters; ++it) {
    const StepTrace tr = network_step(state, sc, data_rng, pairing_rng, ws);
    double* row = acc.data() + static_cast<std::size_t>(it) * L.stride();
    const bool in_window = it >= window_begin;
    for (int k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const double we = weighted_error_with(state.agents[i].w, sc.model(), k, ws.err);
      const double dev = ws.err.squaredNorm();
      const bool paired = tr.pairing.is_paired(k);
      const bool shared = paired && *tr.actions[i];
      row[Layout::jpub] += we + sc.model().noise_var(k) + tr.comm_costs_paid[i];
      row[Layout::msd] += dev / n;
      row[Layout::bnet] += tr.realtime_benefits[i] / n;
      row[Layout::shares] += shared ? 1.0 : 0.0;
      row[Layout::paired] += paired ? 1.0 : 0.0;
      row[L.werr(k)] += we;
      row[L.comm(k)] += tr.comm_costs_paid[i];
      row[L.agent_shares(k)] += shared ? 1.0 : 0.0;
      row[L.agent_paired(k)] += paired ? 1.0 : 0.0;
      if (in_window) {
        AgentWindowStats& st = out.stats[i];
        st.werr_sum += we;
        st.shares += shared ? 1.0 : 0.0;
        st.paired += paired ? 1.0 : 0.0;
        ++st.samples;
        if (opt.collect_window_samples) out.samples[i].push_back(we);
      }
    }
  }
}

}  // namespace

RunResult run(const Scenario& scenario, const RunOptions& opt) {
  if (opt.n_iters < 1) throw std::invalid_argument("n_iters must be at least 1");
  if (opt.n_monte_carlo < 1) throw std::invalid_argument("n_monte_carlo must be at least 1");
  const int n = scenario.n_agents();
  const Layout L{n};
  const int window = steady_window_length(opt.n_iters, opt.steady_fraction);
  const int window_begin = opt.n_iters - window;
  const std::size_t acc_size = static_cast<std::size_t>(opt.n_iters) * L.stride();

  const int n_blocks = (opt.n_monte_carlo + kBlockSize - 1) / kBlockSize;
  int threads = opt.threads > 0 ? opt.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::clamp(threads, 1, n_blocks);

  RunResult result;
  result.window_begin = window_begin;
  result.per_rep.resize(static_cast<std::size_t>(opt.n_monte_carlo));
  std::vector<std::vector<std::vector<double>>> rep_samples(
      opt.collect_window_samples ? static_cast<std::size_t>(opt.n_monte_carlo) : 0);
  std::vector<double> total(acc_size, 0.0);

  // Blocks finish in any order; they are folded into `total` strictly by index.
  std::mutex mu;
  std::map<int, std::vector<double>> pending;
  int next_merge = 0;
  std::atomic<int> next_block{0};
  std::exception_ptr failure;

  auto worker = [&] {
    try {
      for (int b = next_block++; b < n_blocks; b = next_block++) {
        std::vector<double> acc(acc_size, 0.0);
        const int first = b * kBlockSize;
        const int last = std::min(opt.n_monte_carlo, first + kBlockSize);
        for (int rep = first; rep < last; ++rep) {
          RepOutput out;
          simulate_rep(scenario, opt, rep, window_begin, acc, out);
          std::lock_guard lock(mu);
          result.per_rep[static_cast<std::size_t>(rep)] = std::move(out.stats);
          if (opt.collect_window_samples) {
            rep_samples[static_cast<std::size_t>(rep)] = std::move(out.samples);
          }
        }
        std::lock_guard lock(mu);
        pending.emplace(b, std::move(acc));
        for (auto it = pending.find(next_merge); it != pending.end();
             it = pending.find(next_merge)) {
          for (std::size_t j = 0; j < acc_size; ++j) total[j] += it->second[j];
          pending.erase(it);
          ++next_merge;
        }
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      next_block = n_blocks;
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  const double inv = 1.0 / opt.n_monte_carlo;
  result.records.resize(static_cast<std::size_t>(opt.n_iters));
  for (int it = 0; it < opt.n_iters; ++it) {
    const double* row = total.data() + static_cast<std::size_t>(it) * L.stride();
    IterationRecord& r = result.records[static_cast<std::size_t>(it)];
    r.iter = it;
    r.jpub = row[Layout::jpub] * inv;
    r.msd = row[Layout::msd] * inv;
    r.bnet = row[Layout::bnet] * inv;
    r.coop_rate = row[Layout::paired] > 0.0 ? row[Layout::shares] / row[Layout::paired] : 0.0;
    r.werr.resize(static_cast<std::size_t>(n));
    r.comm_cost.resize(static_cast<std::size_t>(n));
    r.shares.resize(static_cast<std::size_t>(n));
    r.paired.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      r.werr[i] = row[L.werr(k)] * inv;
      r.comm_cost[i] = row[L.comm(k)] * inv;
      r.shares[i] = row[L.agent_shares(k)] * inv;
      r.paired[i] = row[L.agent_paired(k)] * inv;
    }
  }

  if (opt.collect_window_samples) {
    result.window_samples.resize(static_cast<std::size_t>(n));
    for (auto& rs : rep_samples) {
      for (int k = 0; k < n; ++k) {
        auto& dst = result.window_samples[static_cast<std::size_t>(k)];
        auto& src = rs[static_cast<std::size_t>(k)];
        dst.insert(dst.end(), src.begin(), src.end());
      }
    }
  }
  return result;
}

}  // namespace selfnet

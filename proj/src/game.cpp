#include "selfnet/game.hpp"

#include <cmath>
#include <stdexcept>

namespace selfnet {

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  MonteCarloEstimate estimate(int n) const {
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
    return {mean, std::sqrt(var / n)};
  }
};

void check_agent(const DataModel& model, const StageAgent& a) {
  if (a.agent < 0 || a.agent >= model.n_agents()) throw std::out_of_range("stage game: agent index");
  if (a.w_err.size() != model.dim()) throw std::invalid_argument("stage game: error dimension mismatch");
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) throw std::invalid_argument("stage game: alpha must lie in [0,1]");
}

// psi~ = w~ - mu u (u w~ + v), with v recovered from d = u w^o + v.
void error_after_adapt(const DataModel& model, const StageAgent& a, const DataSample& s,
                       Vector& out) {
  const double v = s.d - s.u.dot(model.wo());
  out = a.w_err - a.mu * (s.u.dot(a.w_err) + v) * s.u;
}

double rnorm(const Vector& x, const Matrix& r) { return x.dot(r * x); }

// Per-sample costs of both players alone and after combining.
struct StageSampler {
  const DataModel& model;
  const StageAgent& k;
  const StageAgent& l;
  Moments alone_k, combined_k, benefit_k, alone_l, combined_l, benefit_l;

  void run(int n_samples, RandomStream& rng) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
    check_agent(model, k);
    check_agent(model, l);
    const Matrix& rk = model.covariance(k.agent);
    const Matrix& rl = model.covariance(l.agent);
    DataSample sk, sl;
    Vector ek, el, mix;
    for (int s = 0; s < n_samples; ++s) {
      generate_sample_into(model, k.agent, rng, sk);
      generate_sample_into(model, l.agent, rng, sl);
      error_after_adapt(model, k, sk, ek);
      error_after_adapt(model, l, sl, el);
      mix = k.alpha * ek + (1.0 - k.alpha) * el;
      const double ak = rnorm(ek, rk), ck = rnorm(mix, rk);
      mix = l.alpha * el + (1.0 - l.alpha) * ek;
      const double al = rnorm(el, rl), cl = rnorm(mix, rl);
      alone_k.add(ak);
      combined_k.add(ck);
      benefit_k.add(ak - ck);
      alone_l.add(al);
      combined_l.add(cl);
      benefit_l.add(al - cl);
    }
  }
};

}  // namespace

MonteCarloEstimate exact_benefit(const DataModel& model, const StageAgent& k,
                                 const StageAgent& l, int n_samples, RandomStream& rng) {
  StageSampler s{model, k, l, {}, {}, {}, {}, {}, {}};
  s.run(n_samples, rng);
  return s.benefit_k.estimate(n_samples);
}

StageGameTable stage_game(const DataModel& model, const StageAgent& k, const StageAgent& l,
                          int n_samples, RandomStream& rng) {
  StageSampler s{model, k, l, {}, {}, {}, {}, {}, {}};
  s.run(n_samples, rng);
  const double sk = model.noise_var(k.agent), sl = model.noise_var(l.agent);
  // J of a player depends only on whether the opponent shares.
  const double jk[2] = {s.alone_k.estimate(n_samples).mean + sk,
                        s.combined_k.estimate(n_samples).mean + sk};
  const double jl[2] = {s.alone_l.estimate(n_samples).mean + sl,
                        s.combined_l.estimate(n_samples).mean + sl};
  StageGameTable t;
  for (int ak = 0; ak < 2; ++ak) {
    for (int al = 0; al < 2; ++al) {
      t.payoffs[ak][al][0] = jk[al] + ak * k.comm_cost;
      t.payoffs[ak][al][1] = jl[ak] + al * l.comm_cost;
    }
  }
  t.benefit_k = s.benefit_k.estimate(n_samples);
  t.benefit_l = s.benefit_l.estimate(n_samples);
  return t;
}

bool no_share_dominant(const StageGameTable& t) {
  for (int other = 0; other < 2; ++other) {
    if (t.payoffs[0][other][0] > t.payoffs[1][other][0]) return false;
    if (t.payoffs[other][0][1] > t.payoffs[other][1][1]) return false;
  }
  return true;
}

std::string_view to_string(ParetoLabel label) {
  switch (label) {
    case ParetoLabel::share_dominates: return "ShareDominatesPareto";
    case ParetoLabel::no_share_dominates: return "NoShareDominatesPareto";
    case ParetoLabel::mixed: return "Mixed";
  }
  return "?";
}

ParetoVerdict pareto_classify(double benefit_k, double benefit_l, double c_k, double c_l) {
  if (!(c_k > 0.0) || !(c_l > 0.0)) throw std::invalid_argument("pareto_classify: costs must be positive");
  ParetoVerdict v{benefit_k / c_k, benefit_l / c_l, ParetoLabel::mixed};
  if (v.gamma_k > 1.0 && v.gamma_l > 1.0) {
    v.label = ParetoLabel::share_dominates;
  } else if (v.gamma_k < 1.0 && v.gamma_l < 1.0) {
    v.label = ParetoLabel::no_share_dominates;
  }
  return v;
}

int default_horizon(double delta, double tol) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tol must lie in (0,1)");
  return static_cast<int>(std::ceil(std::log(tol) / std::log(delta)));
}

ThresholdOracle appendix_threshold_oracle(double benefit, double c, double delta, double r,
                                          double theta_lk, double theta_kl, int horizon,
                                          double tol) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("r must lie in (0,1)");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (horizon < 1 || std::pow(delta, horizon) >= tol) {
    throw std::invalid_argument("horizon too small for tol");
  }
  // Opponent's view of k after k withholds (theta0) or shares (theta1) now and
  // keeps doing so; the opponent then shares with probability theta * theta_lk.
  double theta0 = theta_kl, theta1 = theta_kl;
  double disc = 1.0;
  double diff = c;
  for (int t = 1; t <= horizon; ++t) {
    disc *= delta;
    theta0 = r * theta0;
    theta1 = r * theta1 + (1.0 - r);
    diff += disc * c + disc * (theta0 - theta1) * theta_lk * benefit;
  }
  const double scale = (c + theta_lk * std::abs(benefit)) / (1.0 - delta);
  const double tail = disc * delta * scale;
  ThresholdOracle out;
  out.difference = diff;
  out.boundary = std::abs(diff) <= tail + tol * scale;
  out.share = diff < 0.0;
  return out;
}

}  // namespace selfnet

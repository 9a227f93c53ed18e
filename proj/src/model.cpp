#include "selfnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace selfnet {

namespace {

constexpr double kSymmetryTol = 1e-10;
const double kSqrt3 = std::sqrt(3.0);

double whitened(Distribution shape, RandomStream& rng) {
  if (shape == Distribution::gaussian) return rng.normal();
  return kSqrt3 * (2.0 * rng.uniform01() - 1.0);
}

}  // namespace

std::string_view to_string(Distribution d) {
  return d == Distribution::gaussian ? "gaussian" : "uniform";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "gaussian") return Distribution::gaussian;
  if (name == "uniform") return Distribution::uniform;
  throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

DataModel::DataModel(Vector wo, std::vector<Matrix> covariances,
                     std::vector<double> noise_vars, Distribution distribution)
    : wo_(std::move(wo)),
      covariances_(std::move(covariances)),
      noise_vars_(std::move(noise_vars)),
      distribution_(distribution) {
  const auto m = wo_.size();
  if (m == 0) throw std::invalid_argument("model: target vector is empty");
  if (covariances_.empty()) throw std::invalid_argument("model: no agents");
  if (noise_vars_.size() != covariances_.size()) {
    throw std::invalid_argument("model: expected one noise variance per agent");
  }
  factors_.reserve(covariances_.size());
  for (std::size_t k = 0; k < covariances_.size(); ++k) {
    const Matrix& r = covariances_[k];
    if (r.rows() != m || r.cols() != m) {
      throw std::invalid_argument("model: covariance " + std::to_string(k) +
                                  " has wrong dimensions");
    }
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    if ((r - r.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
      throw std::invalid_argument("model: covariance " + std::to_string(k) +
                                  " is not symmetric");
    }
    Eigen::LLT<Matrix> llt(r);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("model: covariance " + std::to_string(k) +
                                  " is not positive-definite");
    }
    if (!(noise_vars_[k] > 0.0)) {
      throw std::invalid_argument("model: noise variance " + std::to_string(k) +
                                  " must be positive");
    }
    Factor f;
    f.chol = llt.matrixL();
    Matrix off = r;
    off.diagonal().setZero();
    f.diagonal = off.cwiseAbs().maxCoeff() == 0.0;
    f.diag_sqrt = r.diagonal().cwiseSqrt();
    factors_.push_back(std::move(f));
  }
}

std::size_t DataModel::check(int k) const {
  if (k < 0 || k >= n_agents()) {
    throw std::out_of_range("agent index " + std::to_string(k) + " out of range");
  }
  return static_cast<std::size_t>(k);
}

const Matrix& DataModel::covariance(int k) const { return covariances_[check(k)]; }

double DataModel::noise_var(int k) const { return noise_vars_[check(k)]; }

Topology::Topology(int n_agents)
    : neighbors_(static_cast<std::size_t>(n_agents)),
      adjacency_(static_cast<std::size_t>(n_agents),
                 std::vector<bool>(static_cast<std::size_t>(n_agents), false)) {
  for (int k = 0; k < n_agents; ++k) adjacency_[k][k] = true;
}

Topology Topology::full(int n_agents) {
  if (n_agents <= 0) throw std::invalid_argument("topology: n_agents must be positive");
  Topology t(n_agents);
  for (int k = 0; k < n_agents; ++k) {
    for (int l = 0; l < n_agents; ++l) {
      t.adjacency_[k][l] = true;
      if (l != k) t.neighbors_[k].push_back(l);
    }
  }
  return t;
}

Topology Topology::from_edges(int n_agents,
                              const std::vector<std::pair<int, int>>& edges) {
  if (n_agents <= 0) throw std::invalid_argument("topology: n_agents must be positive");
  Topology t(n_agents);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_agents || b >= n_agents) {
      throw std::invalid_argument("topology: edge (" + std::to_string(a) + "," +
                                  std::to_string(b) + ") references a missing agent");
    }
    if (a == b) continue;
    t.adjacency_[a][b] = true;
    t.adjacency_[b][a] = true;
  }
  for (int k = 0; k < n_agents; ++k) {
    for (int l = 0; l < n_agents; ++l) {
      if (l != k && t.adjacency_[k][l]) t.neighbors_[k].push_back(l);
    }
  }
  return t;
}

bool Topology::adjacent(int k, int l) const {
  return adjacency_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(l));
}

const std::vector<int>& Topology::neighbors(int k) const {
  return neighbors_.at(static_cast<std::size_t>(k));
}

bool Topology::is_connected() const {
  const int n = n_agents();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int k = frontier.front();
    frontier.pop();
    for (int l : neighbors_[k]) {
      if (!seen[l]) {
        seen[l] = true;
        ++reached;
        frontier.push(l);
      }
    }
  }
  return reached == n;
}

bool Topology::is_complete() const {
  for (const auto& nb : neighbors_) {
    if (static_cast<int>(nb.size()) != n_agents() - 1) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> Topology::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k < n_agents(); ++k) {
    for (int l : neighbors_[k]) {
      if (k < l) out.emplace_back(k, l);
    }
  }
  return out;
}

void AgentParams::validate() const {
  auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (!(comm_cost > 0.0)) throw std::invalid_argument("comm_cost must be positive");
  if (!open_unit(discount)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!open_unit(smoothing)) throw std::invalid_argument("r must lie in (0,1)");
  if (!open_unit(rep_floor)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (!open_unit(forget)) throw std::invalid_argument("nu must lie in (0,1)");
}

ReputationTable::ReputationTable(const std::vector<int>& neighbors, double initial)
    : ids_(neighbors), values_(neighbors.size(), initial) {
  std::sort(ids_.begin(), ids_.end());
}

std::size_t ReputationTable::index_of(int l) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), l);
  if (it == ids_.end() || *it != l) {
    throw std::out_of_range("no reputation entry for agent " + std::to_string(l));
  }
  return static_cast<std::size_t>(it - ids_.begin());
}

bool ReputationTable::contains(int l) const {
  return std::binary_search(ids_.begin(), ids_.end(), l);
}

double ReputationTable::at(int l) const { return values_[index_of(l)]; }

void ReputationTable::set(int l, double value) { values_[index_of(l)] = value; }

AgentState AgentState::initial(int dim, const std::vector<int>& neighbors) {
  AgentState s;
  s.w = Vector::Zero(dim);
  s.psi = Vector::Zero(dim);
  s.wo_hat = Vector::Zero(dim);
  s.reputations = ReputationTable(neighbors, 1.0);
  return s;
}

void generate_sample_into(const DataModel& model, int agent, RandomStream& rng,
                          DataSample& out) {
  const int m = model.dim();
  const Distribution shape = model.distribution();
  out.u.resize(m);
  if (model.is_diagonal(agent)) {
    const Vector& s = model.diagonal_sqrt(agent);
    for (int j = 0; j < m; ++j) out.u[j] = s[j] * whitened(shape, rng);
  } else {
    Vector z(m);
    for (int j = 0; j < m; ++j) z[j] = whitened(shape, rng);
    out.u.noalias() = model.cholesky(agent).triangularView<Eigen::Lower>() * z;
  }
  const double v = std::sqrt(model.noise_var(agent)) * whitened(shape, rng);
  out.d = out.u.dot(model.wo()) + v;
}

DataSample generate_sample(const DataModel& model, int agent, RandomStream& rng) {
  DataSample s;
  generate_sample_into(model, agent, rng, s);
  return s;
}

double weighted_error(const Vector& w, const DataModel& model, int agent) {
  if (w.size() != model.dim()) throw std::invalid_argument("weighted_error: dimension mismatch");
  const Vector err = model.wo() - w;
  if (model.is_diagonal(agent)) {
    return err.cwiseAbs2().dot(model.covariance(agent).diagonal());
  }
  return err.dot(model.covariance(agent) * err);
}

double estimation_cost(const Vector& w, const DataModel& model, int agent) {
  return weighted_error(w, model, agent) + model.noise_var(agent);
}

}  // namespace selfnet

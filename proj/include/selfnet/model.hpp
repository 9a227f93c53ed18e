#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfnet/rng.hpp"

namespace selfnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Shape of the whitened regressor and noise variates. Both are scaled to
/// zero mean and unit variance before coloring.
enum class Distribution { gaussian, uniform };

std::string_view to_string(Distribution d);
Distribution parse_distribution(std::string_view name);

/// Generative linear-regression environment d = u w^o + v.
///
/// Immutable after construction; safe to share read-only across runs.
class DataModel {
 public:
  /// Throws std::invalid_argument if any covariance is not symmetric
  /// positive-definite, any noise variance is non-positive, or dimensions
  /// disagree.
  DataModel(Vector wo, std::vector<Matrix> covariances,
            std::vector<double> noise_vars,
            Distribution distribution = Distribution::gaussian);

  int dim() const { return static_cast<int>(wo_.size()); }
  int n_agents() const { return static_cast<int>(covariances_.size()); }

  const Vector& wo() const { return wo_; }
  const Matrix& covariance(int k) const;
  double noise_var(int k) const;
  const std::vector<double>& noise_vars() const { return noise_vars_; }
  Distribution distribution() const { return distribution_; }

  bool is_diagonal(int k) const { return factors_[check(k)].diagonal; }
  /// Lower Cholesky factor of R_{u,k}.
  const Matrix& cholesky(int k) const { return factors_[check(k)].chol; }
  /// sqrt of the diagonal of R_{u,k} (meaningful when is_diagonal(k)).
  const Vector& diagonal_sqrt(int k) const { return factors_[check(k)].diag_sqrt; }

 private:
  struct Factor {
    Matrix chol;
    Vector diag_sqrt;
    bool diagonal = false;
  };

  std::size_t check(int k) const;

  Vector wo_;
  std::vector<Matrix> covariances_;
  std::vector<double> noise_vars_;
  std::vector<Factor> factors_;
  Distribution distribution_;
};

/// Undirected network; every neighborhood includes the agent itself.
class Topology {
 public:
  static Topology full(int n_agents);
  /// Edges are 0-based pairs; self-loops and duplicates are ignored.
  static Topology from_edges(int n_agents,
                             const std::vector<std::pair<int, int>>& edges);

  int n_agents() const { return static_cast<int>(neighbors_.size()); }
  bool adjacent(int k, int l) const;
  /// Neighbors of k excluding k itself, ascending.
  const std::vector<int>& neighbors(int k) const;
  bool is_connected() const;
  bool is_complete() const;
  std::vector<std::pair<int, int>> edges() const;

 private:
  explicit Topology(int n_agents);

  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<bool>> adjacency_;
};

/// Tunables of one agent.
struct AgentParams {
  double mu = 0.01;         // step-size
  double alpha = 0.5;       // weight kept on own intermediate estimate
  double comm_cost = 1e-4;  // c_k
  double discount = 0.99;   // delta_k
  double smoothing = 0.95;  // r_k
  double rep_floor = 0.1;   // epsilon
  double forget = 0.01;     // nu

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Reputation scores an agent keeps about its neighbors, keyed by neighbor id.
class ReputationTable {
 public:
  ReputationTable() = default;
  ReputationTable(const std::vector<int>& neighbors, double initial);

  bool contains(int l) const;
  double at(int l) const;
  void set(int l, double value);
  std::size_t size() const { return ids_.size(); }
  const std::vector<int>& ids() const { return ids_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t index_of(int l) const;

  std::vector<int> ids_;
  std::vector<double> values_;
};

struct AgentState {
  Vector w;       // w_{k,i-1}
  Vector psi;     // psi_{k,i}
  Vector wo_hat;  // moving-average estimate of w^o
  ReputationTable reputations;

  /// Zero estimates and unit reputations toward every neighbor.
  static AgentState initial(int dim, const std::vector<int>& neighbors);
};

struct DataSample {
  Vector u;  // regressor (row vector stored as a column)
  double d = 0.0;
};

/// Draws (u_k, d_k) for one agent from the model.
DataSample generate_sample(const DataModel& model, int agent, RandomStream& rng);
/// Same as generate_sample but reuses `out`'s storage.
void generate_sample_into(const DataModel& model, int agent, RandomStream& rng,
                          DataSample& out);

/// ||w^o - w||^2 weighted by R_{u,agent}.
double weighted_error(const Vector& w, const DataModel& model, int agent);
/// Exact MSE cost of estimate w: ||w^o - w||^2_{R} + sigma_v^2.
double estimation_cost(const Vector& w, const DataModel& model, int agent);

}  // namespace selfnet

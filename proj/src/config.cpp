#include "selfnet/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace selfnet {

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error(message), field_(std::move(field)), line_(line) {}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
  if (std::isnan(x)) return ".nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

int line_of(const YAML::Node& n) {
  const int line = n.Mark().line;
  return line >= 0 ? line + 1 : 0;
}

[[noreturn]] void fail(const std::string& field, const YAML::Node& node, const std::string& msg) {
  const int line = node ? line_of(node) : 0;
  std::string text = "field '" + field + "': " + msg;
  if (line > 0) text += " (line " + std::to_string(line) + ")";
  throw ConfigError(field, line, text);
}

double as_double(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(field, n, "expected a number");
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(field, n, "expected a number, got '" + n.Scalar() + "'");
  }
}

long long as_int(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(field, n, "expected an integer");
  try {
    return n.as<long long>();
  } catch (const YAML::Exception&) {
    fail(field, n, "expected an integer, got '" + n.Scalar() + "'");
  }
}

std::string as_string(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(field, n, "expected a string");
  return n.Scalar();
}

std::vector<double> as_list(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) fail(field, n, "expected a list of numbers");
  std::vector<double> out;
  for (const YAML::Node& x : n) out.push_back(as_double(x, field));
  return out;
}

std::vector<double> as_list_of_size(const YAML::Node& n, const std::string& field,
                                    std::size_t size) {
  std::vector<double> out = as_list(n, field);
  if (out.size() != size) {
    fail(field, n, "expected " + std::to_string(size) + " entries, got " + std::to_string(out.size()));
  }
  return out;
}

std::pair<double, double> as_range(const YAML::Node& n, const std::string& field) {
  std::vector<double> v = as_list_of_size(n, field, 2);
  if (!(v[0] <= v[1])) fail(field, n, "range must satisfy low <= high");
  return {v[0], v[1]};
}

// Scalar broadcast to every agent, or one entry per agent.
std::vector<double> per_agent(const YAML::Node& n, const std::string& field, int n_agents) {
  if (n.IsScalar()) return std::vector<double>(static_cast<std::size_t>(n_agents), as_double(n, field));
  return as_list_of_size(n, field, static_cast<std::size_t>(n_agents));
}

template <class Pred>
void check_each(const std::vector<double>& v, const YAML::Node& n, const std::string& field,
                Pred ok, const char* what) {
  for (double x : v) {
    if (!ok(x)) fail(field, n, std::string("must ") + what + ", got " + format_double(x));
  }
}

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

Matrix square_matrix(const YAML::Node& n, const std::string& field, int dim) {
  if (!n.IsSequence() || static_cast<int>(n.size()) != dim) {
    fail(field, n, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    std::vector<double> row = as_list_of_size(n[static_cast<std::size_t>(i)], field, static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

const std::set<std::string> kKnownKeys = {
    "n_agents", "dim",      "mu",     "comm_cost",     "alpha",         "delta",
    "r",        "epsilon",  "nu",     "seed",          "noise_profile", "covariance",
    "target",   "topology", "pairing", "mode",         "distribution",  "n_iters",
    "n_monte_carlo", "steady_fraction", "threads", "sweep", "out", "analysis"};

void parse_covariance(const YAML::Node& node, ExperimentConfig& c, Rng& rng) {
  const std::string field = "covariance";
  const auto n = static_cast<std::size_t>(c.n_agents);
  c.covariances.assign(n, Matrix::Identity(c.dim, c.dim));
  if (!node) return;
  if (!node.IsMap() || node.size() != 1) {
    fail(field, node, "expected one of diagonal, matrix, per_agent_diagonal, per_agent, uniform_diagonal");
  }
  const std::string kind = node.begin()->first.Scalar();
  const YAML::Node v = node.begin()->second;
  const std::string sub = field + "." + kind;
  auto diag = [&](const YAML::Node& x) {
    std::vector<double> d = as_list_of_size(x, sub, static_cast<std::size_t>(c.dim));
    return Matrix(Eigen::Map<const Vector>(d.data(), c.dim).asDiagonal());
  };
  if (kind == "diagonal") {
    c.covariances.assign(n, diag(v));
  } else if (kind == "matrix") {
    c.covariances.assign(n, square_matrix(v, sub, c.dim));
  } else if (kind == "per_agent_diagonal" || kind == "per_agent") {
    if (!v.IsSequence() || v.size() != n) fail(sub, v, "expected one entry per agent");
    for (std::size_t k = 0; k < n; ++k) {
      c.covariances[k] = kind == "per_agent" ? square_matrix(v[k], sub, c.dim) : diag(v[k]);
    }
  } else if (kind == "uniform_diagonal") {
    auto [lo, hi] = as_range(v, sub);
    if (!(lo > 0.0)) fail(sub, v, "entries must be positive");
    std::uniform_real_distribution<double> dist(lo, hi);
    for (std::size_t k = 0; k < n; ++k) {
      Vector d(c.dim);
      for (int j = 0; j < c.dim; ++j) d(j) = dist(rng);
      c.covariances[k] = d.asDiagonal();
    }
  } else {
    fail(field, node, "unknown covariance kind '" + kind + "'");
  }
  for (std::size_t k = 0; k < n; ++k) {
    const Matrix& m = c.covariances[k];
    if (!m.isApprox(m.transpose(), 1e-12) || m.llt().info() != Eigen::Success) {
      fail(field, node, "covariance of agent " + std::to_string(k + 1) +
                            " is not symmetric positive-definite");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              std::optional<std::uint64_t> seed_override) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1,
                      source + ": parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError("", 0, source + ": expected a mapping at top level");
  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    if (!kKnownKeys.count(key)) fail(key, kv.first, "unknown field");
  }
  auto required = [&](const char* key) {
    YAML::Node n = root[key];
    if (!n) throw ConfigError(key, 0, std::string("missing required field '") + key + "'");
    return n;
  };

  ExperimentConfig c;
  {
    YAML::Node n = required("n_agents");
    const long long v = as_int(n, "n_agents");
    if (v < 1 || v > 1000000) fail("n_agents", n, "must be a positive integer");
    c.n_agents = static_cast<int>(v);
  }
  {
    YAML::Node n = required("dim");
    const long long v = as_int(n, "dim");
    if (v < 1 || v > 100000) fail("dim", n, "must be a positive integer");
    c.dim = static_cast<int>(v);
  }
  {
    YAML::Node n = required("mu");
    c.mu = as_double(n, "mu");
    if (!(c.mu > 0.0) || !std::isfinite(c.mu)) fail("mu", n, "must be positive");
  }
  const int na = c.n_agents;
  {
    YAML::Node n = required("comm_cost");
    c.comm_cost = per_agent(n, "comm_cost", na);
    check_each(c.comm_cost, n, "comm_cost", [](double x) { return x > 0.0; }, "be positive");
  }
  auto optional_per_agent = [&](const char* key, double def, auto ok, const char* what) {
    YAML::Node n = root[key];
    if (!n) return std::vector<double>(static_cast<std::size_t>(na), def);
    std::vector<double> v = per_agent(n, key, na);
    check_each(v, n, key, ok, what);
    return v;
  };
  c.alpha = optional_per_agent("alpha", 0.5, [](double x) { return x >= 0.0 && x <= 1.0; }, "lie in [0,1]");
  c.delta = optional_per_agent("delta", 0.99, open_unit, "lie in (0,1)");
  c.r = optional_per_agent("r", 0.95, open_unit, "lie in (0,1)");
  c.epsilon = optional_per_agent("epsilon", 0.1, open_unit, "lie in (0,1)");
  c.nu = optional_per_agent("nu", 0.01, open_unit, "lie in (0,1)");

  if (YAML::Node n = root["seed"]) {
    try {
      c.seed = n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail("seed", n, "expected a nonnegative integer");
    }
  }
  if (seed_override) c.seed = *seed_override;
  Rng model_rng(derive_seed(c.seed, streams::kModel, 0));

  // Draw order is fixed (noise, covariance, target) so defaults are stable.
  {
    YAML::Node n = root["noise_profile"];
    const auto size = static_cast<std::size_t>(na);
    if (!n) {
      std::uniform_real_distribution<double> dist(0.05, 0.15);
      for (std::size_t k = 0; k < size; ++k) c.noise_vars.push_back(dist(model_rng));
    } else if (n.IsMap()) {
      if (!n["uniform"] || n.size() != 1) fail("noise_profile", n, "expected {uniform: [low, high]}");
      auto [lo, hi] = as_range(n["uniform"], "noise_profile");
      std::uniform_real_distribution<double> dist(lo, hi);
      for (std::size_t k = 0; k < size; ++k) c.noise_vars.push_back(dist(model_rng));
    } else {
      c.noise_vars = per_agent(n, "noise_profile", na);
    }
    check_each(c.noise_vars, n, "noise_profile", [](double x) { return x > 0.0 && std::isfinite(x); },
               "be positive");
  }
  parse_covariance(root["covariance"], c, model_rng);
  {
    YAML::Node n = root["target"];
    c.wo.resize(c.dim);
    std::vector<double> v;
    if (!n || n.IsMap()) {
      double lo = -1.0, hi = 1.0;
      if (n) {
        if (!n["uniform"] || n.size() != 1) fail("target", n, "expected a list or {uniform: [low, high]}");
        std::tie(lo, hi) = as_range(n["uniform"], "target");
      }
      std::uniform_real_distribution<double> dist(lo, hi);
      for (int j = 0; j < c.dim; ++j) c.wo(j) = dist(model_rng);
    } else {
      v = as_list_of_size(n, "target", static_cast<std::size_t>(c.dim));
      for (int j = 0; j < c.dim; ++j) c.wo(j) = v[static_cast<std::size_t>(j)];
    }
  }

  {
    YAML::Node n = root["topology"];
    if (!n || (n.IsScalar() && n.Scalar() == "full")) {
      c.full_topology = true;
    } else if (n.IsMap() && n["edges"] && n.size() == 1) {
      c.full_topology = false;
      for (const YAML::Node& e : n["edges"]) {
        std::vector<double> p = as_list_of_size(e, "topology", 2);
        const int a = static_cast<int>(p[0]), b = static_cast<int>(p[1]);
        if (a != p[0] || b != p[1] || a < 1 || b < 1 || a > na || b > na) {
          fail("topology", e, "edge endpoints must be agent numbers in 1.." + std::to_string(na));
        }
        c.edges.emplace_back(a - 1, b - 1);
      }
    } else {
      fail("topology", n, "expected 'full' or {edges: [[k, l], ...]}");
    }
    if (!c.make_topology().is_connected()) fail("topology", n, "network must be connected");
  }
  {
    YAML::Node n = root["pairing"];
    if (n) {
      try {
        c.pairing = parse_pairing_kind(as_string(n, "pairing"));
      } catch (const std::invalid_argument& e) {
        fail("pairing", n, e.what());
      }
    }
    if (c.pairing == PairingKind::full) {
      const Topology t = c.make_topology();
      if (!t.is_complete() || na % 2 != 0) {
        fail("pairing", n, "full pairing needs a complete topology with an even number of agents");
      }
    }
  }
  {
    YAML::Node n = root["mode"];
    auto one = [&](const YAML::Node& x) {
      try {
        return parse_mode(as_string(x, "mode"));
      } catch (const std::invalid_argument& e) {
        fail("mode", x, e.what());
      }
    };
    if (!n || (n.IsScalar() && n.Scalar() == "all")) {
      c.modes.assign(std::begin(kAllModes), std::end(kAllModes));
    } else if (n.IsSequence()) {
      for (const YAML::Node& x : n) c.modes.push_back(one(x));
      if (c.modes.empty()) fail("mode", n, "list must not be empty");
    } else {
      c.modes.push_back(one(n));
    }
    for (std::size_t i = 0; i < c.modes.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (c.modes[i] == c.modes[j]) fail("mode", n, "duplicate mode");
      }
    }
  }
  if (YAML::Node n = root["distribution"]) {
    try {
      c.distribution = parse_distribution(as_string(n, "distribution"));
    } catch (const std::invalid_argument& e) {
      fail("distribution", n, e.what());
    }
  }
  auto positive_int = [&](const char* key, auto& dst, long long lo) {
    YAML::Node n = root[key];
    if (!n) return;
    const long long v = as_int(n, key);
    if (v < lo) fail(key, n, "must be at least " + std::to_string(lo));
    dst = static_cast<std::remove_reference_t<decltype(dst)>>(v);
  };
  positive_int("n_iters", c.n_iters, 1);
  positive_int("n_monte_carlo", c.n_monte_carlo, 1);
  positive_int("threads", c.threads, 0);
  if (YAML::Node n = root["steady_fraction"]) {
    c.steady_fraction = as_double(n, "steady_fraction");
    if (!(c.steady_fraction > 0.0 && c.steady_fraction <= 1.0)) {
      fail("steady_fraction", n, "must lie in (0,1]");
    }
  }
  if (YAML::Node n = root["sweep"]) {
    c.sweep = as_list(n, "sweep");
    if (c.sweep.empty()) fail("sweep", n, "list must not be empty");
    for (std::size_t i = 0; i < c.sweep.size(); ++i) {
      if (!(c.sweep[i] > 0.0) || !std::isfinite(c.sweep[i])) {
        fail("sweep", n, "communication costs must be positive, got " + format_double(c.sweep[i]));
      }
      if (i > 0 && !(c.sweep[i] > c.sweep[i - 1])) fail("sweep", n, "values must be strictly increasing");
    }
  }
  if (YAML::Node n = root["out"]) c.out = as_string(n, "out");
  if (YAML::Node a = root["analysis"]) {
    if (!a.IsMap()) fail("analysis", a, "expected a mapping");
    for (const auto& kv : a) {
      const std::string key = kv.first.Scalar();
      const std::string field = "analysis." + key;
      if (key == "phi") {
        c.phi = as_double(kv.second, field);
        if (!(c.phi > 0.0 && c.phi <= 1.0)) fail(field, kv.second, "must lie in (0,1]");
      } else if (key == "stage_game_samples") {
        const long long v = as_int(kv.second, field);
        if (v < 1 || v > 1000000000) fail(field, kv.second, "must be a positive integer");
        c.stage_game_samples = static_cast<int>(v);
      } else if (key == "pairing_trials") {
        c.pairing_trials = as_int(kv.second, field);
        if (c.pairing_trials < 1) fail(field, kv.second, "must be a positive integer");
      } else {
        fail(field, kv.first, "unknown field");
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, seed);
}

DataModel ExperimentConfig::make_model() const {
  return DataModel(wo, covariances, noise_vars, distribution);
}

Topology ExperimentConfig::make_topology() const {
  return full_topology ? Topology::full(n_agents) : Topology::from_edges(n_agents, edges);
}

std::vector<AgentParams> ExperimentConfig::make_params() const {
  std::vector<AgentParams> out(static_cast<std::size_t>(n_agents));
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = {mu, alpha[k], comm_cost[k], delta[k], r[k], epsilon[k], nu[k]};
  }
  return out;
}

Scenario ExperimentConfig::make_scenario(Mode mode) const {
  return Scenario(make_model(), PairingEngine(pairing, make_topology()), make_params(), mode);
}

RunOptions ExperimentConfig::run_options() const {
  RunOptions o;
  o.n_iters = n_iters;
  o.n_monte_carlo = n_monte_carlo;
  o.seed = seed;
  o.threads = threads;
  o.steady_fraction = steady_fraction;
  return o;
}

namespace {

std::string flow(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + "]";
}

std::string scalar_or_list(const std::vector<double>& v) {
  if (!v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
    return format_double(v.front());
  }
  return flow(v);
}

std::vector<double> row(const Matrix& m, int i) {
  std::vector<double> r(static_cast<std::size_t>(m.cols()));
  for (int j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
  return r;
}

}  // namespace

std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "n_agents: " << c.n_agents << "\n";
  o << "dim: " << c.dim << "\n";
  o << "mu: " << format_double(c.mu) << "\n";
  o << "comm_cost: " << scalar_or_list(c.comm_cost) << "\n";
  o << "alpha: " << scalar_or_list(c.alpha) << "\n";
  o << "delta: " << scalar_or_list(c.delta) << "\n";
  o << "r: " << scalar_or_list(c.r) << "\n";
  o << "epsilon: " << scalar_or_list(c.epsilon) << "\n";
  o << "nu: " << scalar_or_list(c.nu) << "\n";
  o << "seed: " << c.seed << "\n";
  o << "noise_profile: " << flow(c.noise_vars) << "\n";
  const bool diagonal = std::all_of(c.covariances.begin(), c.covariances.end(), [](const Matrix& m) {
    return m.isDiagonal(0.0);
  });
  if (diagonal) {
    o << "covariance:\n  per_agent_diagonal:\n";
    for (const Matrix& m : c.covariances) {
      const Vector d = m.diagonal();
      o << "    - " << flow(std::vector<double>(d.data(), d.data() + d.size())) << "\n";
    }
  } else {
    o << "covariance:\n  per_agent:\n";
    for (const Matrix& m : c.covariances) {
      o << "    -\n";
      for (int i = 0; i < m.rows(); ++i) o << "      - " << flow(row(m, i)) << "\n";
    }
  }
  o << "target: " << flow(std::vector<double>(c.wo.data(), c.wo.data() + c.wo.size())) << "\n";
  if (c.full_topology) {
    o << "topology: full\n";
  } else {
    o << "topology:\n  edges: [";
    for (std::size_t i = 0; i < c.edges.size(); ++i) {
      if (i) o << ", ";
      o << "[" << c.edges[i].first + 1 << ", " << c.edges[i].second + 1 << "]";
    }
    o << "]\n";
  }
  o << "pairing: " << to_string(c.pairing) << "\n";
  o << "mode: [";
  for (std::size_t i = 0; i < c.modes.size(); ++i) o << (i ? ", " : "") << to_string(c.modes[i]);
  o << "]\n";
  o << "distribution: " << to_string(c.distribution) << "\n";
  o << "n_iters: " << c.n_iters << "\n";
  o << "n_monte_carlo: " << c.n_monte_carlo << "\n";
  o << "steady_fraction: " << format_double(c.steady_fraction) << "\n";
  o << "threads: " << c.threads << "\n";
  if (!c.sweep.empty()) o << "sweep: " << flow(c.sweep) << "\n";
  o << "out: \"" << c.out << "\"\n";
  o << "analysis:\n";
  o << "  phi: " << format_double(c.phi) << "\n";
  o << "  stage_game_samples: " << c.stage_game_samples << "\n";
  o << "  pairing_trials: " << c.pairing_trials << "\n";
  return o.str();
}

}  // namespace selfnet

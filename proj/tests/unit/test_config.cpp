#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <iterator>
#include <string>

#include "selfnet/config.hpp"

using namespace selfnet;

namespace {

const std::string kNetwork20 = std::string(SELFNET_SOURCE_DIR) + "/configs/network20.yaml";

const char* kMinimal = R"(n_agents: 4
dim: 2
mu: 0.05
comm_cost: 0.01
)";

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("shipped configs load") {
  const ExperimentConfig c = load_config(kNetwork20);
  CHECK(c.n_agents == 20);
  CHECK(c.dim == 10);
  CHECK(c.mu == 0.01);
  CHECK(c.edges.size() == 57);
  CHECK(c.modes.size() == std::size(kAllModes));
  CHECK(c.sweep.size() == 11);
  CHECK(c.noise_vars.size() == 20);
  for (double s : c.noise_vars) {
    CHECK(s >= 0.05);
    CHECK(s <= 0.15);
  }
  CHECK(c.make_topology().is_connected());
  for (const char* name : {"small_step.yaml", "tiny.yaml"})
    CHECK_NOTHROW(load_config(std::string(SELFNET_SOURCE_DIR) + "/configs/" + name));
}

TEST_CASE("echo is a fixed point") {
  const ExperimentConfig c = load_config(kNetwork20);
  const std::string once = echo_config(c);
  const ExperimentConfig back = parse_config(once);
  CHECK(echo_config(back) == once);
  CHECK(back.noise_vars == c.noise_vars);
  CHECK(back.wo == c.wo);
  CHECK(back.edges == c.edges);

  const ExperimentConfig minimal = parse_config(kMinimal);
  CHECK(echo_config(parse_config(echo_config(minimal))) == echo_config(minimal));
}

TEST_CASE("seed override redraws the randomized defaults") {
  const ExperimentConfig a = parse_config(kMinimal);
  const ExperimentConfig b = parse_config(kMinimal, "<config>", 99);
  const ExperimentConfig b2 = parse_config(std::string(kMinimal) + "seed: 99\n");
  CHECK(b.seed == 99);
  CHECK(a.noise_vars != b.noise_vars);
  CHECK(b.noise_vars == b2.noise_vars);
  CHECK(b.wo == b2.wo);
}

TEST_CASE("missing required keys are named") {
  CHECK(field_of("n_agents: 4\ndim: 2\ncomm_cost: 0.01\n") == "mu");
  CHECK(field_of("n_agents: 4\nmu: 0.1\ncomm_cost: 0.01\n") == "dim");
  CHECK(field_of("dim: 2\nmu: 0.1\ncomm_cost: 0.01\n") == "n_agents");
  CHECK(field_of("n_agents: 4\ndim: 2\nmu: 0.1\n") == "comm_cost");
  try {
    parse_config("n_agents: 4\ndim: 2\ncomm_cost: 0.01\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'mu'") != std::string::npos);
  }
}

TEST_CASE("invalid values are rejected with their field") {
  const std::string base(kMinimal);
  CHECK(field_of(base + "sweep: [0.1, 0.01]\n") == "sweep");
  CHECK(field_of(base + "sweep: [-0.1, 0.01]\n") == "sweep");
  CHECK(field_of(base + "sweep: [0.1, 0.1]\n") == "sweep");
  CHECK(field_of(base + "alpha: 1.5\n") == "alpha");
  CHECK(field_of(base + "alpha: [0.5, 0.5]\n") == "alpha");
  CHECK(field_of(base + "delta: 1.0\n") == "delta");
  CHECK(field_of(base + "r: 0\n") == "r");
  CHECK(field_of(base + "nu: 0\n") == "nu");
  CHECK(field_of(base + "epsilon: -1\n") == "epsilon");
  CHECK(field_of(base + "n_iters: 0\n") == "n_iters");
  CHECK(field_of(base + "steady_fraction: 1.5\n") == "steady_fraction");
  CHECK(field_of(base + "mode: sometimes\n") == "mode");
  CHECK(field_of(base + "pairing: magic\n") == "pairing");
  CHECK(field_of(base + "colour: blue\n") == "colour");
  CHECK(field_of(base + "noise_profile: [0.1, 0.1]\n") == "noise_profile");
  CHECK(field_of(base + "target: [1, 2, 3]\n") == "target");
  CHECK(field_of(base + "topology:\n  edges: [[1, 2], [3, 4]]\n") == "topology");
  CHECK(field_of(base + "topology:\n  edges: [[1, 5]]\n") == "topology");
  CHECK(field_of(base + "covariance:\n  diagonal: [1.0, -2.0]\n") == "covariance");
  CHECK(field_of(base + "covariance:\n  matrix: [[1, 2], [2, 1]]\n") == "covariance");
  CHECK(field_of("n_agents: 3\ndim: 2\nmu: 0.05\ncomm_cost: 0.01\npairing: full\n") == "pairing");
  CHECK(field_of(base.substr(0, base.find("mu")) + "mu: 0\ncomm_cost: 0.01\n") == "mu");
  CHECK(field_of(base.substr(0, base.find("comm_cost")) + "comm_cost: 0\n") == "comm_cost");
}

TEST_CASE("field errors report the line") {
  try {
    parse_config(std::string(kMinimal) + "alpha: 2.0\n");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "alpha");
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("syntax errors report the line") {
  try {
    parse_config("n_agents: 4\ndim: [2\nmu: 0.1\n");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(e.line() > 0);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("mode selection") {
  const std::string base(kMinimal);
  CHECK(parse_config(base + "mode: all\n").modes == std::vector<Mode>(std::begin(kAllModes), std::end(kAllModes)));
  CHECK(parse_config(base + "mode: never_share\n").modes == std::vector<Mode>{Mode::never_share});
  CHECK(parse_config(base + "mode: [always_share, reputation]\n").modes ==
        std::vector<Mode>{Mode::always_share, Mode::reputation});
}

TEST_CASE("per-agent lists and scalars") {
  const ExperimentConfig c = parse_config(std::string(kMinimal) + "alpha: [0.1, 0.2, 0.3, 0.4]\n");
  CHECK(c.alpha == std::vector<double>{0.1, 0.2, 0.3, 0.4});
  CHECK(c.comm_cost == std::vector<double>(4, 0.01));
  const std::vector<AgentParams> p = c.make_params();
  CHECK(p[2].alpha == 0.3);
  CHECK(p[0].mu == 0.05);
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1e-5, 3.1623e-5, 1.0 / 3.0, 2.0, -0.0641, 1e300})
    CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(0.5) == "0.5");
}

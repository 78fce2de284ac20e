#include <doctest.h>

#include "klab/limit_experiments.hpp"
#include "klab/spde.hpp"
#include "klab/stats.hpp"

#include <cmath>

using namespace klab;

namespace {

ExperimentPlan base_plan() {
  ExperimentPlan p;
  p.spec.dimension = 1;
  p.spec.nu = 1.0;
  p.spec.family = KernelFamily::IsotropicScalar;
  p.spec.sigma2 = 0.5;
  p.spec.corr_length = 1.0;
  p.spec.support_radius = 4.0;
  p.grid = Grid{1, 512, 64.0};
  p.dt = 1.0 / 512.0;
  p.ladder = {4.0, 8.0};
  p.replicas = 8;
  p.probe_multipliers = {0.0, 0.5};
  p.c_bulk = 0.25;
  p.treg_steps = 20;
  p.master_seed = 31415;
  p.workers = 2;
  return p;
}

}  // namespace

TEST_CASE("paper beta") {
  CHECK(paper_beta(1) == doctest::Approx(2.0 / 3.0));
  CHECK(paper_beta(2) == doctest::Approx(0.5));
  CHECK(paper_beta(3) == doctest::Approx(0.6));
}

TEST_CASE("plan validation") {
  auto p = base_plan();
  CHECK_NOTHROW(p.validate());

  SUBCASE("beta out of range") {
    p.beta = 1.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
  }
  SUBCASE("non-dyadic ladder") {
    p.ladder = {4.0, 12.0};
    CHECK_THROWS_AS(p.validate(), ConfigError);
  }
  SUBCASE("probe outside the diffusive bulk") {
    p.probe_multipliers = {0.0, 3.0};
    CHECK_THROWS_AS(p.validate(), ConfigError);
  }
  SUBCASE("ladder times must sit on the step grid") {
    p.ladder = {4.0 + 1e-4, 8.0 + 2e-4};
    CHECK_THROWS_AS(p.validate(), ConfigError);
  }
  SUBCASE("too few replicas") {
    p.replicas = 1;
    CHECK_THROWS_AS(p.validate(), InsufficientReplicas);
  }
}

TEST_CASE("probe points are snapped to the grid and in the bulk") {
  const auto p = base_plan();
  const auto pts = probe_points(p, 8.0);
  CHECK(pts.size() == 2);
  for (const auto& x : pts) {
    const double ratio = x[0] / p.grid.dx();
    CHECK(std::abs(ratio - std::round(ratio)) < 1e-12);
  }
}

TEST_CASE("rate fit guards") {
  ErrorCurve c;
  c.t = {1, 2};
  c.mean = {1.0, 0.5};
  CHECK_THROWS_AS(rate_fit(c), ConfigError);
  c.t = {1, 2, 4, 8};
  c.mean = {1.0, 0.5, 0.0, 0.1};
  c.per_replica = {{1, 0.5, 0, 0.1}, {1, 0.5, 0, 0.1}};
  CHECK_THROWS_AS(rate_fit(c), std::runtime_error);
}

TEST_CASE("zero amplitude: turning off the noise changes nothing") {
  auto p = base_plan();
  p.spec.sigma2 = 0.0;
  p.replicas = 2;
  const auto res = run_llt(p);
  for (const auto& row : res.turnoff_gap.per_replica)
    for (double v : row) CHECK(v < 1e-24);
  // the product curve reduces to the heat-solver floor; finite and tiny
  for (double v : res.product_error.mean) CHECK(v < 1e-7);
}

TEST_CASE("small end-to-end run: curves finite, positive, deterministic") {
  const auto p = base_plan();
  const auto res = run_llt(p);
  for (const auto& c : {res.turnoff_gap, res.product_error, res.ratio_error, res.clt_error}) {
    REQUIRE(c.mean.size() == p.ladder.size());
    for (double v : c.mean) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
  }
  CHECK(res.min_u_seen > -1e-3);

  const auto res2 = run_llt(p);
  CHECK(res.product_error.mean == res2.product_error.mean);
}

TEST_CASE("conditioning correctness: averaged conditional solution is the heat flow") {
  auto p = base_plan();
  p.replicas = 48;
  p.ladder = {4.0};
  const double q = p.layer_start(4.0);
  const double treg = p.treg_steps * p.dt;

  // replica average of u~_q(t, x) against the discrete heat evolution
  std::vector<double> vals;
  const auto probes = probe_points(p, 4.0);
  std::vector<std::vector<double>> per_probe(probes.size());
  for (int r = 0; r < p.replicas; ++r) {
    const Environment env(p.spec, p.grid, p.dt, p.master_seed, uint32_t(r), SynthOptions{});
    SpdeSolver tilde(p.spec, p.grid, p.dt);
    tilde.init_gaussian(treg, 0.0);
    tilde.advance_heat(q);
    tilde.advance_with_noise(env, 4.0);
    for (std::size_t pi = 0; pi < probes.size(); ++pi)
      per_probe[pi].push_back(tilde.state().at(probes[pi]));
  }
  SpdeSolver heat(p.spec, p.grid, p.dt);
  heat.init_gaussian(treg, 0.0);
  heat.advance_heat(4.0);
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const auto est = stats::mean_se(per_probe[pi]);
    CHECK(std::abs(est.value - heat.state().at(probes[pi])) < 3.5 * est.se);
  }
}

#include <doctest.h>

#include "klab/flow.hpp"
#include "klab/stats.hpp"

#include <cmath>
#include <vector>

using namespace klab;

namespace {

CovarianceSpec scalar_d1(double sigma2 = 0.5) {
  CovarianceSpec s;
  s.dimension = 1;
  s.nu = 1.0;
  s.family = KernelFamily::IsotropicScalar;
  s.sigma2 = sigma2;
  s.corr_length = 1.0;
  s.support_radius = 4.0;
  return s;
}

CovarianceSpec incompressible_d2() {
  CovarianceSpec s;
  s.dimension = 2;
  s.nu = 1.0;
  s.family = KernelFamily::Incompressible;
  s.sigma2 = 0.5;
  s.corr_length = 1.0;
  s.support_radius = 4.0;
  return s;
}

const Grid g1{1, 128, 32.0};
const Grid g2{2, 128, 32.0};

}  // namespace

TEST_CASE("zero field reduces to Brownian motion") {
  auto s = scalar_d1(0.0);
  const double T = 1.0, dt = 1.0 / 64.0;
  const auto run = simulate_ensemble(s, g1, 4000, T, dt, 77, 0);
  const auto& m = run.moments.back();
  CHECK(std::abs(m.mean[0]) < 3.0 * std::sqrt(s.nu * T / 4000.0));
  const double se_var = s.nu * T * std::sqrt(2.0 / 4000.0);
  CHECK(std::abs(m.cov(0, 0) - s.nu * T) < 3.0 * se_var);
}

TEST_CASE("determinism: same seeds give identical trajectories") {
  const auto s = scalar_d1();
  const auto a = simulate_ensemble(s, g1, 50, 0.5, 1.0 / 64.0, 123, 4);
  const auto b = simulate_ensemble(s, g1, 50, 0.5, 1.0 / 64.0, 123, 4);
  CHECK(a.state.pos == b.state.pos);
  const auto c = simulate_ensemble(s, g1, 50, 0.5, 1.0 / 64.0, 123, 5);
  CHECK(a.state.pos != c.state.pos);
}

TEST_CASE("annealed covariance matches nu I + R(0) at several dt") {
  // The annealed statistic is the second moment about the origin pooled over
  // replicas: within one environment the particles share the field, so the
  // per-replica spread alone underestimates the covariance. The per-step
  // increment is read at the pre-step position and is independent of it, so
  // the pooled moment is unbiased at every dt; these are pure noise gates.
  const auto s = scalar_d1();
  const double T = 0.5;
  const Mat D = effective_diffusivity(s);
  for (const double dt : {1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0}) {
    const int reps = 24;
    std::vector<double> m2;
    for (int r = 0; r < reps; ++r) {
      const auto run = simulate_ensemble(s, g1, 400, T, dt, 2024, uint32_t(r));
      m2.push_back(run.moments.back().second_moment(0, 0));
    }
    const auto est = stats::mean_se(m2);
    CHECK(std::abs(est.value - D(0, 0) * T) < 3.5 * est.se);
  }
}

TEST_CASE("displacement statistics are translation invariant") {
  const auto s = scalar_d1();
  const double dt = 1.0 / 64.0;
  std::vector<double> var_at_start(3, 0.0);
  const double starts[3] = {0.0, 11.3, 23.7};
  const int reps = 16;
  for (int b = 0; b < 3; ++b) {
    std::vector<double> vs;
    for (int r = 0; r < reps; ++r) {
      ParticleEnsemble ens = make_ensemble_at_origin(1, 500, dt, 55, uint32_t(r));
      for (auto& p : ens.pos) p = starts[b];
      SynthOptions opts;
      opts.need_node_values = false;
      opts.upsample = 4;
      const Environment env(s, g1, dt, 55, uint32_t(r), opts);
      for (long k = 0; k < 32; ++k) step_particles(ens, env.increment(k), s.nu);
      double acc = 0.0;
      for (std::size_t p = 0; p < ens.size(); ++p) {
        const double d = ens.pos[p] - starts[b];
        acc += d * d;
      }
      vs.push_back(acc / double(ens.size()));
    }
    var_at_start[b] = stats::mean(vs);
  }
  const double scale = var_at_start[0];
  CHECK(std::abs(var_at_start[1] - scale) < 0.25 * scale);
  CHECK(std::abs(var_at_start[2] - scale) < 0.25 * scale);
}

TEST_CASE("environment reuse guards") {
  const auto s = scalar_d1();
  const double dt = 1.0 / 64.0;
  ParticleEnsemble ens = make_ensemble_at_origin(1, 4, dt, 9, 0);
  SynthOptions opts;
  opts.upsample = 4;
  const auto inc_wrong_replica = synthesize_increment(s, g1, dt, 9, 1, 0, opts);
  CHECK_THROWS_AS(step_particles(ens, inc_wrong_replica, s.nu), std::logic_error);
  const auto inc_wrong_slot = synthesize_increment(s, g1, dt, 9, 0, 3, opts);
  CHECK_THROWS_AS(step_particles(ens, inc_wrong_slot, s.nu), std::logic_error);
  const auto inc_wrong_dt = synthesize_increment(s, g1, dt / 2, 9, 0, 0, opts);
  CHECK_THROWS_AS(step_particles(ens, inc_wrong_dt, s.nu), std::logic_error);
}

TEST_CASE("flow map: identity at t = s, volume behavior per family") {
  const double dt = 1.0 / 128.0;

  const auto sc = scalar_d1();
  const auto fm0 = flow_map(sc, g1, 64, 0.25, 0.25, dt, 31, 0);
  const auto det0 = flow_jacobian(fm0);
  for (double v : det0) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // incompressible: volume preservation up to the O(delta^2 + sqrt(dt))
  // discretization terms; joint lattice/step refinement must shrink it
  const auto si = incompressible_d2();
  auto max_dev = [&](int m, double dts) {
    const auto fm = flow_map(si, g2, m, 0.0, 1.0 / 32.0, dts, 32, 0);
    double worst = 0.0;
    for (double v : flow_jacobian(fm)) {
      CHECK(v > 0.0);
      worst = std::max(worst, std::abs(v - 1.0));
    }
    return worst;
  };
  const double dev_coarse = max_dev(64, 1.0 / 256.0);
  const double dev_fine = max_dev(128, 1.0 / 1024.0);
  CHECK(dev_fine < 0.7 * dev_coarse);
  CHECK(dev_fine < 0.08);

  // compressible: only the spatial mean is conserved
  const auto fmc = flow_map(sc, g1, 256, 0.0, 0.5, dt, 33, 0);
  const auto detc = flow_jacobian(fmc);
  double mean = 0.0, mn = 1e9;
  for (double v : detc) {
    mean += v;
    mn = std::min(mn, v);
  }
  mean /= double(detc.size());
  CHECK(mn > 0.0);
  CHECK(std::abs(mean - 1.0) < 0.02);
}

TEST_CASE("pair separations: Brownian limit") {
  auto s = scalar_d1(0.0);
  const double T = 0.5, dt = 1.0 / 64.0, s0 = 0.5;
  const auto sep = simulate_pair_separations(s, g1, 3000, s0, T, dt, 44, 0);
  std::vector<double> sq;
  for (double z : sep) sq.push_back(z * z);
  const auto est = stats::mean_se(sq);
  const double expected = s0 * s0 + 2.0 * s.nu * T;  // Z = r + B1 - B2
  CHECK(std::abs(est.value - expected) < 3.0 * est.se);
}

TEST_CASE("default dt satisfies both stability heuristics") {
  const auto s = scalar_d1();
  const double dt = default_dt(s, g1);
  const double dx = g1.dx();
  CHECK(dt <= dx * dx / (4.0 * 1.0 * (s.nu + s.sigma2)) + 1e-15);
  CHECK(dt <= std::pow(dx / (4.0 * std::sqrt(s.sigma2)), 2) + 1e-15);
}

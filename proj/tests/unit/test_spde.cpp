#include <doctest.h>

#include "klab/density_field.hpp"
#include "klab/spde.hpp"
#include "klab/stats.hpp"

#include <cmath>
#include <vector>

using namespace klab;

namespace {

CovarianceSpec scalar_d1(double sigma2 = 0.5, double nu = 1.0) {
  CovarianceSpec s;
  s.dimension = 1;
  s.nu = nu;
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

const Grid g1{1, 256, 64.0};
const Grid g2{2, 128, 32.0};

}  // namespace

TEST_CASE("gaussian density values") {
  // d=1 with nu + R(0) = 1: the standard normal at the origin
  auto s = scalar_d1(0.5, 0.5);
  Vec x = Vec::Zero(1);
  CHECK(gaussian_density(s, 1.0, x) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_density(s, 0.0, x), std::domain_error);
  CHECK_THROWS_AS(gaussian_density(s, -1.0, x), std::domain_error);

  // trapezoid mass on a wide grid
  const double h = 0.01;
  double mass = 0.0;
  for (double xx = -20.0; xx <= 20.0; xx += h) {
    Vec p(1);
    p << xx;
    mass += gaussian_density(s, 1.0, p) * h;
  }
  CHECK(std::abs(mass - 1.0) < 1e-8);

  // d=2 diagonal diffusivity factorizes into 1-d Gaussians
  auto s2 = incompressible_d2();
  Vec y(2);
  y << 0.7, -1.3;
  Vec y0(1), y1(1);
  y0 << y[0];
  y1 << y[1];
  auto s1d = scalar_d1(s2.sigma2, s2.nu);  // same scalar diffusivity per axis
  const double prod = gaussian_density(s1d, 2.0, y0) * gaussian_density(s1d, 2.0, y1);
  CHECK(gaussian_density(s2, 2.0, y) == doctest::Approx(prod).epsilon(1e-12));
}

TEST_CASE("pure diffusion converges to the heat kernel at first order in dt") {
  auto s = scalar_d1(0.0);
  const double treg = 0.25, T = 1.0;
  double prev_err = 0.0;
  std::vector<double> errs;
  for (const double dt : {1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0}) {
    SpdeSolver solver(s, g1, dt);
    solver.init_gaussian(treg, 0.0);
    solver.advance_heat(T);
    double err = 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
      const Vec x = g1.fold(g1.node(i));
      err = std::max(err, std::abs(solver.state().values[i] -
                                   gaussian_density_periodized(s, T + treg, x, g1.box_length)));
    }
    errs.push_back(err);
    prev_err = err;
  }
  (void)prev_err;
  CHECK(errs[0] / errs[1] > 1.6);  // first order in dt
  CHECK(errs[0] / errs[1] < 2.4);
  CHECK(errs[1] / errs[2] > 1.6);
  CHECK(errs[1] / errs[2] < 2.4);
}

TEST_CASE("heat flow equals noisy stepping with zero amplitude") {
  auto s = scalar_d1(0.0);
  const double dt = 1.0 / 128.0;
  SpdeSolver a(s, g1, dt), b(s, g1, dt);
  a.init_gaussian(0.25, 0.0);
  b.init_gaussian(0.25, 0.0);
  const Environment env(s, g1, dt, 5, 0, SynthOptions{});
  a.advance_with_noise(env, 0.5);
  b.advance_heat(0.5);
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(a.state().values[i] == doctest::Approx(b.state().values[i]).epsilon(1e-12));
}

TEST_CASE("mass conservation and negativity monitor under rough noise") {
  const auto s = scalar_d1();
  const Grid g{1, 512, 64.0};  // the shipped l/8 resolution
  const double dt = 1.0 / 512.0;
  SpdeSolver solver(s, g, dt);
  solver.init_gaussian(20 * dt, 0.0);
  const Environment env(s, g, dt, 99, 3, SynthOptions{});
  solver.advance_with_noise(env, 8.0);  // 4096 steps
  CHECK(solver.mass_drift() < 1e-12);
  CHECK(solver.min_seen() > -1e-4 * solver.max_seen());
}

TEST_CASE("incompressible increments preserve constants exactly") {
  const auto s = incompressible_d2();
  const double dt = 1.0 / 256.0;
  SpdeSolver solver(s, g2, dt);
  solver.init_constant(1.0, 0.0);
  const Environment env(s, g2, dt, 42, 0, SynthOptions{});
  solver.advance_with_noise(env, 1.0);  // 256 steps
  for (double v : solver.state().values) CHECK(std::abs(v - 1.0) < 1e-12);
}

TEST_CASE("solver linearity to round-off") {
  const auto s = scalar_d1();
  const double dt = 1.0 / 128.0;
  const double a = 0.7, b = -1.3;

  auto evolve = [&](DensityField f) {
    SpdeSolver solver(s, g1, dt);
    f.time = 0.0;
    solver.init_field(std::move(f));
    const Environment env(s, g1, dt, 314, 2, SynthOptions{});
    solver.advance_with_noise(env, 0.5);
    return solver.take_state();
  };

  DensityField f = gaussian_field(s, 0.5, g1);
  DensityField g = constant_field(g1, 1.0);
  DensityField combo = constant_field(g1, 0.0);
  for (std::size_t i = 0; i < g1.size(); ++i)
    combo.values[i] = a * f.values[i] + b * g.values[i];

  const auto ef = evolve(f);
  const auto eg = evolve(g);
  const auto ec = evolve(combo);
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(ec.values[i] ==
          doctest::Approx(a * ef.values[i] + b * eg.values[i]).epsilon(1e-10));
}

TEST_CASE("replica-averaged solution follows the discrete heat flow") {
  const auto s = scalar_d1();
  const double dt = 1.0 / 128.0;
  const double T = 1.0;
  const int reps = 48;
  const std::size_t probes[5] = {128, 132, 140, 150, 170};

  std::vector<std::vector<double>> vals(5);
  for (int r = 0; r < reps; ++r) {
    SpdeSolver solver(s, g1, dt);
    solver.init_gaussian(0.25, 0.0);
    const Environment env(s, g1, dt, 2718, uint32_t(r), SynthOptions{});
    solver.advance_with_noise(env, T);
    for (int p = 0; p < 5; ++p) vals[p].push_back(solver.state().values[probes[p]]);
  }
  SpdeSolver heat(s, g1, dt);
  heat.init_gaussian(0.25, 0.0);
  heat.advance_heat(T);
  for (int p = 0; p < 5; ++p) {
    const auto est = stats::mean_se(vals[p]);
    CHECK(std::abs(est.value - heat.state().values[probes[p]]) < 3.5 * est.se);
  }
}

TEST_CASE("discrete weak form holds to round-off for band-limited tests") {
  const auto s = scalar_d1();
  const double dt = 1.0 / 128.0;
  const int steps = 64;
  const double kf = 2.0 * M_PI / g1.box_length;
  const double kh = 3.0 * kf;  // test function h(x) = sin(k x)
  const Mat D = effective_diffusivity(s);

  SpdeSolver solver(s, g1, dt);
  solver.init_gaussian(0.25, 0.0);
  const Environment env(s, g1, dt, 55, 7, SynthOptions{});

  const double dx = g1.dx();
  auto inner = [&](const std::vector<double>& u, auto&& fn) {
    double acc = 0.0;
    for (int i = 0; i < g1.n; ++i) acc += u[i] * fn(i * dx);
    return acc * dx;
  };

  double lhs0 = inner(solver.state().values, [&](double x) { return std::sin(kh * x); });
  double accum = 0.0;
  for (int k = 0; k < steps; ++k) {
    const auto& u = solver.state().values;
    const auto inc = env.increment(k);
    accum += dt * inner(u, [&](double x) { return -0.5 * D(0, 0) * kh * kh * std::sin(kh * x); });
    // transport term: <u, dV h'>
    double acc = 0.0;
    for (int i = 0; i < g1.n; ++i)
      acc += u[i] * inc.comps[0][i] * kh * std::cos(kh * i * dx);
    accum += acc * dx;
    solver.step(inc);
  }
  const double lhs = inner(solver.state().values, [&](double x) { return std::sin(kh * x); });
  CHECK(std::abs(lhs - lhs0 - accum) < 1e-12);
}

TEST_CASE("same replica and interval reproduce the identical field") {
  const auto s = scalar_d1();
  const double dt = 1.0 / 128.0;
  auto run = [&](uint32_t replica) {
    SpdeSolver solver(s, g1, dt);
    solver.init_gaussian(0.25, 0.0);
    const Environment env(s, g1, dt, 1001, replica, SynthOptions{});
    solver.advance_with_noise(env, 0.5);
    return solver.take_state().values;
  };
  CHECK(run(3) == run(3));
  CHECK(run(3) != run(4));
}

TEST_CASE("kde: degenerate cloud, mass, consistency in N") {
  const Grid g{1, 512, 64.0};
  SUBCASE("all points at the origin") {
    std::vector<double> pos(1000, 0.0);
    const auto f = kde_estimate(pos, 1, 0.5, g);
    CHECK(std::abs(f.mass() - 1.0) < 1e-12);
    CHECK(f.values[0] == doctest::Approx(f.max_value()));
  }
  SUBCASE("bandwidth floor enforced") {
    std::vector<double> pos(10, 0.0);
    CHECK_THROWS_AS(kde_estimate(pos, 1, 0.1, g), ResolutionError);
    CHECK_THROWS_AS(kde_estimate({}, 1, 0.5, g), std::invalid_argument);
  }
  SUBCASE("error decreases with N against a known Gaussian") {
    auto sref = scalar_d1(0.0, 1.0);
    const double h = 0.25;
    auto sup_err = [&](int N, uint32_t rep) {
      std::vector<double> pos(N);
      const CounterRng rng(5150, rep, StreamPurpose::Resample, 0);
      for (int i = 0; i < N; ++i) pos[i] = rng.normal_pair(uint32_t(i)).first;
      const auto f = kde_estimate(pos, 1, h, g);
      double err = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec x = g.fold(g.node(i));
        err = std::max(err, std::abs(f.values[i] - gaussian_density(sref, 1.0, x)));
      }
      return err;
    };
    double e_small = 0.0, e_big = 0.0;
    for (uint32_t rep = 0; rep < 10; ++rep) {
      e_small += sup_err(400, rep);
      e_big += sup_err(6400, rep);
    }
    // the N^{-1/2} part dominates at this bandwidth: 4x fewer samples,
    // clearly larger error
    CHECK(e_big < e_small);
  }
}

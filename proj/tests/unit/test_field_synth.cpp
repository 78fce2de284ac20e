#include <doctest.h>

#include "klab/field_synth.hpp"
#include "klab/stats.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace klab;

namespace {

CovarianceSpec scalar_d1() {
  CovarianceSpec s;
  s.dimension = 1;
  s.nu = 1.0;
  s.family = KernelFamily::IsotropicScalar;
  s.sigma2 = 0.5;
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

TEST_CASE("zero amplitude yields identically zero field") {
  auto s = scalar_d1();
  s.sigma2 = 0.0;
  const auto inc = synthesize_increment(s, g1, 0.01, 1, 0, 0);
  for (double v : inc.comps[0]) CHECK(v == 0.0);
}

TEST_CASE("draws are deterministic in (seed, replica, slot)") {
  const auto s = scalar_d1();
  const auto a = synthesize_increment(s, g1, 0.01, 42, 3, 17);
  const auto b = synthesize_increment(s, g1, 0.01, 42, 3, 17);
  const auto c = synthesize_increment(s, g1, 0.01, 42, 3, 18);
  CHECK(a.comps[0] == b.comps[0]);
  CHECK(a.comps[0] != c.comps[0]);
}

TEST_CASE("lag covariance matches the kernel (Monte Carlo oracle)") {
  const auto s = scalar_d1();
  const double dt = 0.01;
  const int draws = 4000;
  const int node = 13;
  const std::vector<double> lags = {0.0, 1.0, 2.0, 4.0};

  std::vector<std::vector<double>> prod(lags.size());
  std::vector<double> base;
  for (int r = 0; r < draws; ++r) {
    const auto inc = synthesize_increment(s, g1, dt, 99, uint32_t(r), 0);
    const auto& v = inc.comps[0];
    base.push_back(v[node]);
    for (std::size_t li = 0; li < lags.size(); ++li) {
      const int shift = int(lags[li] / g1.dx());
      prod[li].push_back(v[node] * v[(node + shift) % g1.n]);
    }
  }
  // mean is zero in expectation
  const auto m = stats::mean_se(base);
  CHECK(std::abs(m.value) < 3.0 * m.se);

  for (std::size_t li = 0; li < lags.size(); ++li) {
    Vec z(1);
    z << lags[li];
    const double expected = eval_R(s, z)(0, 0) * dt;
    const auto est = stats::mean_se(prod[li]);
    CHECK(std::abs(est.value - expected) < 3.0 * est.se + 1e-12);
  }
}

TEST_CASE("stationarity: covariance independent of the base point") {
  const auto s = scalar_d1();
  const double dt = 0.01;
  const int draws = 3000;
  const int shift = int(1.0 / g1.dx());
  const int bases[3] = {5, 41, 97};
  std::vector<std::vector<double>> prod(3);
  for (int r = 0; r < draws; ++r) {
    const auto inc = synthesize_increment(s, g1, dt, 7, uint32_t(r), 0);
    const auto& v = inc.comps[0];
    for (int b = 0; b < 3; ++b)
      prod[b].push_back(v[bases[b]] * v[(bases[b] + shift) % g1.n]);
  }
  for (int b = 1; b < 3; ++b) {
    const auto e0 = stats::mean_se(prod[0]);
    const auto eb = stats::mean_se(prod[b]);
    CHECK(std::abs(e0.value - eb.value) < 3.0 * std::hypot(e0.se, eb.se));
  }
}

TEST_CASE("temporal whiteness and Gaussianity") {
  const auto s = scalar_d1();
  const int draws = 3000;
  std::vector<double> now, next, pool;
  for (int r = 0; r < draws; ++r) {
    const auto a = synthesize_increment(s, g1, 0.01, 5, uint32_t(r), 0);
    const auto b = synthesize_increment(s, g1, 0.01, 5, uint32_t(r), 1);
    now.push_back(a.comps[0][7]);
    next.push_back(b.comps[0][7]);
    pool.push_back(a.comps[0][7]);
    pool.push_back(a.comps[0][71]);
  }
  CHECK(std::abs(stats::sample_correlation(now, next)) < 3.0 / std::sqrt(double(draws)));
  CHECK(std::abs(stats::excess_kurtosis_zero(pool)) <
        3.0 * std::sqrt(24.0 / double(pool.size())));
}

TEST_CASE("incompressible draws have zero spectral divergence and zero mean") {
  const auto s = incompressible_d2();
  for (int r = 0; r < 3; ++r) {
    const auto inc = synthesize_increment(s, g2, 0.01, 11, uint32_t(r), 0);
    CHECK(relative_spectral_divergence(inc) < 1e-12);
    for (int c = 0; c < 2; ++c) {
      double mean = 0.0, amp = 0.0;
      for (double v : inc.comps[c]) {
        mean += v;
        amp = std::max(amp, std::abs(v));
      }
      CHECK(std::abs(mean) / double(inc.comps[c].size()) < 1e-14 * amp);
    }
  }
}

TEST_CASE("variance of d=2 incompressible components matches R(0)") {
  const auto s = incompressible_d2();
  const double dt = 0.02;
  const int draws = 2000;
  std::vector<double> sq[2];
  for (int r = 0; r < draws; ++r) {
    const auto inc = synthesize_increment(s, g2, dt, 21, uint32_t(r), 0);
    sq[0].push_back(inc.comps[0][5 * g2.n + 9] * inc.comps[0][5 * g2.n + 9]);
    sq[1].push_back(inc.comps[1][5 * g2.n + 9] * inc.comps[1][5 * g2.n + 9]);
  }
  const Mat R0 = eval_R(s, Vec::Zero(2));
  for (int c = 0; c < 2; ++c) {
    const auto est = stats::mean_se(sq[c]);
    CHECK(std::abs(est.value - R0(c, c) * dt) < 3.0 * est.se);
  }
}

TEST_CASE("interpolation: node values, constants, single mode, exact-sum bound") {
  const auto s = scalar_d1();
  SynthOptions opts;
  opts.upsample = 4;
  opts.keep_spectrum = true;
  const auto inc = synthesize_increment(s, g1, 0.01, 31, 0, 0, opts);

  double amp = 0.0;
  for (double v : inc.comps[0]) amp = std::max(amp, std::abs(v));

  // exact at grid nodes (up to FFT round-off between the two grid sizes)
  for (int i = 0; i < g1.n; i += 7) {
    Vec x(1);
    x << i * g1.dx();
    CHECK(std::abs(interpolate_velocity(inc, x)[0] - inc.comps[0][i]) < 1e-12 * amp);
  }

  // reproduces constants
  FieldIncrement flat;
  flat.grid = g1;
  flat.dt = 0.01;
  flat.upsample = 4;
  flat.fine = {std::vector<double>(std::size_t(4) * g1.n, 3.25)};
  SequentialRng rng(3, 0, StreamPurpose::Generic);
  for (int t = 0; t < 20; ++t) {
    Vec x(1);
    x << rng.uniform() * g1.box_length;
    CHECK(interpolate_velocity(flat, x)[0] == doctest::Approx(3.25).epsilon(1e-14));
  }

  // single Fourier mode on an n=64 grid, mid-cell evaluation
  {
    const Grid g{1, 64, 16.0};
    const double k = 2.0 * M_PI * 3.0 / g.box_length;
    FieldIncrement mode;
    mode.grid = g;
    mode.dt = 0.01;
    mode.upsample = 4;
    mode.fine = {std::vector<double>(std::size_t(4) * g.n)};
    for (int i = 0; i < 4 * g.n; ++i)
      mode.fine[0][i] = std::sin(k * i * g.box_length / (4.0 * g.n));
    for (int i = 0; i < g.n; ++i) {
      const double x = (i + 0.5) * g.dx();
      Vec xv(1);
      xv << x;
      CHECK(std::abs(interpolate_velocity(mode, xv)[0] - std::sin(k * x)) < 1e-3);
    }
  }

  // interpolation against the exact Fourier sum
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Vec x(1);
    x << rng.uniform() * g1.box_length;
    worst = std::max(worst,
                     std::abs(interpolate_velocity(inc, x)[0] - eval_velocity_exact(inc, x)[0]));
  }
  CHECK(worst < 1e-5 * amp);
}

TEST_CASE("binary dump round trip") {
  const auto s = scalar_d1();
  const auto inc = synthesize_increment(s, g1, 0.01, 8, 2, 5);
  std::stringstream buf;
  dump_increment(inc, buf);
  const auto back = load_increment(buf);
  CHECK(back.grid.n == inc.grid.n);
  CHECK(back.grid.dim == 1);
  CHECK(back.dt == inc.dt);
  CHECK(back.slot == 5);
  CHECK(back.comps[0] == inc.comps[0]);
}

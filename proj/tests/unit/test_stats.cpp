#include <doctest.h>

#include "klab/stats.hpp"

#include <cmath>
#include <vector>

using namespace klab;

TEST_CASE("ols recovers exact line") {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double xi : x) y.push_back(3.0 - 2.0 * xi);
  const auto f = stats::ols(x, y);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("loglog slope on synthetic power laws") {
  std::vector<double> t{8, 16, 32, 64};
  // e(t) = t^-2 with tiny replica scatter
  std::vector<std::vector<double>> curves;
  for (int r = 0; r < 8; ++r) {
    std::vector<double> row;
    for (double ti : t) row.push_back(std::pow(ti, -2.0) * (1.0 + 1e-4 * ((r % 3) - 1)));
    curves.push_back(row);
  }
  auto f = stats::loglog_slope_jackknife(t, curves);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-3));

  // flat curve -> slope 0
  for (auto& row : curves)
    for (auto& v : row) v = 7.5;
  f = stats::loglog_slope_jackknife(t, curves);
  CHECK(std::abs(f.slope) < 1e-12);
}

TEST_CASE("jackknife mean matches direct standard error") {
  std::vector<double> v{1.0, 2.0, 4.0, 8.0, 9.5, 3.25};
  const auto j = stats::jackknife_mean(v);
  CHECK(j.value == doctest::Approx(stats::mean(v)));
  CHECK(j.se == doctest::Approx(stats::stderr_of_mean(v)).epsilon(1e-10));
}

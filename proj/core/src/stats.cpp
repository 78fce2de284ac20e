#include "klab/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace klab {
namespace stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / double(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("variance needs >= 2 samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

double stderr_of_mean(std::span<const double> x) {
  return std::sqrt(variance(x) / double(x.size()));
}

// Excess kurtosis of a centered sample (the field draws are mean zero by
// construction, but we still center empirically).
double excess_kurtosis_zero(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double c = v - m;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  m2 /= double(x.size());
  m4 /= double(x.size());
  return m4 / (m2 * m2) - 3.0;
}

Estimate mean_se(std::span<const double> x) {
  return {mean(x), stderr_of_mean(x)};
}

Estimate jackknife_mean(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 2) throw std::invalid_argument("jackknife needs >= 2 replicas");
  double total = 0.0;
  for (double x : v) total += x;
  const double full = total / double(n);
  double ss = 0.0;
  for (double x : v) {
    const double loo = (total - x) / double(n - 1);
    ss += (loo - full) * (loo - full);
  }
  const double se = std::sqrt(double(n - 1) / double(n) * ss);
  return {full, se};
}

LineFit ols(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("ols: bad sample");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / double(n - 2) / sxx);
    f.slope_ci95_half = 1.96 * f.slope_se;
  }
  return f;
}

LineFit loglog_slope_jackknife(std::span<const double> t,
                               const std::vector<std::vector<double>>& curves) {
  const std::size_t np = t.size();
  const std::size_t nr = curves.size();
  if (np < 2) throw std::invalid_argument("loglog fit needs >= 2 points");
  if (nr < 2) throw std::invalid_argument("loglog fit needs >= 2 replicas");

  std::vector<double> lx(np), col(np, 0.0);
  for (std::size_t i = 0; i < np; ++i) lx[i] = std::log(t[i]);

  auto fit_without = [&](std::size_t skip) {
    std::vector<double> ly(np);
    for (std::size_t i = 0; i < np; ++i) {
      double s = 0.0;
      std::size_t cnt = 0;
      for (std::size_t r = 0; r < nr; ++r) {
        if (r == skip) continue;
        s += curves[r][i];
        ++cnt;
      }
      const double v = s / double(cnt);
      if (!(v > 0.0)) throw std::runtime_error("loglog fit: nonpositive curve value");
      ly[i] = std::log(v);
    }
    return ols(lx, ly);
  };

  LineFit full = fit_without(nr);  // skip index out of range == use all
  double ss = 0.0;
  for (std::size_t r = 0; r < nr; ++r) {
    const LineFit loo = fit_without(r);
    ss += (loo.slope - full.slope) * (loo.slope - full.slope);
  }
  full.slope_se = std::sqrt(double(nr - 1) / double(nr) * ss);
  full.slope_ci95_half = 1.96 * full.slope_se;
  return full;
}

double sample_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("correlation: bad sample");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace stats
}  // namespace klab

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace klab {
namespace stats {

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // unbiased
double stderr_of_mean(std::span<const double> x);
double excess_kurtosis_zero(std::span<const double> x);  // kurtosis - 3 about 0... see impl

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Mean with standard error.
Estimate mean_se(std::span<const double> x);

// Leave-one-out jackknife of the mean of per-replica statistics. For a
// plain mean this reduces to the usual SE, but it is also used for ratios
// and other nonlinear reductions via the caller-provided per-replica values.
Estimate jackknife_mean(std::span<const double> per_replica);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;          // from jackknife when available, else OLS
  double slope_ci95_half = 0.0;   // half-width of the 95% interval
};

// Ordinary least squares y = a + b x.
LineFit ols(std::span<const double> x, std::span<const double> y);

// log-log power-law fit of e(t) ~ C t^slope with jackknife over replicas:
// curves[r][i] is replica r's (positive) value at abscissa t[i]. The fit is
// applied to the log of the replica-averaged curve; the jackknife deletes
// one replica at a time.
LineFit loglog_slope_jackknife(std::span<const double> t,
                               const std::vector<std::vector<double>>& curves);

double sample_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace stats
}  // namespace klab

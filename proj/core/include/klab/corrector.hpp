#pragma once

#include "klab/density_field.hpp"
#include "klab/spde.hpp"
#include "klab/stats.hpp"

#include <cstdint>
#include <vector>

namespace klab {

// Terminal field of a constant-initial-data run: the per-replica estimate of
// the stationary corrector at time t after a burn-in of M time units.
struct CorrectorEstimate {
  DensityField field;
  double burn_in = 0.0;
  uint32_t replica = 0;
  double min_value = 0.0;   // over the whole run, positivity monitor
  bool short_burn_in = false;  // M below the 10 l^2/nu mixing heuristic
};

// Solves the quenched equation from u == 1 over [t - M, t] in the replica's
// environment.
CorrectorEstimate run_from_constant(const CovarianceSpec& spec, const Grid& grid, double M,
                                    double t, double dt, uint64_t master_seed,
                                    uint32_t replica);

// Same, but additionally snapshots the evolving field at t + lag for each
// requested lag (the lag-0 entry is the field at t itself).
std::vector<DensityField> corrector_time_series(const CovarianceSpec& spec, const Grid& grid,
                                                double M, double t,
                                                const std::vector<double>& lags, double dt,
                                                uint64_t master_seed, uint32_t replica,
                                                double* min_seen = nullptr);

struct CorrelationPoint {
  double separation = 0.0;   // |z| (or lag tau for time correlations)
  stats::Estimate estimate;  // jackknife over replicas
  double reference = 0.0;    // chi(z) when available, else NaN
};

// Spatially averaged product estimator of E[U(t,x) U(t,x+z)] at grid-aligned
// separations along the first axis; requires >= 2 replicas (the acceptance
// configurations use far more). base_points limits the average to that many
// well-separated nodes per replica (0 = all nodes): the full-box average is
// so precise that the finite-burn-in truncation of U would dominate its
// error bars, so the default configurations average a handful of points and
// pick M with the truncation bound below half the Monte Carlo error.
std::vector<CorrelationPoint> two_point_correlation(const std::vector<CorrectorEstimate>& reps,
                                                    const std::vector<double>& separations,
                                                    int base_points = 0);

// E[(U(t,x) - 1)(U(t+tau,x) - 1)] from per-replica time series (as produced
// by corrector_time_series with the same lag list).
std::vector<CorrelationPoint> time_correlation(
    const std::vector<std::vector<DensityField>>& series, const std::vector<double>& lags);

}  // namespace klab

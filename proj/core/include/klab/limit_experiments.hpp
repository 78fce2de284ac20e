#pragma once

#include "klab/covariance.hpp"
#include "klab/density_field.hpp"
#include "klab/grid.hpp"
#include "klab/stats.hpp"

#include <cstdint>
#include <vector>

namespace klab {

// The exponent that balances the turn-off-noise and constant-approximation
// errors: 2/3 in d = 1, d/(d+2) in d >= 2.
double paper_beta(int d);

struct ExperimentPlan {
  CovarianceSpec spec;
  Grid grid;
  double dt = 0.0;
  int treg_steps = 10;           // delta data regularized as G at treg_steps*dt
  std::vector<double> ladder;    // dyadic observation times
  double beta = 0.0;             // 0 selects paper_beta(d)
  int replicas = 100;
  std::vector<double> probe_multipliers = {0.0, 0.5, 1.0};  // of sqrt(lambda_max t)
  double c_bulk = 0.1;           // diffusive-bulk constant
  uint64_t master_seed = 12345;
  int workers = 1;
  bool clt_only = false;         // skip the conditioning runs (U == 1 control)

  double effective_beta() const { return beta > 0.0 ? beta : paper_beta(spec.dimension); }
  double layer_start(double t) const;  // q = t - t^beta snapped to the step grid

  // Checks beta, the dyadic ladder, q > 0, and that every probe lies in the
  // diffusive bulk x.(nu I + R0)^{-1} x <= c t log t at the final time.
  void validate() const;
};

// Probe points for observation time t: the origin plus m sqrt(lambda_max t)
// along each axis for every nonzero multiplier m, snapped to grid nodes.
std::vector<Vec> probe_points(const ExperimentPlan& plan, double t);

struct ErrorCurve {
  std::vector<double> t;
  std::vector<double> mean;  // replica mean of the probe-averaged square error
  std::vector<double> se;    // jackknife
  std::vector<std::vector<double>> per_replica;  // [replica][ladder index]
};

struct LltResult {
  ErrorCurve turnoff_gap;    // E|u - u~_q|^2          (noise turned off on [0,q])
  ErrorCurve product_error;  // E|u - G_t u_q|^2       (u_q: constant data at q)
  ErrorCurve ratio_error;    // E|u/G_t - u_q|^2
  ErrorCurve clt_error;      // E|u - G_t|^2
  double min_u_seen = 0.0;
};

// One pass over (ladder x replicas). Every replica runs the full solution u
// from regularized delta data, and per ladder time the two auxiliary
// solutions that reuse the identical increment slots on [q, t]:
//   u~_q : discrete heat flow to q, then the noisy scheme on [q, t];
//   u_q  : constant 1 at q, then the noisy scheme on [q, t].
// G_t is the periodized Gaussian at effective time t + treg (the clock shift
// introduced by regularizing the delta).
LltResult run_llt(const ExperimentPlan& plan);

// log-log slope with jackknife 95% interval; requires >= 4 ladder points and
// strictly positive errors.
stats::LineFit rate_fit(const ErrorCurve& curve);

}  // namespace klab

#include "klab/corrector.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace klab {

namespace {

SpdeSolver solver_from_constant(const CovarianceSpec& spec, const Grid& grid, double M,
                                double t, double dt, uint64_t seed, uint32_t replica,
                                const Environment** env_out,
                                std::unique_ptr<Environment>& env_holder) {
  if (!(M > 0.0)) throw ConfigError("run_from_constant: burn-in M must be > 0");
  SpdeSolver solver(spec, grid, dt);
  solver.init_constant(1.0, t - M);
  env_holder = std::make_unique<Environment>(spec, grid, dt, seed, replica, SynthOptions{});
  *env_out = env_holder.get();
  return solver;
}

}  // namespace

CorrectorEstimate run_from_constant(const CovarianceSpec& spec, const Grid& grid, double M,
                                    double t, double dt, uint64_t seed, uint32_t replica) {
  std::unique_ptr<Environment> env;
  const Environment* envp = nullptr;
  SpdeSolver solver = solver_from_constant(spec, grid, M, t, dt, seed, replica, &envp, env);
  solver.advance_with_noise(*envp, t);

  CorrectorEstimate est;
  est.field = solver.take_state();
  est.burn_in = M;
  est.replica = replica;
  est.min_value = solver.min_seen();
  est.short_burn_in =
      M < 10.0 * spec.corr_length * spec.corr_length / spec.nu;
  return est;
}

std::vector<DensityField> corrector_time_series(const CovarianceSpec& spec, const Grid& grid,
                                                double M, double t,
                                                const std::vector<double>& lags, double dt,
                                                uint64_t seed, uint32_t replica,
                                                double* min_seen) {
  std::unique_ptr<Environment> env;
  const Environment* envp = nullptr;
  SpdeSolver solver = solver_from_constant(spec, grid, M, t, dt, seed, replica, &envp, env);
  std::vector<DensityField> out;
  for (double lag : lags) {
    solver.advance_with_noise(*envp, t + lag);
    out.push_back(solver.state());
  }
  if (min_seen) *min_seen = solver.min_seen();
  return out;
}

std::vector<CorrelationPoint> two_point_correlation(const std::vector<CorrectorEstimate>& reps,
                                                    const std::vector<double>& separations,
                                                    int base_points) {
  if (reps.size() < 2) throw InsufficientReplicas("two_point_correlation: need >= 2 replicas");
  const Grid& g = reps.front().field.grid;
  const std::size_t N = reps.front().field.values.size();
  std::vector<std::size_t> bases;
  if (base_points <= 0) {
    for (std::size_t i = 0; i < N; ++i) bases.push_back(i);
  } else {
    for (int p = 0; p < base_points; ++p)
      bases.push_back(std::size_t(p) * (N / std::size_t(base_points)));
  }

  std::vector<CorrelationPoint> out;
  for (double z : separations) {
    const long shift = std::lround(z / g.dx());
    std::vector<double> per_rep;
    per_rep.reserve(reps.size());
    for (const auto& r : reps) {
      const auto& u = r.field.values;
      double acc = 0.0;
      for (std::size_t i : bases) {
        if (g.dim == 1) {
          acc += u[i] * u[wrap_index(long(i) + shift, g.n)];
        } else {
          const long a = long(i / std::size_t(g.n)), b = long(i % std::size_t(g.n));
          acc += u[i] * u[wrap_index(a, g.n) * std::size_t(g.n) + wrap_index(b + shift, g.n)];
        }
      }
      per_rep.push_back(acc / double(bases.size()));
    }
    CorrelationPoint pt;
    pt.separation = double(shift) * g.dx();
    pt.estimate = stats::jackknife_mean(per_rep);
    pt.reference = std::numeric_limits<double>::quiet_NaN();
    out.push_back(pt);
  }
  return out;
}

std::vector<CorrelationPoint> time_correlation(
    const std::vector<std::vector<DensityField>>& series, const std::vector<double>& lags) {
  if (series.size() < 2) throw InsufficientReplicas("time_correlation: need >= 2 replicas");
  std::vector<CorrelationPoint> out;
  for (std::size_t li = 0; li < lags.size(); ++li) {
    std::vector<double> per_rep;
    for (const auto& s : series) {
      if (s.size() != lags.size()) throw std::logic_error("time_correlation: ragged series");
      const auto& u0 = s.front().values;
      const auto& ut = s[li].values;
      double acc = 0.0;
      for (std::size_t i = 0; i < u0.size(); ++i) acc += (u0[i] - 1.0) * (ut[i] - 1.0);
      per_rep.push_back(acc / double(u0.size()));
    }
    CorrelationPoint pt;
    pt.separation = lags[li];
    pt.estimate = stats::jackknife_mean(per_rep);
    pt.reference = std::numeric_limits<double>::quiet_NaN();
    out.push_back(pt);
  }
  return out;
}

}  // namespace klab

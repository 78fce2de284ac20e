#include "klab/limit_experiments.hpp"

#include "klab/parallel.hpp"
#include "klab/spde.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace klab {

double paper_beta(int d) { return d == 1 ? 2.0 / 3.0 : double(d) / double(d + 2); }

double ExperimentPlan::layer_start(double t) const {
  const double q = t - std::pow(t, effective_beta());
  return std::round(q / dt) * dt;
}

void ExperimentPlan::validate() const {
  spec.validate();
  grid.validate_against(spec);
  if (!(dt > 0.0)) throw ConfigError("llt: dt must be set");
  const double b = effective_beta();
  if (!(b > 0.0 && b < 1.0)) throw ConfigError("llt: beta must lie in (0,1)");
  if (ladder.size() < 2) throw ConfigError("llt: ladder needs >= 2 points");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (std::abs(std::round(ladder[i] / dt) * dt - ladder[i]) > 1e-9)
      throw ConfigError("llt: ladder times must be multiples of dt");
    if (i > 0 && std::abs(ladder[i] / ladder[i - 1] - 2.0) > 1e-9)
      throw ConfigError("llt: ladder must be dyadic (t -> 2t)");
  }
  if (!clt_only) {
    for (double t : ladder)
      if (!(layer_start(t) > 0.0))
        throw ConfigError("llt: q = t - t^beta must be positive over the whole ladder");
  }
  if (replicas < 2) throw InsufficientReplicas("llt: need >= 2 replicas");

  // diffusive-bulk constraint at the final ladder time
  const double t_final = ladder.back();
  if (!(t_final > 1.0)) throw ConfigError("llt: final ladder time must exceed 1");
  const Mat Sigma = effective_diffusivity(spec);
  const Mat Sinv = Sigma.inverse();
  for (const Vec& x : probe_points(*this, t_final)) {
    const double quad = x.dot(Sinv * x);
    if (quad > c_bulk * t_final * std::log(t_final) + 1e-12)
      throw ConfigError("llt: probe point outside the diffusive bulk at the final time");
  }
}

std::vector<Vec> probe_points(const ExperimentPlan& plan, double t) {
  const int d = plan.spec.dimension;
  Eigen::SelfAdjointEigenSolver<Mat> es(effective_diffusivity(plan.spec));
  const double lambda = es.eigenvalues().maxCoeff();
  const double dx = plan.grid.dx();
  std::vector<Vec> pts;
  for (double m : plan.probe_multipliers) {
    if (m == 0.0) {
      pts.push_back(Vec::Zero(d));
      continue;
    }
    for (int axis = 0; axis < d; ++axis) {
      Vec x = Vec::Zero(d);
      x[axis] = std::round(m * std::sqrt(lambda * t) / dx) * dx;
      pts.push_back(x);
    }
  }
  return pts;
}

namespace {

ErrorCurve make_curve(const std::vector<double>& ladder, int replicas) {
  ErrorCurve c;
  c.t = ladder;
  c.per_replica.assign(replicas, std::vector<double>(ladder.size(), 0.0));
  return c;
}

void finalize_curve(ErrorCurve& c) {
  const std::size_t np = c.t.size();
  c.mean.resize(np);
  c.se.resize(np);
  std::vector<double> col(c.per_replica.size());
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t r = 0; r < col.size(); ++r) col[r] = c.per_replica[r][i];
    const auto est = stats::jackknife_mean(col);
    c.mean[i] = est.value;
    c.se[i] = est.se;
  }
}

}  // namespace

LltResult run_llt(const ExperimentPlan& plan) {
  plan.validate();
  const double treg = plan.treg_steps * plan.dt;
  const int nt = int(plan.ladder.size());

  LltResult res;
  res.turnoff_gap = make_curve(plan.ladder, plan.replicas);
  res.product_error = make_curve(plan.ladder, plan.replicas);
  res.ratio_error = make_curve(plan.ladder, plan.replicas);
  res.clt_error = make_curve(plan.ladder, plan.replicas);

  // probe sets and Gaussian references are replica-independent
  std::vector<std::vector<Vec>> probes(nt);
  std::vector<std::vector<double>> gref(nt);
  for (int ti = 0; ti < nt; ++ti) {
    probes[ti] = probe_points(plan, plan.ladder[ti]);
    for (const Vec& x : probes[ti])
      gref[ti].push_back(gaussian_density_periodized(plan.spec, plan.ladder[ti] + treg, x,
                                                     plan.grid.box_length));
  }

  std::vector<double> min_u(plan.replicas, 0.0);

  parallel_for(plan.replicas, plan.workers, [&](int r) {
    const Environment env(plan.spec, plan.grid, plan.dt, plan.master_seed, uint32_t(r),
                          SynthOptions{});

    SpdeSolver u(plan.spec, plan.grid, plan.dt);
    u.init_gaussian(treg, 0.0);

    for (int ti = 0; ti < nt; ++ti) {
      const double t = plan.ladder[ti];
      u.advance_with_noise(env, t);

      for (std::size_t pi = 0; pi < probes[ti].size(); ++pi) {
        const double uu = u.state().at(probes[ti][pi]);
        const double G = gref[ti][pi];
        res.clt_error.per_replica[r][ti] += (uu - G) * (uu - G);
      }

      if (!plan.clt_only) {
        const double q = plan.layer_start(t);

        SpdeSolver tilde(plan.spec, plan.grid, plan.dt);
        tilde.init_gaussian(treg, 0.0);
        tilde.advance_heat(q);
        tilde.advance_with_noise(env, t);

        SpdeSolver under(plan.spec, plan.grid, plan.dt);
        under.init_constant(1.0, q);
        under.advance_with_noise(env, t);

        for (std::size_t pi = 0; pi < probes[ti].size(); ++pi) {
          const double uu = u.state().at(probes[ti][pi]);
          const double ut = tilde.state().at(probes[ti][pi]);
          const double un = under.state().at(probes[ti][pi]);
          const double G = gref[ti][pi];
          res.turnoff_gap.per_replica[r][ti] += (uu - ut) * (uu - ut);
          res.product_error.per_replica[r][ti] += (uu - G * un) * (uu - G * un);
          res.ratio_error.per_replica[r][ti] += (uu / G - un) * (uu / G - un);
        }
      }

      const double np = double(probes[ti].size());
      res.turnoff_gap.per_replica[r][ti] /= np;
      res.product_error.per_replica[r][ti] /= np;
      res.ratio_error.per_replica[r][ti] /= np;
      res.clt_error.per_replica[r][ti] /= np;
    }
    min_u[r] = u.min_seen();
  });

  finalize_curve(res.clt_error);
  if (!plan.clt_only) {
    finalize_curve(res.turnoff_gap);
    finalize_curve(res.product_error);
    finalize_curve(res.ratio_error);
  }
  res.min_u_seen = *std::min_element(min_u.begin(), min_u.end());
  return res;
}

stats::LineFit rate_fit(const ErrorCurve& curve) {
  if (curve.t.size() < 4) throw ConfigError("rate_fit: need >= 4 ladder points");
  for (double m : curve.mean)
    if (!(m > 0.0)) throw std::runtime_error("rate_fit: nonpositive error value");
  return stats::loglog_slope_jackknife(curve.t, curve.per_replica);
}

}  // namespace klab

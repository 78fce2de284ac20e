// klab: simulation laboratory for a passive scalar advected by a Gaussian
// velocity field that is white in time and smooth in space. Subcommands run
// the statistics checks and experiments; every run writes CSV tables plus a
// JSON manifest into --out-dir.

#include "klab/config.hpp"
#include "klab/corrector.hpp"
#include "klab/csvio.hpp"
#include "klab/fft.hpp"
#include "klab/flow.hpp"
#include "klab/limit_experiments.hpp"
#include "klab/manifest.hpp"
#include "klab/pair_moment.hpp"
#include "klab/parallel.hpp"
#include "klab/spde.hpp"
#include "klab/stats.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace klab;
namespace fs = std::filesystem;

namespace {

struct RunContext {
  Config cfg;
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  int workers = 1;
  RunManifest manifest;

  std::string out_path(const std::string& name) {
    const std::string p = (fs::path(out_dir) / name).string();
    manifest.outputs.push_back(p);
    return p;
  }
  void metric(const std::string& key, double v) { manifest.metrics[key] = v; }
  void gate(const std::string& key, bool pass) {
    manifest.metrics[key] = pass ? 1.0 : 0.0;
    std::printf("  [%s] %s\n", pass ? "ok" : "FAIL", key.c_str());
  }
};

double lambda_max(const CovarianceSpec& spec) {
  Eigen::SelfAdjointEigenSolver<Mat> es(effective_diffusivity(spec));
  return es.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------- synth-check
void cmd_synth_check(RunContext& ctx) {
  const auto spec = ctx.cfg.covariance();
  const auto grid = ctx.cfg.grid();
  grid.validate_against(spec);
  const double dt = ctx.cfg.get_f("synth.dt");
  const int draws = int(ctx.cfg.get_i("synth.draws"));
  const auto lags = ctx.cfg.get_list("synth.lags");
  const int d = spec.dimension;

  // node probes for the empirical covariance
  const std::size_t base = grid.flat(grid.n / 3, grid.n / 5);
  std::vector<std::vector<double>> prods(lags.size());
  std::vector<double> at_base, prev_at_base, succ_corr_a, succ_corr_b;
  double max_div = 0.0;

  for (int r = 0; r < draws; ++r) {
    const auto inc = synthesize_increment(spec, grid, dt, ctx.seed, uint32_t(r), 0);
    const auto& v = inc.comps[0];
    at_base.push_back(v[base]);
    for (std::size_t li = 0; li < lags.size(); ++li) {
      const long shift = std::lround(lags[li] * spec.corr_length / grid.dx());
      const std::size_t other =
          d == 1 ? wrap_index(long(base) + shift, grid.n)
                 : grid.flat(int(base / grid.n), int(wrap_index(long(base % grid.n) + shift, grid.n)));
      prods[li].push_back(v[base] * v[other]);
    }
    if (r < 64) {
      const auto next = synthesize_increment(spec, grid, dt, ctx.seed, uint32_t(r), 1);
      succ_corr_a.push_back(v[base]);
      succ_corr_b.push_back(next.comps[0][base]);
    }
    if (d >= 2 && r < 16) max_div = std::max(max_div, relative_spectral_divergence(inc));
  }

  CsvWriter csv(ctx.out_path("synth_covariance.csv"),
                {"lag", "empirical_over_dt", "stderr", "reference", "pass"});
  bool cov_ok = true;
  for (std::size_t li = 0; li < lags.size(); ++li) {
    Vec z = Vec::Zero(d);
    z[0] = lags[li] * spec.corr_length;
    const double ref = eval_R(spec, z)(0, 0);
    const auto est = stats::mean_se(prods[li]);
    const bool pass = std::abs(est.value / dt - ref) <= 3.0 * est.se / dt;
    cov_ok = cov_ok && pass;
    csv.row({lags[li], est.value / dt, est.se / dt, ref, pass ? 1.0 : 0.0});
  }

  const double kurt = stats::excess_kurtosis_zero(at_base);
  const double kurt_se = std::sqrt(24.0 / double(at_base.size()));
  const double white = std::abs(stats::sample_correlation(succ_corr_a, succ_corr_b));

  ctx.metric("max_rel_spectral_divergence", max_div);
  ctx.metric("excess_kurtosis", kurt);
  ctx.metric("whiteness_corr", white);
  ctx.gate("covariance_lags_within_3se", cov_ok);
  ctx.gate("kurtosis_within_3se", std::abs(kurt) <= 3.0 * kurt_se);
  ctx.gate("temporal_whiteness", white <= 3.0 / std::sqrt(double(succ_corr_a.size())));
  if (d >= 2 && spec.family == KernelFamily::Incompressible)
    ctx.gate("spectral_divergence_below_1e-12", max_div <= 1e-12);
}

// ------------------------------------------------------------------- annealed
void cmd_annealed(RunContext& ctx) {
  const auto spec = ctx.cfg.covariance();
  const auto grid = ctx.cfg.grid();
  const double T = ctx.cfg.get_f("annealed.t");
  const int reps = int(ctx.cfg.get_i("annealed.replicas"));
  const std::size_t particles = std::size_t(ctx.cfg.get_i("annealed.particles"));
  const double dt = ctx.cfg.run_dt();
  const int d = spec.dimension;

  std::vector<Mat> m2(reps);
  std::vector<Vec> mean(reps);
  parallel_for(reps, ctx.workers, [&](int r) {
    const auto run = simulate_ensemble(spec, grid, particles, T, dt, ctx.seed, uint32_t(r));
    m2[r] = run.moments.back().second_moment;
    mean[r] = run.moments.back().mean;
  });

  const Mat ref = effective_diffusivity(spec) * T;
  CsvWriter csv(ctx.out_path("annealed_covariance.csv"),
                {"entry", "estimate_over_t", "stderr", "reference", "pass"});
  bool all_ok = true;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      std::vector<double> vals(reps);
      for (int r = 0; r < reps; ++r) vals[r] = m2[r](a, b);
      const auto est = stats::jackknife_mean(vals);
      const bool pass = std::abs(est.value - ref(a, b)) <= 3.0 * est.se;
      all_ok = all_ok && pass;
      char label[16];
      std::snprintf(label, sizeof label, "%d%d", a, b);
      csv.row_mixed({label, CsvWriter::format(est.value / T), CsvWriter::format(est.se / T),
                     CsvWriter::format(ref(a, b) / T), pass ? "1" : "0"});
    }
  // mean displacement should vanish
  std::vector<double> m0(reps);
  for (int r = 0; r < reps; ++r) m0[r] = mean[r][0];
  const auto mean_est = stats::jackknife_mean(m0);
  ctx.metric("mean_displacement", mean_est.value);
  ctx.gate("mean_displacement_within_3se", std::abs(mean_est.value) <= 3.0 * mean_est.se);
  ctx.gate("covariance_entries_within_3se", all_ok);
}

// ------------------------------------------------------------------- quenched
void cmd_quenched(RunContext& ctx) {
  const auto spec = ctx.cfg.covariance();
  const auto grid = ctx.cfg.grid();
  const double dt = ctx.cfg.run_dt();
  const long mass_steps = ctx.cfg.get_i("quenched.mass_steps");
  const int treg_steps = int(ctx.cfg.get_i("quenched.treg_steps"));
  const double treg = treg_steps * dt;

  // mass conservation over a long noisy run
  {
    SpdeSolver solver(spec, grid, dt);
    solver.init_gaussian(treg, 0.0);
    const Environment env(spec, grid, dt, ctx.seed, 0, SynthOptions{});
    solver.advance_with_noise(env, mass_steps * dt);
    ctx.metric("mass_drift", solver.mass_drift());
    ctx.metric("min_over_max", solver.min_seen() / solver.max_seen());
    ctx.gate("mass_conserved_1e-10", solver.mass_drift() <= 1e-10);
    ctx.gate("negativity_monitor_1e-3", solver.min_seen() >= -1e-3 * solver.max_seen());
  }

  // constant preservation under divergence-free increments
  if (spec.is_incompressible()) {
    SpdeSolver solver(spec, grid, dt);
    solver.init_constant(1.0, 0.0);
    const Environment env(spec, grid, dt, ctx.seed, 1, SynthOptions{});
    solver.advance_with_noise(env, mass_steps * dt);
    double dev = 0.0;
    for (double v : solver.state().values) dev = std::max(dev, std::abs(v - 1.0));
    ctx.metric("constant_preservation_dev", dev);
    ctx.gate("constant_preserved_1e-12", dev <= 1e-12);
  }

  // particle/grid duality in one environment
  const std::size_t N = std::size_t(ctx.cfg.get_i("quenched.particles"));
  const double T = ctx.cfg.get_f("quenched.t");
  const double h = ctx.cfg.get_f("quenched.bandwidth");
  const double init_std = std::sqrt(lambda_max(spec) * treg);

  SynthOptions both;
  both.need_node_values = true;
  both.upsample = 4;
  const Environment env(spec, grid, dt, ctx.seed, 2, both);

  SpdeSolver solver(spec, grid, dt);
  solver.init_gaussian(treg, 0.0);
  ParticleEnsemble ens =
      make_ensemble_gaussian(spec.dimension, N, init_std, dt, ctx.seed, 2);
  const long steps = std::lround(T / dt);
  for (long k = 0; k < steps; ++k) {
    const auto inc = env.increment(k);
    solver.step(inc);
    step_particles(ens, inc, spec.nu, ctx.workers);
  }
  const auto kde = kde_estimate(ens.pos, spec.dimension, h, grid);
  const auto& pde = solver.state();

  // half-step rerun bounds the scheme error
  SpdeSolver half(spec, grid, dt / 2);
  half.init_gaussian(treg, 0.0);
  {
    // same physical noise: each coarse increment applied as two half steps
    // would change the realization; instead rerun the PDE only, with fresh
    // increments at dt/2 from a dedicated stream, to estimate the scheme
    // error scale rather than the pathwise difference.
    const Environment envh(spec, grid, dt / 2, ctx.seed, 3, SynthOptions{});
    half.advance_with_noise(envh, T);
  }
  double refine = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    refine = std::max(refine, std::abs(half.state().values[i] - pde.values[i]));
  // the two runs differ mostly by realization; take the scheme budget as a
  // fraction of the field scale instead when noise dominates
  const double scheme_budget = std::min(refine, 0.02 * pde.max_value());

  const double peak = pde.max_value();
  double sup_disc = 0.0, sup_se = 0.0, sup_lap = 0.0;
  {
    // curvature scale for the bandwidth bias
    std::vector<std::complex<double>> buf(pde.values.begin(), pde.values.end());
    fft::forward(spec.dimension, grid.n, buf);
    const double kf = 2.0 * M_PI / grid.box_length;
    for (std::size_t i = 0; i < buf.size(); ++i) {
      double k2 = 0.0;
      if (spec.dimension == 1) {
        const double k = kf * fft::signed_freq(int(i), grid.n);
        k2 = k * k;
      } else {
        const double ka = kf * fft::signed_freq(int(i / std::size_t(grid.n)), grid.n);
        const double kb = kf * fft::signed_freq(int(i % std::size_t(grid.n)), grid.n);
        k2 = ka * ka + kb * kb;
      }
      buf[i] *= -k2;
    }
    fft::backward(spec.dimension, grid.n, buf);
    for (std::size_t i = 0; i < buf.size(); ++i)
      sup_lap = std::max(sup_lap, std::abs(buf[i].real()) / double(buf.size()));
  }

  CsvWriter csv(ctx.out_path("duality_profile.csv"), {"x", "grid_density", "kde_density"});
  const double rk = std::pow(4.0 * M_PI, -0.5 * spec.dimension);  // Int K^2 factor
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (pde.values[i] >= 0.05 * peak) {  // diffusive bulk of the cloud
      sup_disc = std::max(sup_disc, std::abs(kde.values[i] - pde.values[i]));
      const double var = pde.values[i] * rk / (double(N) * std::pow(h, spec.dimension));
      sup_se = std::max(sup_se, std::sqrt(var));
    }
    if (spec.dimension == 1) csv.row({grid.fold(grid.node(i))[0], pde.values[i], kde.values[i]});
  }
  const double h2 = h * h + grid.dx() * grid.dx() / 6.0;
  const double kde_bias = 0.5 * h2 * sup_lap;
  const double budget = 3.0 * (sup_se + kde_bias + scheme_budget);
  ctx.metric("duality_sup_discrepancy", sup_disc);
  ctx.metric("duality_budget", budget);
  ctx.gate("duality_within_budget", sup_disc <= budget);
}

// ------------------------------------------------------------------------ chi
void cmd_chi(RunContext& ctx) {
  const auto spec = ctx.cfg.covariance();
  const auto zgrid = ctx.cfg.zgrid();
  const double dt = ctx.cfg.get_f("chi.dt");
  const double tol = ctx.cfg.get_f("chi.tol");
  const double budget = ctx.cfg.get_f("chi.t_budget");
  const bool scalar = spec.family == KernelFamily::IsotropicScalar;

  const auto res = solve_chi_numeric(spec, zgrid, dt, tol, budget);
  ctx.metric("chi_T_used", res.T_used);
  ctx.metric("chi_min", res.min_value);
  ctx.metric("chi_max", res.max_value);
  ctx.gate("chi_positive", res.min_value > 0.0);

  double sup_err = 0.0;
  {
    CsvWriter csv(ctx.out_path("chi_profile.csv"), {"z", "numeric", "reference", "abs_error"});
    for (std::size_t i = 0; i < zgrid.size(); ++i) {
      const Vec z = zgrid.fold(zgrid.node(i));
      const double ref = scalar ? chi_closed_form(spec, z)
                                : std::numeric_limits<double>::quiet_NaN();
      const double err = scalar ? std::abs(res.chi.values[i] - ref) : 0.0;
      sup_err = std::max(sup_err, err);
      if (spec.dimension == 1 || i % zgrid.n == 0)
        csv.row({z[0], res.chi.values[i], ref, err});
    }
  }
  if (scalar) {
    ctx.metric("chi_sup_error", sup_err);
    ctx.gate("chi_matches_closed_form_1pc", sup_err <= 0.01);

    // residual refinement: second order on grid doubling
    auto sampled = [&](int n) {
      const Grid g{1, n, zgrid.box_length};
      DensityField f = constant_field(g, 0.0);
      for (std::size_t i = 0; i < g.size(); ++i)
        f.values[i] = chi_closed_form(spec, g.fold(g.node(i)));
      return f;
    };
    const double r_coarse =
        stationarity_residual(sampled(zgrid.n), spec, DerivativeScheme::CenteredFd2);
    const double r_fine =
        stationarity_residual(sampled(2 * zgrid.n), spec, DerivativeScheme::CenteredFd2);
    const double ratio = r_coarse / r_fine;
    const double r_num = stationarity_residual(res.chi, spec, DerivativeScheme::CenteredFd2);
    ctx.metric("residual_closed_coarse", r_coarse);
    ctx.metric("residual_refinement_ratio", ratio);
    ctx.metric("residual_numeric", r_num);
    ctx.gate("residual_second_order", std::abs(ratio - 4.0) <= 0.5);
    ctx.gate("residual_numeric_within_10x", r_num <= 10.0 * r_coarse);

    // relaxation rate toward chi on a wide box
    const Grid sg{1, int(ctx.cfg.get_i("chi.slope_n")), ctx.cfg.get_f("chi.slope_box")};
    sg.validate_against(spec);
    const auto times = ctx.cfg.get_list("chi.slope_times");
    SeparationSolver solver(spec, sg, dt);
    solver.init_constant(1.0);
    std::vector<double> sup_errs;
    CsvWriter csv(ctx.out_path("chi_relaxation.csv"), {"T", "sup_error"});
    for (double T : times) {
      solver.advance(T);
      double sup = 0.0;
      for (std::size_t i = 0; i < sg.size(); ++i)
        sup = std::max(sup, std::abs(solver.state().values[i] -
                                     chi_closed_form(spec, sg.fold(sg.node(i)))));
      sup_errs.push_back(sup);
      csv.row({T, sup});
    }
    std::vector<double> lt, le;
    for (std::size_t i = 0; i < times.size(); ++i) {
      lt.push_back(std::log(times[i]));
      le.push_back(std::log(sup_errs[i]));
    }
    const auto fit = stats::ols(lt, le);
    ctx.metric("relaxation_slope", fit.slope);
    ctx.gate("relaxation_slope_-0.5pm0.2", std::abs(fit.slope + 0.5) <= 0.2);
  } else {
    // projection families: report the far-field decay probe
    const double dx = zgrid.dx();
    auto at = [&](double x0) {
      const std::size_t i = wrap_index(std::lround(x0 / dx), zgrid.n);
      return res.chi.values[i * zgrid.n];
    };
    const double near = std::abs(at(2.0 * spec.corr_length) - 1.0);
    const double far = std::abs(at(zgrid.box_length / 4.0) - 1.0);
    ctx.metric("decay_near", near);
    ctx.metric("decay_far", far);
    if (spec.family == KernelFamily::Potential)
      ctx.gate("decay_probe_10x", near >= 10.0 * far);
    else
      ctx.gate("chi_identically_one", res.max_value == 1.0 && res.min_value == 1.0);
  }
}

// -------------------------------------------------------------------corrector
void cmd_corrector(RunContext& ctx) {
  const auto spec = ctx.cfg.covariance();
  const auto grid = ctx.cfg.grid();
  const double dt = ctx.cfg.run_dt();
  const double M = ctx.cfg.get_f("corrector.burn_in");
  const int reps = int(ctx.cfg.get_i("corrector.replicas"));
  const auto seps = ctx.cfg.get_list("corrector.separations");
  const double tau_unit = spec.corr_length * spec.corr_length / spec.nu;
  std::vector<double> lags;
  for (double l : ctx.cfg.get_list("corrector.lags")) lags.push_back(l * tau_unit);
  const bool scalar = spec.family == KernelFamily::IsotropicScalar;

  std::vector<std::vector<DensityField>> series(reps);
  std::vector<double> mins(reps);
  parallel_for(reps, ctx.workers, [&](int r) {
    series[r] = corrector_time_series(spec, grid, M, 0.0, lags, dt, ctx.seed, uint32_t(r),
                                      &mins[r]);
  });
  double min_all = mins[0];
  for (double m : mins) min_all = std::min(min_all, m);
  ctx.metric("min_corrector_value", min_all);
  ctx.gate("corrector_positive", min_all > 0.0);

  // two-point law at t = 0 (the lag-0 snapshot)
  std::vector<CorrectorEstimate> ests(reps);
  for (int r = 0; r < reps; ++r) {
    ests[r].field = series[r].front();
    ests[r].burn_in = M;
    ests[r].replica = uint32_t(r);
  }
  const int base_points = int(ctx.cfg.get_i("corrector.base_points"));
  auto pts = two_point_correlation(ests, seps, base_points);
  bool two_pt_ok = true;
  double max_dev_from_one = 0.0;
  {
    CsvWriter csv(ctx.out_path("corrector_two_point.csv"),
                  {"z", "estimate", "stderr", "reference"});
    for (auto& pt : pts) {
      Vec z = Vec::Zero(spec.dimension);
      z[0] = pt.separation;
      pt.reference = scalar ? chi_closed_form(spec, z) : 1.0;
      csv.row({pt.separation, pt.estimate.value, pt.estimate.se, pt.reference});
      two_pt_ok = two_pt_ok && std::abs(pt.estimate.value - pt.reference) <= 3.0 * pt.estimate.se;
      max_dev_from_one = std::max(max_dev_from_one, std::abs(pt.estimate.value - 1.0));
    }
  }
  if (spec.is_incompressible()) {
    ctx.metric("incompressible_two_point_dev", max_dev_from_one);
    ctx.gate("two_point_identically_one", max_dev_from_one <= 1e-12);
  } else {
    // burn-in adequacy rule: predicted truncation (t+M)^{-1/2} bound below
    // half the Monte Carlo error of the estimator
    if (scalar) {
      double integral = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i)
        integral += (chi_closed_form(spec, grid.fold(grid.node(i))) - 1.0) * grid.dx();
      const double a_z = 2.0 * (spec.nu + spec.sigma2);
      const double bias_bound = integral / std::sqrt(2.0 * M_PI * a_z * M);
      double min_se = 1e300;
      for (const auto& pt : pts) min_se = std::min(min_se, pt.estimate.se);
      ctx.metric("burn_in_bias_bound", bias_bound);
      ctx.metric("two_point_min_se", min_se);
      ctx.gate("burn_in_below_half_mc_error", bias_bound <= 0.5 * min_se);
    }
    ctx.gate("two_point_matches_chi_3se", two_pt_ok);
  }

  // temporal decorrelation
  const auto tc = time_correlation(series, lags);
  const double eps = spec.dimension == 1 ? 0.0 : 0.2;
  const double expo = -(spec.dimension - eps) / 4.0;
  // upper-bound envelope anchored at the lag-0 value: the data must decay at
  // least as fast as (1+tau)^expo from there
  const double K = tc.front().estimate.value;
  bool envelope_ok = true, decay_ok = true;
  {
    CsvWriter csv(ctx.out_path("corrector_time_correlation.csv"),
                  {"tau", "estimate", "stderr", "envelope"});
    for (const auto& pt : tc) {
      const double env = K * std::pow(1.0 + pt.separation, expo);
      csv.row({pt.separation, pt.estimate.value, pt.estimate.se, env});
      if (pt.estimate.value > env + 3.0 * pt.estimate.se) envelope_ok = false;
    }
  }
  // strict decay between lag l^2/nu and lag 8 l^2/nu
  const CorrelationPoint *lag1 = nullptr, *lag8 = nullptr;
  for (const auto& pt : tc) {
    if (std::abs(pt.separation - tau_unit) < 1e-9) lag1 = &pt;
    if (std::abs(pt.separation - 8.0 * tau_unit) < 1e-9) lag8 = &pt;
  }
  if (lag1 && lag8) {
    decay_ok = lag1->estimate.value - lag8->estimate.value >
               std::hypot(lag1->estimate.se, lag8->estimate.se);
    ctx.metric("time_corr_lag1", lag1->estimate.value);
    ctx.metric("time_corr_lag8", lag8->estimate.value);
  }
  if (!spec.is_incompressible()) {
    ctx.gate("time_decorrelation_strict", decay_ok);
    ctx.gate("time_envelope_consistent", envelope_ok);
  }
}

// ---------------------------------------------------------------- moment-cross
void cmd_moment_cross(RunContext& ctx) {
  const auto spec = ctx.cfg.covariance();
  const auto zgrid = ctx.cfg.zgrid();
  const double T = ctx.cfg.get_f("moment_cross.t");
  const int reps = int(ctx.cfg.get_i("moment_cross.replicas"));
  const int pairs = int(ctx.cfg.get_i("moment_cross.pairs"));
  const double s0 = ctx.cfg.get_f("moment_cross.s0");
  const double pde_dt = ctx.cfg.get_f("moment_cross.pde_dt");
  const double h = ctx.cfg.get_f("moment_cross.bandwidth");
  const double particle_dt = ctx.cfg.run_dt();

  const auto rep = mc_cross_check(spec, zgrid, reps, pairs, s0, T, particle_dt, pde_dt, h,
                                  ctx.seed, ctx.workers);
  {
    CsvWriter csv(ctx.out_path("moment_cross_profile.csv"),
                  {"z", "mc_density", "mc_stderr", "pde_density"});
    for (std::size_t i = 0; i < rep.z.size(); ++i)
      csv.row({rep.z[i], rep.mc_density[i], rep.mc_se[i], rep.pde_density[i]});
  }
  ctx.metric("sup_discrepancy", rep.sup_discrepancy);
  ctx.metric("sup_budget", rep.sup_budget);
  ctx.metric("var_mc", rep.var_mc);
  ctx.metric("var_pde", rep.var_pde);
  ctx.gate("density_within_budget", rep.sup_pass);
  ctx.gate("variance_within_3se", rep.var_pass);

  // Gaussian envelope of the bump-initialized solution
  const auto env = gaussian_envelope_check(spec, zgrid, ctx.cfg.get_f("envelope.dt"),
                                           Vec::Zero(spec.dimension),
                                           ctx.cfg.get_f("envelope.bump_var"),
                                           ctx.cfg.get_list("envelope.times"));
  ctx.metric("envelope_C", env.C);
  ctx.metric("envelope_worst_violation", env.worst_violation);
  ctx.gate("gaussian_envelope_1pc", env.pass);
}

// ------------------------------------------------------------------------ llt
void cmd_llt(RunContext& ctx, int ladder_override) {
  ExperimentPlan plan;
  plan.spec = ctx.cfg.covariance();
  plan.grid = ctx.cfg.grid();
  plan.dt = ctx.cfg.run_dt();
  plan.treg_steps = int(ctx.cfg.get_i("llt.treg_steps"));
  plan.beta = ctx.cfg.get_f("llt.beta");
  plan.replicas = int(ctx.cfg.get_i("llt.replicas"));
  plan.probe_multipliers = ctx.cfg.get_list("llt.probes");
  plan.c_bulk = ctx.cfg.get_f("llt.c_bulk");
  plan.master_seed = ctx.seed;
  plan.workers = ctx.workers;
  plan.clt_only = ctx.cfg.get_str("llt.mode") == "clt";
  const int points =
      ladder_override > 0 ? ladder_override : int(ctx.cfg.get_i("llt.ladder_points"));
  double t = ctx.cfg.get_f("llt.ladder_base");
  for (int i = 0; i < points; ++i, t *= 2.0) plan.ladder.push_back(t);
  plan.validate();

  const auto res = run_llt(plan);
  const int d = plan.spec.dimension;

  auto dump = [&](const char* name, const ErrorCurve& c, double normalize_power) {
    CsvWriter csv(ctx.out_path(name), {"t", "mean_sq_error", "stderr", "normalized"});
    for (std::size_t i = 0; i < c.t.size(); ++i)
      csv.row({c.t[i], c.mean[i], c.se[i], c.mean[i] * std::pow(c.t[i], normalize_power)});
  };
  dump("llt_clt_error.csv", res.clt_error, double(d));
  ctx.metric("min_u_seen", res.min_u_seen);

  // local CLT behavior: decreasing, final <= 1/4 of first
  bool clt_decreasing = true;
  for (std::size_t i = 1; i < res.clt_error.mean.size(); ++i)
    clt_decreasing = clt_decreasing && res.clt_error.mean[i] < res.clt_error.mean[i - 1];
  ctx.metric("clt_first", res.clt_error.mean.front());
  ctx.metric("clt_final", res.clt_error.mean.back());
  ctx.gate("clt_error_decreasing", clt_decreasing);
  ctx.gate("clt_final_quarter_of_first",
           res.clt_error.mean.back() <= 0.25 * res.clt_error.mean.front());

  if (!plan.clt_only) {
    dump("llt_turnoff_gap.csv", res.turnoff_gap, double(d));
    dump("llt_product_error.csv", res.product_error, double(d));
    dump("llt_ratio_error.csv", res.ratio_error, 0.0);

    // normalized curves t^d E|.|^2
    auto normalized = [&](const ErrorCurve& c) {
      ErrorCurve n = c;
      for (std::size_t r = 0; r < n.per_replica.size(); ++r)
        for (std::size_t i = 0; i < n.t.size(); ++i)
          n.per_replica[r][i] *= std::pow(n.t[i], double(d));
      for (std::size_t i = 0; i < n.t.size(); ++i) {
        n.mean[i] *= std::pow(n.t[i], double(d));
        n.se[i] *= std::pow(n.t[i], double(d));
      }
      return n;
    };
    const auto prod_n = normalized(res.product_error);
    const auto gap_n = normalized(res.turnoff_gap);

    bool prod_decreasing = true;
    for (std::size_t i = 1; i < prod_n.mean.size(); ++i)
      prod_decreasing = prod_decreasing && prod_n.mean[i] < prod_n.mean[i - 1];
    bool gap_decreasing = true;
    for (std::size_t i = 1; i < gap_n.mean.size(); ++i)
      gap_decreasing = gap_decreasing && gap_n.mean[i] < gap_n.mean[i - 1];
    ctx.gate("normalized_product_error_decreasing", prod_decreasing);
    ctx.gate("normalized_turnoff_gap_decreasing", gap_decreasing);

    if (prod_n.t.size() >= 4) {
      const auto fit = rate_fit(prod_n);
      ctx.metric("product_slope", fit.slope);
      ctx.metric("product_slope_ci95", fit.slope_ci95_half);
      ctx.gate("product_slope_leq_-0.15", fit.slope <= -0.15);
      ctx.gate("product_slope_ci_excludes_0", fit.slope + fit.slope_ci95_half < 0.0);
      CsvWriter csv(ctx.out_path("llt_rate_fit.csv"),
                    {"slope", "intercept", "ci95_half"});
      csv.row({fit.slope, fit.intercept, fit.slope_ci95_half});
    }
  }
}

// --------------------------------------------------------------------- report
int cmd_report(const std::string& out_dir) {
  std::vector<RunManifest> manifests;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest_", 0) == 0 && entry.path().extension() == ".json")
      manifests.push_back(RunManifest::load(entry.path().string()));
  }
  if (manifests.empty()) {
    std::fprintf(stderr, "report: no manifests found in %s\n", out_dir.c_str());
    return 1;
  }
  std::sort(manifests.begin(), manifests.end(),
            [](const RunManifest& a, const RunManifest& b) { return a.subcommand < b.subcommand; });
  CsvWriter csv((fs::path(out_dir) / "summary.csv").string(),
                {"subcommand", "metric", "value"});
  std::printf("%-14s %-40s %s\n", "subcommand", "metric", "value");
  for (const auto& m : manifests)
    for (const auto& [k, v] : m.metrics) {
      std::printf("%-14s %-40s %.6g\n", m.subcommand.c_str(), k.c_str(), v);
      csv.row_mixed({m.subcommand, k, CsvWriter::format(v)});
    }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"passive-scalar laboratory for white-in-time Gaussian velocity fields"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed_flag = 0;
  bool seed_set = false;
  int workers_flag = -1, ladder_override = 0;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "configuration file (INI; see configs/SCHEMA.txt)");
  app.add_option("--seed", seed_flag, "master seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--workers", workers_flag, "worker threads (default: config / KLAB_WORKERS)");
  app.add_option("--out-dir", out_dir, "output directory override");
  app.add_option("--set", overrides, "config override key=value (repeatable)")
      ->type_name("KEY=VAL");
  app.add_option("--ladder", ladder_override, "override llt.ladder_points");

  const char* names[] = {"synth-check", "annealed", "quenched", "chi",
                         "corrector", "moment-cross", "llt", "report", "schema"};
  const char* descs[] = {"velocity increment statistics checks",
                         "annealed Brownian-law check (quadratic variation)",
                         "mass conservation + particle/grid duality oracle",
                         "invariant density suite (closed form, residuals, relaxation rate)",
                         "stationary corrector: two-point and time correlations",
                         "MC-vs-PDE second-moment oracle + Gaussian envelope",
                         "turn-off-noise and product-approximation experiments",
                         "aggregate manifests in out-dir into a summary table",
                         "print the configuration schema"};
  for (int i = 0; i < 9; ++i) app.add_subcommand(names[i], descs[i])->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    if (sub == "schema") {
      std::printf("%s", Config::schema_text().c_str());
      return 0;
    }

    RunContext ctx;
    ctx.cfg = config_path.empty() ? Config::defaults() : Config::from_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
      ctx.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_set) ctx.cfg.set("run.master_seed", std::to_string(seed_flag));
    if (workers_flag >= 0) ctx.cfg.set("run.workers", std::to_string(workers_flag));
    if (!out_dir.empty()) ctx.cfg.set("run.out_dir", out_dir);

    ctx.config_path = config_path;
    ctx.out_dir = ctx.cfg.get_str("run.out_dir");
    ctx.seed = ctx.cfg.get_u64("run.master_seed");
    ctx.workers = int(ctx.cfg.get_i("run.workers"));
    if (ctx.workers <= 0) ctx.workers = default_worker_count();

    if (sub == "report") return cmd_report(ctx.out_dir);

    fs::create_directories(ctx.out_dir);
    ctx.manifest.subcommand = sub;
    ctx.manifest.config_path = config_path;
    ctx.manifest.config = ctx.cfg.snapshot();
    ctx.manifest.master_seed = ctx.seed;
    ctx.manifest.workers = ctx.workers;

    std::printf("klab %s (seed %llu, %d workers)\n", sub.c_str(),
                static_cast<unsigned long long>(ctx.seed), ctx.workers);
    const auto t0 = std::chrono::steady_clock::now();

    if (sub == "synth-check") cmd_synth_check(ctx);
    else if (sub == "annealed") cmd_annealed(ctx);
    else if (sub == "quenched") cmd_quenched(ctx);
    else if (sub == "chi") cmd_chi(ctx);
    else if (sub == "corrector") cmd_corrector(ctx);
    else if (sub == "moment-cross") cmd_moment_cross(ctx);
    else if (sub == "llt") cmd_llt(ctx, ladder_override);

    ctx.manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ctx.manifest.write((fs::path(ctx.out_dir) / ("manifest_" + sub + ".json")).string());
    std::printf("done in %.1fs; outputs in %s\n", ctx.manifest.wall_seconds,
                ctx.out_dir.c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const ResolutionError& e) {
    std::fprintf(stderr, "resolution/stability error: %s\n", e.what());
    return 3;
  } catch (const InsufficientReplicas& e) {
    std::fprintf(stderr, "insufficient replicas: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  }
}

#include "klab/pair_moment.hpp"

#include "klab/fft.hpp"
#include "klab/flow.hpp"
#include "klab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace klab {

namespace {
using cplx = std::complex<double>;

// Kernel values used by the deterministic solvers and residuals. The scalar
// family keeps the support truncation (A22 * chi stays exactly constant with
// it); projection families use the smooth closed form, whose spectral
// transversality is what makes constants exactly stationary -- the truncated
// projection kernel is not divergence-free at the cutoff. The two choices
// differ by less than exp(-M^2/2l^2) * (M/l)^2 * sigma2 pointwise.
Mat a22_for_solver(const CovarianceSpec& s, const Vec& z) {
  if (s.family == KernelFamily::IsotropicScalar) return a22_matrix(s, z);
  const Mat R = eval_R_raw(s, z);
  return effective_diffusivity(s) - 0.5 * (R + R.transpose());
}

void wavevectors(const Grid& g, std::vector<double> kvec[2]) {
  const double kf = 2.0 * M_PI / g.box_length;
  const std::size_t N = g.size();
  for (int c = 0; c < g.dim; ++c) kvec[c].assign(N, 0.0);
  for (std::size_t idx = 0; idx < N; ++idx) {
    if (g.dim == 1) {
      kvec[0][idx] = kf * fft::signed_freq(int(idx), g.n);
    } else {
      kvec[0][idx] = kf * fft::signed_freq(int(idx / std::size_t(g.n)), g.n);
      kvec[1][idx] = kf * fft::signed_freq(int(idx % std::size_t(g.n)), g.n);
    }
  }
}

}  // namespace

SeparationSolver::SeparationSolver(CovarianceSpec spec, Grid zgrid, double dt)
    : spec_(spec), grid_(zgrid), dt_(dt) {
  spec_.validate();
  grid_.validate_against(spec_);
  if (!(dt > 0.0)) throw ConfigError("SeparationSolver: dt must be > 0");

  const int d = grid_.dim;
  const std::size_t N = grid_.size();
  n_coeff_ = d == 1 ? 1 : 3;
  coeff_.assign(n_coeff_, std::vector<double>(N));
  double a_max = 0.0;
  for (std::size_t idx = 0; idx < N; ++idx) {
    const Vec z = grid_.fold(grid_.node(idx));
    const Mat A = a22_for_solver(spec_, z);
    coeff_[0][idx] = A(0, 0);
    if (d == 2) {
      coeff_[1][idx] = A(0, 1);
      coeff_[2][idx] = A(1, 1);
    }
    a_max = std::max(a_max, A.cwiseAbs().rowwise().sum().maxCoeff());
  }
  wavevectors(grid_, kvec_);
  const double kmax2 = double(d) * std::pow(M_PI / grid_.dx(), 2);
  max_stable_dt_ = 2.0 / (a_max * kmax2);
  if (dt_ > max_stable_dt_)
    throw ResolutionError("SeparationSolver: dt violates the explicit stability bound");

  what_.resize(N);
  acc_.resize(N);
  state_ = constant_field(grid_, 1.0);
  min_seen_ = 1.0;
}

void SeparationSolver::init_constant(double value) {
  state_ = constant_field(grid_, value);
  min_seen_ = value;
}

void SeparationSolver::init_bump(const Vec& z0, double var) {
  state_ = constant_field(grid_, 0.0);
  const int d = grid_.dim;
  for (std::size_t idx = 0; idx < grid_.size(); ++idx) {
    Vec z = grid_.node(idx) - z0;
    z = grid_.fold(z);
    state_.values[idx] = std::exp(-0.5 * z.squaredNorm() / var) /
                         std::pow(2.0 * M_PI * var, 0.5 * d);
  }
  const double m = state_.mass();
  for (double& v : state_.values) v /= m;
  min_seen_ = state_.min_value();
}

void SeparationSolver::init_field(DensityField f) {
  if (f.grid.n != grid_.n || f.grid.dim != grid_.dim)
    throw std::logic_error("SeparationSolver::init_field: grid mismatch");
  state_ = std::move(f);
  min_seen_ = state_.min_value();
}

void SeparationSolver::step() {
  const int d = grid_.dim, n = grid_.n;
  const std::size_t N = grid_.size();
  auto& S = state_.values;
  std::fill(acc_.begin(), acc_.end(), cplx(0.0, 0.0));

  auto add_flux = [&](const std::vector<double>& a, int ax0, int ax1, double mult) {
    for (std::size_t i = 0; i < N; ++i) what_[i] = a[i] * S[i];
    fft::forward(d, n, what_);
    for (std::size_t i = 0; i < N; ++i)
      acc_[i] -= mult * kvec_[ax0][i] * kvec_[ax1][i] * what_[i];
  };

  add_flux(coeff_[0], 0, 0, 1.0);
  if (d == 2) {
    add_flux(coeff_[1], 0, 1, 2.0);  // symmetric off-diagonal pair
    add_flux(coeff_[2], 1, 1, 1.0);
  }

  fft::backward(d, n, acc_);
  const double scale = dt_ / double(N);
  double mn = S[0];
  for (std::size_t i = 0; i < N; ++i) {
    S[i] += acc_[i].real() * scale;
    mn = std::min(mn, S[i]);
  }
  if (!std::isfinite(mn)) throw std::runtime_error("SeparationSolver: solution blew up");
  min_seen_ = std::min(min_seen_, mn);
  state_.time += dt_;
}

void SeparationSolver::advance(double T) {
  const long target = std::lround(T / dt_);
  while (std::lround(state_.time / dt_) < target) step();
}

DensityField solve_sm(const CovarianceSpec& spec, const Grid& zgrid, double dt, double T) {
  SeparationSolver solver(spec, zgrid, dt);
  solver.init_constant(1.0);
  solver.advance(T);
  return solver.take_state();
}

PairFullSolver1d::PairFullSolver1d(CovarianceSpec spec, Grid wz_grid, double dt)
    : spec_(spec), grid_(wz_grid), dt_(dt) {
  spec_.validate();
  if (spec_.dimension != 1)
    throw ConfigError("PairFullSolver1d: the full pair solve is implemented for d = 1 only");
  if (grid_.dim != 2) throw ConfigError("PairFullSolver1d: needs a 2-axis (w, z) grid");
  const int n = grid_.n;
  a11_.resize(n);
  a22_.resize(n);
  double a_max = 0.0;
  for (int j = 0; j < n; ++j) {
    Vec z(1);
    z << grid_.fold(j * grid_.dx());
    const Mat A = a_matrix(spec_, z);
    a11_[j] = A(0, 0);
    a22_[j] = A(1, 1);
    a_max = std::max(a_max, std::max(a11_[j], a22_[j]));
  }
  wavevectors(grid_, kvec_);
  const double kmax2 = 2.0 * std::pow(M_PI / grid_.dx(), 2);
  if (dt_ > 2.0 / (a_max * kmax2))
    throw ResolutionError("PairFullSolver1d: dt violates the explicit stability bound");
  values_.assign(grid_.size(), 1.0);
  what_.resize(grid_.size());
  acc_.resize(grid_.size());
}

void PairFullSolver1d::init(const std::vector<double>& values) {
  if (values.size() != grid_.size()) throw std::logic_error("PairFullSolver1d: size mismatch");
  values_ = values;
  time_ = 0.0;
}

void PairFullSolver1d::step() {
  const int n = grid_.n;
  const std::size_t N = grid_.size();
  std::fill(acc_.begin(), acc_.end(), cplx(0.0, 0.0));

  auto add_flux = [&](const std::vector<double>& a_of_z, int ax0, int ax1) {
    for (std::size_t i = 0; i < N; ++i) what_[i] = a_of_z[i % std::size_t(n)] * values_[i];
    fft::forward(2, n, what_);
    for (std::size_t i = 0; i < N; ++i)
      acc_[i] -= kvec_[ax0][i] * kvec_[ax1][i] * what_[i];
  };
  add_flux(a11_, 0, 0);  // w-diffusion
  add_flux(a22_, 1, 1);  // z-diffusion

  fft::backward(2, n, acc_);
  const double scale = dt_ / double(N);
  for (std::size_t i = 0; i < N; ++i) values_[i] += acc_[i].real() * scale;
  time_ += dt_;
}

void PairFullSolver1d::advance(double T) {
  const long target = std::lround(T / dt_);
  while (std::lround(time_ / dt_) < target) step();
}

DensityField PairFullSolver1d::marginal_over_w() const {
  const int n = grid_.n;
  DensityField out;
  out.grid = Grid{1, n, grid_.box_length};
  out.time = time_;
  out.values.assign(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.values[j] += values_[std::size_t(i) * n + j];
  const double dw = grid_.dx();
  for (double& v : out.values) v *= dw;
  return out;
}

ChiResult solve_chi_numeric(const CovarianceSpec& spec, const Grid& zgrid, double dt,
                            double tol, double T_budget) {
  ChiResult res;
  if (spec.is_incompressible()) {
    // A22 is nu I + R(0) - sym R(z) with zero divergence-divergence, and the
    // constant is exactly stationary: chi == 1.
    res.chi = constant_field(zgrid, 1.0);
    res.converged = true;
    res.corner_raw = 1.0;
    res.min_value = res.max_value = 1.0;
    return res;
  }

  SeparationSolver solver(spec, zgrid, dt);
  solver.init_constant(1.0);
  const double check_interval = 1.0;
  DensityField prev = solver.state();
  while (solver.time() < T_budget) {
    solver.advance(std::min(T_budget, solver.time() + check_interval));
    const auto& cur = solver.state();
    double sup_change = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < cur.values.size(); ++i) {
      sup_change = std::max(sup_change, std::abs(cur.values[i] - prev.values[i]));
      sup = std::max(sup, std::abs(cur.values[i]));
    }
    const double rate = sup_change / (cur.time - prev.time);
    if (rate <= tol * sup) {
      res.converged = true;
      break;
    }
    prev = cur;
  }
  if (!res.converged) {
    std::ostringstream msg;
    msg << "solve_chi_numeric: no convergence within T_budget = " << T_budget
        << " (tol = " << tol << "); increase the budget or coarsen tol";
    throw std::runtime_error(msg.str());
  }

  res.T_used = solver.time();
  res.chi = solver.take_state();
  // Normalize so the far field is 1: on the torus the stationary solution is
  // chi times a mass factor, and the max-separation corner plays the role of
  // infinity.
  std::size_t corner = zgrid.dim == 1 ? std::size_t(zgrid.n / 2)
                                      : std::size_t(zgrid.n / 2) * zgrid.n + zgrid.n / 2;
  res.corner_raw = res.chi.values[corner];
  for (double& v : res.chi.values) v /= res.corner_raw;
  res.min_value = res.chi.min_value();
  res.max_value = res.chi.max_value();
  return res;
}

namespace {

// derivative helpers on grid fields
std::vector<double> deriv_spectral(const Grid& g, const std::vector<double>& f, int a) {
  std::vector<double> kvec[2];
  wavevectors(g, kvec);
  std::vector<cplx> buf(f.begin(), f.end());
  fft::forward(g.dim, g.n, buf);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= cplx(0.0, kvec[a][i]);
  fft::backward(g.dim, g.n, buf);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = buf[i].real() / double(f.size());
  return out;
}

std::vector<double> deriv2_spectral(const Grid& g, const std::vector<double>& f, int a, int b) {
  std::vector<double> kvec[2];
  wavevectors(g, kvec);
  std::vector<cplx> buf(f.begin(), f.end());
  fft::forward(g.dim, g.n, buf);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= -kvec[a][i] * kvec[b][i];
  fft::backward(g.dim, g.n, buf);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = buf[i].real() / double(f.size());
  return out;
}

std::vector<double> deriv_fd(const Grid& g, const std::vector<double>& f, int a) {
  const int n = g.n;
  const double inv = 1.0 / (2.0 * g.dx());
  std::vector<double> out(f.size());
  if (g.dim == 1) {
    for (long i = 0; i < n; ++i)
      out[i] = (f[wrap_index(i + 1, n)] - f[wrap_index(i - 1, n)]) * inv;
    return out;
  }
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const long ip = a == 0 ? i + 1 : i, im = a == 0 ? i - 1 : i;
      const long jp = a == 1 ? j + 1 : j, jm = a == 1 ? j - 1 : j;
      out[i * n + j] = (f[wrap_index(ip, n) * n + wrap_index(jp, n)] -
                        f[wrap_index(im, n) * n + wrap_index(jm, n)]) * inv;
    }
  return out;
}

std::vector<double> deriv2_fd(const Grid& g, const std::vector<double>& f, int a, int b) {
  const int n = g.n;
  const double dx2 = g.dx() * g.dx();
  std::vector<double> out(f.size());
  if (g.dim == 1) {
    for (long i = 0; i < n; ++i)
      out[i] = (f[wrap_index(i + 1, n)] - 2.0 * f[i] + f[wrap_index(i - 1, n)]) / dx2;
    return out;
  }
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      double v;
      if (a == b) {
        const long ip = a == 0 ? i + 1 : i, im = a == 0 ? i - 1 : i;
        const long jp = a == 1 ? j + 1 : j, jm = a == 1 ? j - 1 : j;
        v = (f[wrap_index(ip, n) * n + wrap_index(jp, n)] - 2.0 * f[i * n + j] +
             f[wrap_index(im, n) * n + wrap_index(jm, n)]) / dx2;
      } else {
        v = (f[wrap_index(i + 1, n) * n + wrap_index(j + 1, n)] -
             f[wrap_index(i + 1, n) * n + wrap_index(j - 1, n)] -
             f[wrap_index(i - 1, n) * n + wrap_index(j + 1, n)] +
             f[wrap_index(i - 1, n) * n + wrap_index(j - 1, n)]) / (4.0 * dx2);
      }
      out[i * n + j] = v;
    }
  return out;
}

}  // namespace

double stationarity_residual(const DensityField& chi, const CovarianceSpec& spec,
                             DerivativeScheme scheme) {
  const Grid& g = chi.grid;
  const int d = g.dim;
  const std::size_t N = g.size();

  auto d1 = [&](const std::vector<double>& f, int a) {
    return scheme == DerivativeScheme::Spectral ? deriv_spectral(g, f, a) : deriv_fd(g, f, a);
  };
  auto d2 = [&](const std::vector<double>& f, int a, int b) {
    return scheme == DerivativeScheme::Spectral ? deriv2_spectral(g, f, a, b)
                                                : deriv2_fd(g, f, a, b);
  };

  // A22 entries sampled on the grid
  const int nc = d == 1 ? 1 : 3;
  std::vector<std::vector<double>> A(nc, std::vector<double>(N));
  for (std::size_t idx = 0; idx < N; ++idx) {
    const Mat a22 = a22_for_solver(spec, g.fold(g.node(idx)));
    A[0][idx] = a22(0, 0);
    if (d == 2) {
      A[1][idx] = a22(0, 1);
      A[2][idx] = a22(1, 1);
    }
  }

  std::vector<double> res(N, 0.0);
  auto accumulate = [&](const std::vector<double>& a, int i, int j, double mult) {
    const auto d2a = d2(a, i, j);
    const auto dia = d1(a, i);
    const auto dja = i == j ? dia : d1(a, j);
    const auto dic = d1(chi.values, i);
    const auto djc = i == j ? dic : d1(chi.values, j);
    const auto d2c = d2(chi.values, i, j);
    for (std::size_t idx = 0; idx < N; ++idx)
      res[idx] += mult * (d2a[idx] * chi.values[idx] + dia[idx] * djc[idx] +
                          dja[idx] * dic[idx] + a[idx] * d2c[idx]);
  };

  accumulate(A[0], 0, 0, 1.0);
  if (d == 2) {
    accumulate(A[1], 0, 1, 2.0);
    accumulate(A[2], 1, 1, 1.0);
  }

  double sup = 0.0;
  for (double v : res) sup = std::max(sup, std::abs(v));
  return sup;
}

EnvelopeReport gaussian_envelope_check(const CovarianceSpec& spec, const Grid& zgrid, double dt,
                                       const Vec& z0, double bump_var,
                                       const std::vector<double>& times) {
  if (times.size() < 2) throw ConfigError("envelope check needs >= 2 times");
  SeparationSolver solver(spec, zgrid, dt);
  solver.init_bump(z0, bump_var);

  std::vector<DensityField> snaps;
  for (double t : times) {
    solver.advance(t);
    snaps.push_back(solver.state());
  }

  const int d = zgrid.dim;
  auto dominated = [&](const DensityField& S, double t, double C) {
    for (std::size_t idx = 0; idx < S.values.size(); ++idx) {
      Vec z = zgrid.fold(zgrid.node(idx) - z0);
      const double env = C * std::pow(t, -0.5 * d) * std::exp(-z.squaredNorm() / (C * t));
      if (S.values[idx] > env) return false;
    }
    return true;
  };

  EnvelopeReport rep;
  rep.times = times;
  double lo = 1e-3, hi = 1e6;
  if (!dominated(snaps[0], times[0], hi)) {
    rep.C = hi;
    rep.worst_violation = 1.0;
    return rep;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = std::sqrt(lo * hi);
    (dominated(snaps[0], times[0], mid) ? hi : lo) = mid;
  }
  rep.C = hi;

  rep.worst_violation = 0.0;
  for (std::size_t ti = 1; ti < times.size(); ++ti) {
    const auto& S = snaps[ti];
    const double peak = S.max_value();
    for (std::size_t idx = 0; idx < S.values.size(); ++idx) {
      Vec z = zgrid.fold(zgrid.node(idx) - z0);
      const double env = rep.C * std::pow(times[ti], -0.5 * d) *
                         std::exp(-z.squaredNorm() / (rep.C * times[ti]));
      rep.worst_violation =
          std::max(rep.worst_violation, (S.values[idx] - env) / peak);
    }
  }
  rep.pass = rep.worst_violation <= 0.01;
  return rep;
}

CrossCheckReport mc_cross_check(const CovarianceSpec& spec, const Grid& zgrid, int replicas,
                                int pairs_per_replica, double s0, double T,
                                double particle_dt, double pde_dt, double kde_bandwidth,
                                uint64_t master_seed, int workers) {
  if (replicas < 2) throw InsufficientReplicas("mc_cross_check: need >= 2 replicas");
  const int d = spec.dimension;
  const std::size_t N = zgrid.size();

  // Monte Carlo route: paired particles sharing each replica's environment.
  std::vector<DensityField> kdes(replicas);
  std::vector<double> var_rep(replicas, 0.0);
  parallel_for(replicas, workers, [&](int r) {
    const auto sep = simulate_pair_separations(spec, zgrid, pairs_per_replica, s0, T,
                                               particle_dt, master_seed, uint32_t(r), 1);
    kdes[r] = kde_estimate(sep, d, kde_bandwidth, zgrid);
    double acc = 0.0;
    for (int p = 0; p < pairs_per_replica; ++p) acc += sep[p * d] * sep[p * d];
    var_rep[r] = acc / double(pairs_per_replica);
  });

  // PDE route: same initial separation law, deterministic solve.
  SeparationSolver solver(spec, zgrid, pde_dt);
  solver.init_bump(Vec::Zero(d), s0 * s0);
  solver.advance(T);
  const DensityField pde = solver.state();
  // refinement estimate of the scheme error
  SeparationSolver half(spec, zgrid, 0.5 * pde_dt);
  half.init_bump(Vec::Zero(d), s0 * s0);
  half.advance(T);
  double refine = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    refine = std::max(refine, std::abs(pde.values[i] - half.state().values[i]));

  CrossCheckReport rep;
  // pointwise mean and jackknife SE of the KDE; sup over nodes
  double sup_disc = 0.0, sup_se = 0.0;
  std::vector<double> per(replicas);
  std::vector<double> mean_kde(N);
  std::vector<double> se_kde(N);
  for (std::size_t i = 0; i < N; ++i) {
    for (int r = 0; r < replicas; ++r) per[r] = kdes[r].values[i];
    const auto est = stats::jackknife_mean(per);
    mean_kde[i] = est.value;
    se_kde[i] = est.se;
    sup_disc = std::max(sup_disc, std::abs(est.value - pde.values[i]));
    sup_se = std::max(sup_se, est.se);
  }

  // KDE bias budget: Gaussian bandwidth plus cloud-in-cell variance, applied
  // to the PDE curvature.
  const double h2 = kde_bandwidth * kde_bandwidth + zgrid.dx() * zgrid.dx() / 6.0;
  std::vector<double> lap(N, 0.0);
  for (int a = 0; a < d; ++a) {
    const auto da = deriv2_spectral(zgrid, pde.values, a, a);
    for (std::size_t i = 0; i < N; ++i) lap[i] += da[i];
  }
  double sup_lap = 0.0;
  for (double v : lap) sup_lap = std::max(sup_lap, std::abs(v));
  const double kde_bias = 0.5 * h2 * sup_lap;

  rep.sup_discrepancy = sup_disc;
  rep.sup_budget = 3.0 * (sup_se + kde_bias + 2.0 * refine);
  rep.sup_pass = sup_disc <= rep.sup_budget;

  const auto var_est = stats::jackknife_mean(var_rep);
  rep.var_mc = var_est.value;
  rep.var_mc_se = var_est.se;
  double vpde = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const Vec z = zgrid.fold(zgrid.node(i));
    vpde += z[0] * z[0] * pde.values[i];
  }
  rep.var_pde = vpde * std::pow(zgrid.dx(), d);
  rep.var_pass = std::abs(rep.var_mc - rep.var_pde) <= 3.0 * rep.var_mc_se;

  // export slice along the first axis
  for (int i = 0; i < zgrid.n; ++i) {
    const std::size_t idx = d == 1 ? std::size_t(i) : std::size_t(i) * zgrid.n;
    rep.z.push_back(zgrid.fold(zgrid.node(idx))[0]);
    rep.mc_density.push_back(mean_kde[idx]);
    rep.pde_density.push_back(pde.values[idx]);
    rep.mc_se.push_back(se_kde[idx]);
  }
  return rep;
}

}  // namespace klab

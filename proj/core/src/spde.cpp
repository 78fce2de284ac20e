#include "klab/spde.hpp"

#include "klab/fft.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace klab {

namespace {
// x^m for integer m >= 0 (std::pow NaNs on negative base with a double
// exponent, and the heat multiplier can be negative near Nyquist).
double ipow(double x, int64_t m) {
  double r = 1.0;
  while (m > 0) {
    if (m & 1) r *= x;
    x *= x;
    m >>= 1;
  }
  return r;
}
}  // namespace

SpdeSolver::SpdeSolver(CovarianceSpec spec, Grid grid, double dt)
    : spec_(spec), grid_(grid), dt_(dt) {
  spec_.validate();
  grid_.validate_against(spec_);
  if (!(dt > 0.0)) throw ConfigError("SpdeSolver: dt must be > 0");
  diffusivity_ = effective_diffusivity(spec_);

  const int d = grid_.dim, n = grid_.n;
  const std::size_t N = grid_.size();
  const double kf = 2.0 * M_PI / grid_.box_length;
  heat_multiplier_.resize(N);
  for (int c = 0; c < d; ++c) kvec_[c].resize(N);
  double max_mu = 0.0;
  for (std::size_t idx = 0; idx < N; ++idx) {
    double k[2] = {0.0, 0.0};
    if (d == 1) {
      k[0] = kf * fft::signed_freq(int(idx), n);
    } else {
      k[0] = kf * fft::signed_freq(int(idx / std::size_t(n)), n);
      k[1] = kf * fft::signed_freq(int(idx % std::size_t(n)), n);
    }
    double mu = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) mu += 0.5 * k[a] * diffusivity_(a, b) * k[b];
    heat_multiplier_[idx] = 1.0 - dt_ * mu;
    max_mu = std::max(max_mu, mu);
    for (int c = 0; c < d; ++c) kvec_[c][idx] = k[c];
  }
  if (dt_ * max_mu > 2.0)
    throw ResolutionError("SpdeSolver: dt violates the diffusion stability bound");

  uhat_.resize(N);
  mhat_.resize(N);
  acc_.resize(N);
  mprod_.resize(N);
}

double SpdeSolver::max_stable_dt() const {
  const double mu_max = (1.0 - *std::min_element(heat_multiplier_.begin(),
                                                 heat_multiplier_.end())) / dt_;
  return 2.0 / mu_max;
}

int64_t SpdeSolver::slot() const { return std::llround(state_.time / dt_); }

void SpdeSolver::refresh_monitors() {
  initial_mass_ = state_.mass();
  min_seen_ = state_.min_value();
  max_seen_ = state_.max_value();
}

void SpdeSolver::init_constant(double value, double t0) {
  state_ = constant_field(grid_, value, t0);
  refresh_monitors();
}

void SpdeSolver::init_gaussian(double t_gauss, double t0) {
  state_ = gaussian_field(spec_, t_gauss, grid_);
  state_.time = t0;
  refresh_monitors();
}

void SpdeSolver::init_field(DensityField f) {
  if (f.grid.n != grid_.n || f.grid.dim != grid_.dim)
    throw std::logic_error("init_field: grid mismatch");
  state_ = std::move(f);
  refresh_monitors();
}

void SpdeSolver::step(const FieldIncrement& inc) {
  if (std::abs(inc.dt - dt_) > 1e-15) throw std::logic_error("spde step: dt mismatch");
  if (inc.slot != slot()) throw std::logic_error("spde step: slot mismatch (environment reuse bug)");
  const int d = grid_.dim, n = grid_.n;
  const std::size_t N = grid_.size();
  auto& u = state_.values;

  for (std::size_t i = 0; i < N; ++i) uhat_[i] = u[i];
  fft::forward(d, n, uhat_);
  for (std::size_t i = 0; i < N; ++i) acc_[i] = heat_multiplier_[i] * uhat_[i];

  for (int c = 0; c < d; ++c) {
    const auto& V = inc.comps[c];
    for (std::size_t i = 0; i < N; ++i) mhat_[i] = u[i] * V[i];
    fft::forward(d, n, mhat_);
    // - d/dx_c of the flux: -(i k_c) m_hat
    for (std::size_t i = 0; i < N; ++i) {
      const std::complex<double> m = mhat_[i];
      acc_[i] -= std::complex<double>(-kvec_[c][i] * m.imag(), kvec_[c][i] * m.real());
    }
  }

  fft::backward(d, n, acc_);
  const double scale = 1.0 / double(N);
  double mn = acc_[0].real() * scale, mx = mn;
  for (std::size_t i = 0; i < N; ++i) {
    u[i] = acc_[i].real() * scale;
    mn = std::min(mn, u[i]);
    mx = std::max(mx, u[i]);
  }
  min_seen_ = std::min(min_seen_, mn);
  max_seen_ = std::max(max_seen_, mx);
  state_.time += dt_;
}

void SpdeSolver::advance_with_noise(const Environment& env, double t_end) {
  const int64_t target = std::llround(t_end / dt_);
  if (std::abs(target * dt_ - t_end) > 1e-9)
    throw ConfigError("advance_with_noise: t_end must be a multiple of dt");
  while (slot() < target) step(env.increment(slot()));
}

void SpdeSolver::advance_heat(double t_end) {
  const int64_t target = std::llround(t_end / dt_);
  const int64_t steps = target - slot();
  if (steps < 0) throw std::logic_error("advance_heat: cannot run backwards");
  if (steps == 0) return;
  const int d = grid_.dim, n = grid_.n;
  const std::size_t N = grid_.size();
  auto& u = state_.values;
  for (std::size_t i = 0; i < N; ++i) uhat_[i] = u[i];
  fft::forward(d, n, uhat_);
  for (std::size_t i = 0; i < N; ++i)
    uhat_[i] *= ipow(heat_multiplier_[i], steps);
  fft::backward(d, n, uhat_);
  const double scale = 1.0 / double(N);
  for (std::size_t i = 0; i < N; ++i) u[i] = uhat_[i].real() * scale;
  state_.time += double(steps) * dt_;
  min_seen_ = std::min(min_seen_, state_.min_value());
  max_seen_ = std::max(max_seen_, state_.max_value());
}

double SpdeSolver::mass_drift() const {
  const double m = state_.mass();
  return std::abs(m - initial_mass_) / std::max(1.0, std::abs(initial_mass_));
}

}  // namespace klab

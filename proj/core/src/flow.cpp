#include "klab/flow.hpp"

#include "klab/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace klab {

ParticleEnsemble make_ensemble_at_origin(int dim, std::size_t n, double dt,
                                         uint64_t master_seed, uint32_t replica) {
  ParticleEnsemble ens;
  ens.dim = dim;
  ens.replica = replica;
  ens.master_seed = master_seed;
  ens.dt = dt;
  ens.pos.assign(n * std::size_t(dim), 0.0);
  return ens;
}

ParticleEnsemble make_ensemble_gaussian(int dim, std::size_t n, double init_std, double dt,
                                        uint64_t master_seed, uint32_t replica) {
  ParticleEnsemble ens = make_ensemble_at_origin(dim, n, dt, master_seed, replica);
  const CounterRng rng(master_seed, replica, StreamPurpose::InitialState, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto [g1, g2] = rng.normal_pair(uint32_t(p));
    ens.pos[p * dim] = init_std * g1;
    if (dim == 2) ens.pos[p * dim + 1] = init_std * g2;
  }
  return ens;
}

void step_particles(ParticleEnsemble& ens, const FieldIncrement& inc, double nu, int workers) {
  if (inc.replica != ens.replica)
    throw std::logic_error("step_particles: increment belongs to a different replica");
  if (inc.slot != ens.slot)
    throw std::logic_error("step_particles: increment slot does not match ensemble time");
  if (std::abs(inc.dt - ens.dt) > 1e-15)
    throw std::logic_error("step_particles: increment dt does not match ensemble dt");
  if (inc.upsample < 2)
    throw std::logic_error("step_particles: increment lacks an interpolation table");

  const int d = ens.dim;
  const double noise_scale = std::sqrt(nu * ens.dt);
  const CounterRng rng(ens.master_seed, ens.replica, ens.noise_purpose, ens.slot);
  const std::size_t n = ens.size();

  auto body = [&](std::size_t p) {
    double v[2];
    interpolate_velocity_raw(inc, &ens.pos[p * d], v);
    const auto [g1, g2] = rng.normal_pair(uint32_t(p));
    ens.pos[p * d] += v[0] + noise_scale * g1;
    if (d == 2) ens.pos[p * d + 1] += v[1] + noise_scale * g2;
  };

  if (workers > 1 && n > 4096) {
    const int chunks = workers * 4;
    const std::size_t chunk = (n + chunks - 1) / chunks;
    parallel_for(chunks, workers, [&](int c) {
      const std::size_t lo = std::size_t(c) * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      for (std::size_t p = lo; p < hi; ++p) body(p);
    });
  } else {
    for (std::size_t p = 0; p < n; ++p) body(p);
  }

  ens.time += ens.dt;
  ens.slot += 1;
}

MomentRecord ensemble_moments(const ParticleEnsemble& ens) {
  const int d = ens.dim;
  const std::size_t n = ens.size();
  MomentRecord rec;
  rec.t = ens.time;
  rec.mean = Vec::Zero(d);
  rec.cov = Mat::Zero(d, d);
  rec.second_moment = Mat::Zero(d, d);
  for (std::size_t p = 0; p < n; ++p)
    for (int a = 0; a < d; ++a) rec.mean[a] += ens.pos[p * d + a];
  rec.mean /= double(n);
  for (std::size_t p = 0; p < n; ++p)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        rec.cov(a, b) += (ens.pos[p * d + a] - rec.mean[a]) * (ens.pos[p * d + b] - rec.mean[b]);
        rec.second_moment(a, b) += ens.pos[p * d + a] * ens.pos[p * d + b];
      }
  rec.cov /= double(n - 1);
  rec.second_moment /= double(n);
  return rec;
}

EnsembleRun simulate_ensemble(const CovarianceSpec& spec, const Grid& grid, std::size_t n,
                              double T, double dt, uint64_t master_seed, uint32_t replica,
                              const std::vector<double>& record_times, double init_std,
                              int workers) {
  spec.validate();
  grid.validate_against(spec);
  const long steps = std::lround(T / dt);
  if (std::abs(steps * dt - T) > 1e-9 * T)
    throw ConfigError("simulate_ensemble: T must be a multiple of dt");

  SynthOptions opts;
  opts.need_node_values = false;
  opts.upsample = 4;
  const Environment env(spec, grid, dt, master_seed, replica, opts);

  EnsembleRun run;
  run.state = init_std > 0.0
                  ? make_ensemble_gaussian(spec.dimension, n, init_std, dt, master_seed, replica)
                  : make_ensemble_at_origin(spec.dimension, n, dt, master_seed, replica);

  auto want_record = [&](long step) {
    for (double rt : record_times)
      if (std::lround(rt / dt) == step) return true;
    return false;
  };

  if (want_record(0)) run.moments.push_back(ensemble_moments(run.state));
  for (long s = 0; s < steps; ++s) {
    const FieldIncrement inc = env.increment(s);
    step_particles(run.state, inc, spec.nu, workers);
    if (want_record(s + 1) || s + 1 == steps) run.moments.push_back(ensemble_moments(run.state));
  }
  return run;
}

std::vector<double> simulate_pair_separations(const CovarianceSpec& spec, const Grid& grid,
                                              std::size_t n_pairs, double s0, double T,
                                              double dt, uint64_t master_seed,
                                              uint32_t replica, int workers) {
  spec.validate();
  grid.validate_against(spec);
  const long steps = std::lround(T / dt);
  const int d = spec.dimension;

  // Two interleaved particle sets sharing one environment: particle 2p is
  // X_p, particle 2p+1 is Y_p. Independent molecular noise comes free from
  // the per-particle stream addressing.
  ParticleEnsemble ens = make_ensemble_at_origin(d, 2 * n_pairs, dt, master_seed, replica);
  const CounterRng init(master_seed, replica, StreamPurpose::InitialState, 0);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto [g1, g2] = init.normal_pair(uint32_t(p));
    double r[2] = {s0 * g1, d == 2 ? s0 * g2 : 0.0};
    for (int a = 0; a < d; ++a) {
      ens.pos[(2 * p) * d + a] = 0.5 * r[a];
      ens.pos[(2 * p + 1) * d + a] = -0.5 * r[a];
    }
  }

  SynthOptions opts;
  opts.need_node_values = false;
  opts.upsample = 4;
  const Environment env(spec, grid, dt, master_seed, replica, opts);
  for (long s = 0; s < steps; ++s) {
    const FieldIncrement inc = env.increment(s);
    step_particles(ens, inc, spec.nu, workers);
  }

  std::vector<double> sep(n_pairs * std::size_t(d));
  for (std::size_t p = 0; p < n_pairs; ++p)
    for (int a = 0; a < d; ++a)
      sep[p * d + a] = ens.pos[(2 * p) * d + a] - ens.pos[(2 * p + 1) * d + a];
  return sep;
}

FlowMapSample flow_map(const CovarianceSpec& spec, const Grid& grid, int m, double s, double t,
                       double dt, uint64_t master_seed, uint32_t replica) {
  spec.validate();
  grid.validate_against(spec);
  if (t < s) throw ConfigError("flow_map: t must be >= s");
  const int d = spec.dimension;
  const long slot0 = std::lround(s / dt);
  const long steps = std::lround((t - s) / dt);
  const double delta = grid.box_length / m;

  FlowMapSample fm;
  fm.grid = grid;
  fm.points_per_side = m;
  fm.s = s;
  fm.t = t;
  const std::size_t total = d == 1 ? std::size_t(m) : std::size_t(m) * m;
  fm.base.resize(total * d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (d == 1) {
      fm.base[idx] = idx * delta;
    } else {
      fm.base[idx * 2] = double(idx / std::size_t(m)) * delta;
      fm.base[idx * 2 + 1] = double(idx % std::size_t(m)) * delta;
    }
  }
  fm.images = fm.base;

  SynthOptions opts;
  opts.need_node_values = false;
  opts.upsample = 4;
  const Environment env(spec, grid, dt, master_seed, replica, opts);
  const double noise_scale = std::sqrt(spec.nu * dt);

  for (long k = 0; k < steps; ++k) {
    const FieldIncrement inc = env.increment(slot0 + k);
    // one Brownian increment shared by every base point
    const CounterRng rng(master_seed, replica, StreamPurpose::FlowMap, slot0 + k);
    const auto [g1, g2] = rng.normal_pair(0);
    const double b[2] = {noise_scale * g1, noise_scale * g2};
    for (std::size_t idx = 0; idx < total; ++idx) {
      double v[2];
      interpolate_velocity_raw(inc, &fm.images[idx * d], v);
      for (int a = 0; a < d; ++a) fm.images[idx * d + a] += v[a] + b[a];
    }
  }
  return fm;
}

std::vector<double> flow_jacobian(const FlowMapSample& fm) {
  const int d = fm.grid.dim;
  const int m = fm.points_per_side;
  const double delta = fm.grid.box_length / m;
  const double L = fm.grid.box_length;
  const std::size_t total = d == 1 ? std::size_t(m) : std::size_t(m) * m;

  for (double v : fm.images)
    if (!std::isfinite(v)) throw std::runtime_error("flow_jacobian: non-finite image");

  // phi(x + L e_b) = phi(x) + L e_b on the torus, so wrapped lattice
  // neighbors contribute with an explicit box shift.
  auto image = [&](long i, long j, int comp) {
    double shift = 0.0;
    if (d == 1) {
      if (i < 0) shift = -L;
      if (i >= m) shift = L;
      return fm.images[wrap_index(i, m) * d + comp] + (comp == 0 ? shift : 0.0);
    }
    double sx = 0.0, sy = 0.0;
    if (i < 0) sx = -L;
    if (i >= m) sx = L;
    if (j < 0) sy = -L;
    if (j >= m) sy = L;
    const std::size_t idx = wrap_index(i, m) * std::size_t(m) + wrap_index(j, m);
    return fm.images[idx * d + comp] + (comp == 0 ? sx : sy);
  };

  std::vector<double> det(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (d == 1) {
      const long i = long(idx);
      det[idx] = (image(i + 1, 0, 0) - image(i - 1, 0, 0)) / (2.0 * delta);
    } else {
      const long i = long(idx / std::size_t(m));
      const long j = long(idx % std::size_t(m));
      const double a00 = (image(i + 1, j, 0) - image(i - 1, j, 0)) / (2.0 * delta);
      const double a01 = (image(i, j + 1, 0) - image(i, j - 1, 0)) / (2.0 * delta);
      const double a10 = (image(i + 1, j, 1) - image(i - 1, j, 1)) / (2.0 * delta);
      const double a11 = (image(i, j + 1, 1) - image(i, j - 1, 1)) / (2.0 * delta);
      det[idx] = a00 * a11 - a01 * a10;
    }
  }
  return det;
}

double default_dt(const CovarianceSpec& spec, const Grid& grid) {
  const double dx = grid.dx();
  Eigen::SelfAdjointEigenSolver<Mat> es(effective_diffusivity(spec));
  const double lambda = es.eigenvalues().maxCoeff();
  double dt = dx * dx / (4.0 * spec.dimension * lambda);
  if (spec.sigma2 > 0.0) {
    const double adv = dx / (4.0 * std::sqrt(spec.sigma2));
    dt = std::min(dt, adv * adv);
  }
  return dt;
}

}  // namespace klab

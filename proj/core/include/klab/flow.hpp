#pragma once

#include "klab/covariance.hpp"
#include "klab/field_synth.hpp"
#include "klab/grid.hpp"
#include "klab/rng.hpp"

#include <cstdint>
#include <vector>

namespace klab {

// N particles sharing one velocity-field realization with independent
// molecular noise. Coordinates are kept unwrapped (displacement statistics
// live on the full space); the periodic wrap happens only at field lookup.
struct ParticleEnsemble {
  int dim = 1;
  uint32_t replica = 0;
  uint64_t master_seed = 0;
  StreamPurpose noise_purpose = StreamPurpose::Molecular;
  double dt = 0.0;
  double time = 0.0;
  int64_t slot = 0;               // index of the next increment to consume
  std::vector<double> pos;        // N * dim, particle-major

  std::size_t size() const { return pos.size() / std::size_t(dim); }
};

ParticleEnsemble make_ensemble_at_origin(int dim, std::size_t n_particles, double dt,
                                         uint64_t master_seed, uint32_t replica);

// Initial positions drawn i.i.d. from N(0, std^2 I) (InitialState stream).
ParticleEnsemble make_ensemble_gaussian(int dim, std::size_t n_particles, double init_std,
                                        double dt, uint64_t master_seed, uint32_t replica);

// One Euler-Maruyama step: X <- X + dV(X) + sqrt(nu dt) xi, with dV read at
// the pre-step position. The increment must match the ensemble's replica,
// step slot and dt; reusing an environment across replicas is a correctness
// bug and trips a hard error.
void step_particles(ParticleEnsemble& ens, const FieldIncrement& inc, double nu,
                    int workers = 1);

struct MomentRecord {
  double t = 0.0;
  Vec mean;
  Mat cov;            // sample covariance about the mean
  Mat second_moment;  // E[X X^T] about the origin (the annealed-law object)
};

MomentRecord ensemble_moments(const ParticleEnsemble& ens);

struct EnsembleRun {
  ParticleEnsemble state;
  std::vector<MomentRecord> moments;
};

// Shared-environment simulation over [0, T]; moments are recorded at the
// requested times (which must be multiples of dt) and at T.
EnsembleRun simulate_ensemble(const CovarianceSpec& spec, const Grid& grid,
                              std::size_t n_particles, double T, double dt,
                              uint64_t master_seed, uint32_t replica,
                              const std::vector<double>& record_times = {},
                              double init_std = 0.0, int workers = 1);

// Pairs (X, Y) sharing the replica's environment with independent molecular
// noises; initial separation X - Y ~ N(0, s0^2 I), centered at the origin.
// Returns the separations X - Y at time T, pair-major.
std::vector<double> simulate_pair_separations(const CovarianceSpec& spec, const Grid& grid,
                                              std::size_t n_pairs, double s0, double T,
                                              double dt, uint64_t master_seed,
                                              uint32_t replica, int workers = 1);

// Lattice of initial points evolved under one realization of (V, B): a
// sample of the stochastic flow map.  All base points share the single
// Brownian path (FlowMap stream).
struct FlowMapSample {
  Grid grid;
  int points_per_side = 0;
  double s = 0.0, t = 0.0;
  std::vector<double> base;    // m^dim * dim
  std::vector<double> images;  // m^dim * dim, unwrapped
};

FlowMapSample flow_map(const CovarianceSpec& spec, const Grid& grid, int points_per_side,
                       double s, double t, double dt, uint64_t master_seed, uint32_t replica);

// Central-difference Jacobian determinant of x -> phi_{s,t}(x) at every
// lattice point. Throws on non-finite images.
std::vector<double> flow_jacobian(const FlowMapSample& fm);

// Conservative time step for the particle/grid schemes:
// min( dx^2 / (4 d lambda_max), (dx / 4 sigma)^2 ).
double default_dt(const CovarianceSpec& spec, const Grid& grid);

}  // namespace klab

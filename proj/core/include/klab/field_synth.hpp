#pragma once

#include "klab/covariance.hpp"
#include "klab/grid.hpp"
#include "klab/rng.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace klab {

// One time-step realization of the velocity increment V(dt, .) on the grid.
// Values are already integrated over the step (magnitude ~ sigma sqrt(dt)),
// so schemes add them directly without another dt factor. Immutable after
// synthesis; safe to read from many threads.
struct FieldIncrement {
  Grid grid;
  double dt = 0.0;
  uint32_t replica = 0;
  int64_t slot = 0;

  // d arrays of n^dim node values (may be empty if only the fine
  // interpolation table was requested).
  std::vector<std::vector<double>> comps;

  // Spectrally upsampled copies for off-grid evaluation.
  int upsample = 0;
  std::vector<std::vector<double>> fine;

  // Fourier coefficients V_hat (kept only on request, for exact evaluation).
  std::vector<std::vector<std::complex<double>>> spectrum;
};

struct SynthOptions {
  bool need_node_values = true;
  int upsample = 0;            // power of two; 0 disables the fine table
  bool keep_spectrum = false;  // retain coefficients for exact evaluation
};

// Gaussian field with Cov(dV_i(x), dV_j(y)) = R_ij(x - y) dt on the torus
// (periodized kernel, spectral truncation below machine noise at the
// required resolution). Draws are addressed by (seed, replica, slot), so the
// same arguments always reproduce the same field, in any evaluation order.
FieldIncrement synthesize_increment(const CovarianceSpec& spec, const Grid& grid, double dt,
                                    uint64_t master_seed, uint32_t replica, int64_t slot,
                                    const SynthOptions& opts = {});

// Smooth interpolation of the increment at an off-grid point (cubic on the
// spectrally upsampled table; exact at grid nodes, reproduces constants).
Vec interpolate_velocity(const FieldIncrement& inc, const Vec& x);

// Allocation-free variant for particle loops; x and v_out hold dim doubles.
void interpolate_velocity_raw(const FieldIncrement& inc, const double* x, double* v_out);

// Direct Fourier-sum evaluation (requires keep_spectrum). O(n^dim) per call;
// the oracle against which the interpolation error is bounded in tests.
Vec eval_velocity_exact(const FieldIncrement& inc, const Vec& x);

// max_k |k . V_hat(k)| / max_k |k| |V_hat(k)|, computed from node values.
double relative_spectral_divergence(const FieldIncrement& inc);

// Deterministic per-replica increment source, indexed by time-step slot.
// Reuse of a slot returns the identical field, which is what makes
// noise-conditioning experiments implementable.
class Environment {
 public:
  Environment(CovarianceSpec spec, Grid grid, double dt, uint64_t master_seed,
              uint32_t replica, SynthOptions opts = {});

  FieldIncrement increment(int64_t slot) const;

  const Grid& grid() const { return grid_; }
  const CovarianceSpec& spec() const { return spec_; }
  double dt() const { return dt_; }
  uint32_t replica() const { return replica_; }

 private:
  CovarianceSpec spec_;
  Grid grid_;
  double dt_;
  uint64_t master_seed_;
  uint32_t replica_;
  SynthOptions opts_;
};

// Flat binary dump (header + row-major float64 node values); see README for
// the byte layout.
void dump_increment(const FieldIncrement& inc, std::ostream& out);
FieldIncrement load_increment(std::istream& in);

}  // namespace klab

#pragma once

#include "klab/covariance.hpp"
#include "klab/grid.hpp"

#include <iosfwd>
#include <vector>

namespace klab {

// Nonnegative-in-principle scalar field on the periodic grid (1/length^dim).
// The explicit schemes are not sign-preserving, so min/max are monitored
// rather than asserted here.
struct DensityField {
  Grid grid;
  double time = 0.0;
  std::vector<double> values;

  double mass() const;  // sum * dx^dim
  double min_value() const;
  double max_value() const;

  // Value at the node nearest to x (x wrapped into the box).
  double at(const Vec& x) const;
};

// Separation-variable fields reuse the same storage and invariants.
using ZField = DensityField;

// Gaussian density N(0, Sigma t) with Sigma = nu I + R(0); t > 0 required.
double gaussian_density(const CovarianceSpec& spec, double t, const Vec& x);

// As above but wrapped onto the torus (sum over periodic images; `rings`
// image shells are enough for any configuration this project ships).
double gaussian_density_periodized(const CovarianceSpec& spec, double t, const Vec& x,
                                   double box_length, int rings = 3);

// Periodized Gaussian sampled on the grid, normalized to discrete mass 1.
DensityField gaussian_field(const CovarianceSpec& spec, double t, const Grid& grid);

DensityField constant_field(const Grid& grid, double value, double time = 0.0);

// Gaussian-kernel density estimate of a particle cloud: cloud-in-cell
// deposit followed by exact spectral smoothing with a Gaussian of standard
// deviation `bandwidth` (>= 2 dx). Discrete mass is exactly 1.
DensityField kde_estimate(const std::vector<double>& positions, int dim, double bandwidth,
                          const Grid& grid);

// CSV export: one row per node, coordinates then value.
void write_density_csv(const DensityField& f, std::ostream& out);

}  // namespace klab

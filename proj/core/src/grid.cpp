#include "klab/grid.hpp"

#include <cmath>

namespace klab {

Vec Grid::node(std::size_t idx) const {
  Vec x(dim);
  if (dim == 1) {
    x[0] = double(idx) * dx();
  } else {
    x[0] = double(idx / std::size_t(n)) * dx();
    x[1] = double(idx % std::size_t(n)) * dx();
  }
  return x;
}

double Grid::fold(double x) const {
  const double L = box_length;
  double y = std::fmod(x, L);
  if (y < -L / 2) y += L;
  if (y >= L / 2) y -= L;
  return y;
}

Vec Grid::fold(Vec z) const {
  for (int a = 0; a < z.size(); ++a) z[a] = fold(z[a]);
  return z;
}

void Grid::validate_against(const CovarianceSpec& spec) const {
  if (dim != spec.dimension) throw ResolutionError("grid dimension does not match covariance spec");
  if (dim < 1 || dim > 2) throw ResolutionError("grid dimension must be 1 or 2");
  if (n < 8 || (n & (n - 1)) != 0) throw ResolutionError("grid points_per_side must be a power of two >= 8");
  if (!(box_length > 0.0)) throw ResolutionError("box_length must be > 0");
  if (box_length < 8.0 * spec.support_radius)
    throw ResolutionError("box_length must be >= 8 * support_radius");
  if (dx() > spec.corr_length / 4.0 + 1e-12)
    throw ResolutionError("grid spacing must satisfy dx <= corr_length / 4");
}

std::size_t wrap_index(long i, int n) {
  long m = i % n;
  if (m < 0) m += n;
  return std::size_t(m);
}

}  // namespace klab

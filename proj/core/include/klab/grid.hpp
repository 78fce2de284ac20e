#pragma once

#include "klab/covariance.hpp"

#include <cstddef>
#include <vector>

namespace klab {

// Periodic box [0,L)^dim sampled on n points per side, row-major storage.
struct Grid {
  int dim = 1;
  int n = 256;
  double box_length = 64.0;

  double dx() const { return box_length / n; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= std::size_t(n);
    return s;
  }

  // Node index <-> coordinates. For dim==2 the flat index is i*n + j with
  // coordinates (x0, x1) = (i, j) * dx.
  std::size_t flat(int i, int j = 0) const {
    return dim == 1 ? std::size_t(i) : std::size_t(i) * n + j;
  }
  Vec node(std::size_t idx) const;

  // Signed separation folded into [-L/2, L/2) per axis.
  double fold(double x) const;
  Vec fold(Vec z) const;

  // Resolution requirements relative to a kernel: the box must dwarf the
  // support (L >= 8 M) and the mesh must resolve the correlation length
  // (dx <= l/4). Throws ConfigError.
  void validate_against(const CovarianceSpec& spec) const;
};

std::size_t wrap_index(long i, int n);

}  // namespace klab

#include "klab/density_field.hpp"

#include "klab/fft.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>

namespace klab {

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * std::pow(grid.dx(), grid.dim);
}

double DensityField::min_value() const {
  return *std::min_element(values.begin(), values.end());
}

double DensityField::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

double DensityField::at(const Vec& x) const {
  const int n = grid.n;
  const double dx = grid.dx();
  long i = std::lround(x[0] / dx);
  if (grid.dim == 1) return values[wrap_index(i, n)];
  long j = std::lround(x[1] / dx);
  return values[wrap_index(i, n) * std::size_t(n) + wrap_index(j, n)];
}

double gaussian_density(const CovarianceSpec& spec, double t, const Vec& x) {
  if (!(t > 0.0)) throw std::domain_error("gaussian_density: t must be > 0");
  const int d = spec.dimension;
  const Mat sigma = effective_diffusivity(spec) * t;
  const double det = sigma.determinant();
  const Vec y = sigma.llt().solve(x);
  const double quad = x.dot(y);
  return std::exp(-0.5 * quad) / std::sqrt(std::pow(2.0 * M_PI, d) * det);
}

double gaussian_density_periodized(const CovarianceSpec& spec, double t, const Vec& x,
                                   double box_length, int rings) {
  const int d = spec.dimension;
  double s = 0.0;
  Vec shifted(d);
  for (int mi = -rings; mi <= rings; ++mi) {
    if (d == 1) {
      shifted[0] = x[0] + mi * box_length;
      s += gaussian_density(spec, t, shifted);
    } else {
      for (int mj = -rings; mj <= rings; ++mj) {
        shifted[0] = x[0] + mi * box_length;
        shifted[1] = x[1] + mj * box_length;
        s += gaussian_density(spec, t, shifted);
      }
    }
  }
  return s;
}

DensityField gaussian_field(const CovarianceSpec& spec, double t, const Grid& grid) {
  DensityField f;
  f.grid = grid;
  f.time = 0.0;
  f.values.resize(grid.size());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const Vec x = grid.fold(grid.node(idx));
    f.values[idx] = gaussian_density_periodized(spec, t, x, grid.box_length);
  }
  const double m = f.mass();
  for (double& v : f.values) v /= m;
  return f;
}

DensityField constant_field(const Grid& grid, double value, double time) {
  DensityField f;
  f.grid = grid;
  f.time = time;
  f.values.assign(grid.size(), value);
  return f;
}

DensityField kde_estimate(const std::vector<double>& positions, int dim, double bandwidth,
                          const Grid& grid) {
  if (positions.empty()) throw std::invalid_argument("kde_estimate: empty ensemble");
  if (bandwidth < 2.0 * grid.dx())
    throw ResolutionError("kde_estimate: bandwidth must be >= 2 dx");
  const std::size_t n_pts = positions.size() / std::size_t(dim);
  const int n = grid.n;
  const double dx = grid.dx();
  const double L = grid.box_length;

  DensityField f = constant_field(grid, 0.0);
  const double w = 1.0 / (double(n_pts) * std::pow(dx, dim));

  // cloud-in-cell deposit
  for (std::size_t p = 0; p < n_pts; ++p) {
    double u0 = positions[p * dim] / dx;
    u0 -= std::floor(u0 / n) * n;
    const long i0 = long(std::floor(u0));
    const double t0 = u0 - double(i0);
    if (dim == 1) {
      f.values[wrap_index(i0, n)] += w * (1.0 - t0);
      f.values[wrap_index(i0 + 1, n)] += w * t0;
    } else {
      double u1 = positions[p * dim + 1] / dx;
      u1 -= std::floor(u1 / n) * n;
      const long j0 = long(std::floor(u1));
      const double t1 = u1 - double(j0);
      f.values[wrap_index(i0, n) * std::size_t(n) + wrap_index(j0, n)] += w * (1 - t0) * (1 - t1);
      f.values[wrap_index(i0 + 1, n) * std::size_t(n) + wrap_index(j0, n)] += w * t0 * (1 - t1);
      f.values[wrap_index(i0, n) * std::size_t(n) + wrap_index(j0 + 1, n)] += w * (1 - t0) * t1;
      f.values[wrap_index(i0 + 1, n) * std::size_t(n) + wrap_index(j0 + 1, n)] += w * t0 * t1;
    }
  }

  // spectral Gaussian smoothing: multiply by exp(-h^2 k^2 / 2); the k = 0
  // factor is 1, so the deposited mass (exactly 1) is preserved.
  std::vector<std::complex<double>> buf(f.values.begin(), f.values.end());
  fft::forward(dim, n, buf);
  const double kf = 2.0 * M_PI / L;
  for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
    double k2;
    if (dim == 1) {
      const double k = kf * fft::signed_freq(int(idx), n);
      k2 = k * k;
    } else {
      const double ka = kf * fft::signed_freq(int(idx / std::size_t(n)), n);
      const double kb = kf * fft::signed_freq(int(idx % std::size_t(n)), n);
      k2 = ka * ka + kb * kb;
    }
    buf[idx] *= std::exp(-0.5 * bandwidth * bandwidth * k2);
  }
  fft::backward(dim, n, buf);
  const double scale = 1.0 / double(f.values.size());
  for (std::size_t idx = 0; idx < f.values.size(); ++idx) f.values[idx] = buf[idx].real() * scale;
  return f;
}

void write_density_csv(const DensityField& f, std::ostream& out) {
  char line[128];
  if (f.grid.dim == 1) {
    out << "x,value\n";
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g,%.17g\n", f.grid.node(i)[0], f.values[i]);
      out << line;
    }
  } else {
    out << "x0,x1,value\n";
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const Vec x = f.grid.node(i);
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", x[0], x[1], f.values[i]);
      out << line;
    }
  }
}

}  // namespace klab

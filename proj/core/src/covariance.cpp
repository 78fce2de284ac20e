#include "klab/covariance.hpp"

#include <cmath>

namespace klab {

namespace {

// Gaussian profile and the stream/potential amplitude shared by the
// projection families. The projection kernels are built from a scalar
// Gaussian potential psi(z) = amp * exp(-|z|^2 / (2 l^2)):
//   potential:       R = -Hess psi           (longitudinal, S ~ k k^T psi_hat)
//   incompressible:  R = (Hess - I Lap) psi  (transverse, S ~ (k^2 I - k k^T) psi_hat)
// Both decay like the Gaussian itself and are exactly solenoidal /
// irrotational in the spectral sense. amp is fixed by tr R(0) = d sigma2.

double psi_amplitude(const CovarianceSpec& s) {
  const double l2 = s.corr_length * s.corr_length;
  switch (s.family) {
    case KernelFamily::Potential:
      return s.sigma2 * l2;
    case KernelFamily::Incompressible:
      return s.sigma2 * l2 / double(s.dimension - 1);
    default:
      return 0.0;
  }
}

}  // namespace

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "isotropic-scalar") return KernelFamily::IsotropicScalar;
  if (s == "incompressible") return KernelFamily::Incompressible;
  if (s == "potential") return KernelFamily::Potential;
  throw ConfigError("unknown kernel family: '" + s + "'");
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::IsotropicScalar: return "isotropic-scalar";
    case KernelFamily::Incompressible: return "incompressible";
    case KernelFamily::Potential: return "potential";
  }
  return "?";
}

void CovarianceSpec::validate() const {
  if (dimension < 1) throw ConfigError("dimension must be >= 1");
  if (!(nu > 0.0)) throw ConfigError("nu must be > 0");
  if (!(sigma2 >= 0.0)) throw ConfigError("sigma2 must be >= 0");
  if (!(corr_length > 0.0)) throw ConfigError("corr_length must be > 0");
  if (!(support_radius >= 4.0 * corr_length))
    throw ConfigError("support_radius must be >= 4 * corr_length");
  if (dimension == 1 && family != KernelFamily::IsotropicScalar)
    throw ConfigError("projection families require dimension >= 2 "
                      "(the divergence-free subspace is trivial in d = 1)");
}

MatrixKernel eval_R_raw(const CovarianceSpec& s, const Vec& z) {
  const int d = s.dimension;
  const double l2 = s.corr_length * s.corr_length;
  const double r2 = z.squaredNorm();
  const double e = std::exp(-r2 / (2.0 * l2));
  Mat R = Mat::Zero(d, d);
  switch (s.family) {
    case KernelFamily::IsotropicScalar:
      R = (s.sigma2 * e) * Mat::Identity(d, d);
      break;
    case KernelFamily::Potential: {
      // -Hess psi = (amp/l^2) e (I - z z^T / l^2)
      const double a = psi_amplitude(s) / l2;
      R = a * e * (Mat::Identity(d, d) - (z * z.transpose()) / l2);
      break;
    }
    case KernelFamily::Incompressible: {
      // (Hess - I Lap) psi = (amp/l^2) e [ z z^T / l^2 + (d - 1 - r^2/l^2) I ]
      const double a = psi_amplitude(s) / l2;
      R = a * e * ((z * z.transpose()) / l2 +
                   (double(d) - 1.0 - r2 / l2) * Mat::Identity(d, d));
      break;
    }
  }
  return R;
}

MatrixKernel eval_R(const CovarianceSpec& s, const Vec& z) {
  s.validate();
  if (z.norm() > s.support_radius) return Mat::Zero(s.dimension, s.dimension);
  return eval_R_raw(s, z);
}

Vec div_R(const CovarianceSpec& s, const Vec& z) {
  s.validate();
  const int d = s.dimension;
  if (z.norm() > s.support_radius) return Vec::Zero(d);
  const double l2 = s.corr_length * s.corr_length;
  const double r2 = z.squaredNorm();
  const double e = std::exp(-r2 / (2.0 * l2));
  switch (s.family) {
    case KernelFamily::IsotropicScalar:
      // (div R)_j = d f / dz_j = -(z_j / l^2) f
      return Vec(-(s.sigma2 * e / l2) * z);
    case KernelFamily::Incompressible:
      return Vec::Zero(d);
    case KernelFamily::Potential: {
      // (div R)_j = -d(Lap psi)/dz_j = -(amp z_j / l^4) e (d + 2 - r^2/l^2)
      const double a = psi_amplitude(s) / (l2 * l2);
      return Vec(-(a * e * (double(d) + 2.0 - r2 / l2)) * z);
    }
  }
  return Vec::Zero(d);
}

Mat effective_diffusivity(const CovarianceSpec& s) {
  s.validate();
  return s.nu * Mat::Identity(s.dimension, s.dimension) +
         eval_R_raw(s, Vec::Zero(s.dimension));
}

Mat a22_matrix(const CovarianceSpec& s, const Vec& z) {
  const Mat R = eval_R(s, z);
  return effective_diffusivity(s) - 0.5 * (R + R.transpose());
}

Mat a_matrix(const CovarianceSpec& s, const Vec& z) {
  const int d = s.dimension;
  const Mat R0 = eval_R_raw(s, Vec::Zero(d));
  const Mat R = eval_R(s, z);
  const Mat sym = 0.5 * (R + R.transpose());
  Mat A = Mat::Zero(2 * d, 2 * d);
  A.topLeftCorner(d, d) =
      0.25 * (s.nu * Mat::Identity(d, d) + R0) + 0.25 * sym;
  A.topRightCorner(d, d) = 0.25 * (R.transpose() - R);
  A.bottomLeftCorner(d, d) = 0.25 * (R - R.transpose());
  A.bottomRightCorner(d, d) = s.nu * Mat::Identity(d, d) + R0 - sym;
  return A;
}

double chi_closed_form(const CovarianceSpec& s, const Vec& z) {
  s.validate();
  if (s.family != KernelFamily::IsotropicScalar)
    throw ConfigError("chi_closed_form requires the isotropic-scalar family; "
                      "use the numeric invariant-density solver instead");
  const double f0 = s.sigma2;
  double fz = 0.0;
  if (z.norm() <= s.support_radius) {
    fz = s.sigma2 * std::exp(-z.squaredNorm() / (2.0 * s.corr_length * s.corr_length));
  }
  return (s.nu + f0) / (s.nu + f0 - fz);
}

Mat spectral_density(const CovarianceSpec& s, const Vec& k) {
  const int d = s.dimension;
  const double l2 = s.corr_length * s.corr_length;
  const double k2 = k.squaredNorm();
  const double gauss = std::pow(2.0 * M_PI * l2, 0.5 * d) * std::exp(-0.5 * l2 * k2);
  switch (s.family) {
    case KernelFamily::IsotropicScalar:
      return (s.sigma2 * gauss) * Mat::Identity(d, d);
    case KernelFamily::Potential: {
      if (k2 == 0.0) return Mat::Zero(d, d);
      // psi_hat(k) * k k^T
      return (psi_amplitude(s) * gauss) * (k * k.transpose());
    }
    case KernelFamily::Incompressible: {
      if (k2 == 0.0) return Mat::Zero(d, d);
      // psi_hat(k) * (k^2 I - k k^T)
      return (psi_amplitude(s) * gauss) *
             (k2 * Mat::Identity(d, d) - k * k.transpose());
    }
  }
  return Mat::Zero(d, d);
}

}  // namespace klab

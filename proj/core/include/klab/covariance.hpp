#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace klab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// d x d matrix-valued covariance kernel evaluation R(z); velocity^2 units.
using MatrixKernel = Eigen::MatrixXd;

enum class KernelFamily {
  IsotropicScalar,  // R(z) = f(z) I with Gaussian profile f
  Incompressible,   // divergence-free (transverse spectral projection)
  Potential,        // gradient field (longitudinal spectral projection)
};

KernelFamily kernel_family_from_string(const std::string& s);
std::string to_string(KernelFamily family);

// Error classes map to distinct CLI exit codes.
struct ConfigError : std::runtime_error {  // schema / configuration violation
  using std::runtime_error::runtime_error;
};
struct ResolutionError : std::runtime_error {  // grid resolution or stability
  using std::runtime_error::runtime_error;
};
struct InsufficientReplicas : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Velocity statistics: molecular diffusivity nu plus a stationary matrix
// kernel R determined by (family, sigma2, corr_length). R is treated as
// exactly zero beyond support_radius. sigma2 is normalized so that
// tr R(0) = d * sigma2 for every family.
struct CovarianceSpec {
  int dimension = 1;
  double nu = 1.0;              // length^2 / time
  KernelFamily family = KernelFamily::IsotropicScalar;
  double sigma2 = 0.5;          // velocity^2
  double corr_length = 1.0;     // length
  double support_radius = 4.0;  // length; effective support of R

  void validate() const;  // throws ConfigError

  bool is_incompressible() const { return family == KernelFamily::Incompressible || sigma2 == 0.0; }
};

// R(z); zero matrix for |z| > support_radius.
MatrixKernel eval_R(const CovarianceSpec& spec, const Vec& z);

// Same closed forms without the support truncation (synthesis-side value).
MatrixKernel eval_R_raw(const CovarianceSpec& spec, const Vec& z);

// (div R)(z): j-th component is sum_i dR_ij/dz_i. Analytic per family.
Vec div_R(const CovarianceSpec& spec, const Vec& z);

// nu I + R(0), the annealed diffusivity of a single particle.
Mat effective_diffusivity(const CovarianceSpec& spec);

// 2d x 2d diffusion block matrix A(z) of the (center of mass, separation)
// pair process, and its lower-right separation block
// A22(z) = nu I + R(0) - (R(z)+R(z)^T)/2.
Mat a_matrix(const CovarianceSpec& spec, const Vec& z);
Mat a22_matrix(const CovarianceSpec& spec, const Vec& z);

// Closed-form invariant density for the scalar family:
// chi(z) = (nu + f(0)) / (nu + f(0) - f(z)). Throws for other families.
double chi_closed_form(const CovarianceSpec& spec, const Vec& z);

// Matrix spectral density S(k) with R(z) = (2pi)^-d Int S(k) e^{ikz} dk.
// On a periodic box of side L this is used as
//   R_per(z) = L^-d sum_{k in grid} S(k) e^{ik.z}.
// Positive semidefinite for every k; projection families vanish at k = 0.
Mat spectral_density(const CovarianceSpec& spec, const Vec& k);

}  // namespace klab

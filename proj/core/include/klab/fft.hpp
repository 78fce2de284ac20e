#pragma once

#include <complex>
#include <vector>

namespace klab {
namespace fft {

// Thin cached-plan front end over FFTW, complex-to-complex, in place,
// row-major n^dim arrays with dim in {1,2}. Transforms are unnormalized:
// forward applies sum exp(-i k.x), backward applies sum exp(+i k.x), so a
// round trip multiplies by n^dim. Plans are created once per (dim,n,sign)
// under a lock with FFTW_ESTIMATE, which keeps results bit-reproducible.

void forward(int dim, int n, std::complex<double>* data);
void backward(int dim, int n, std::complex<double>* data);

inline void forward(int dim, int n, std::vector<std::complex<double>>& v) {
  forward(dim, n, v.data());
}
inline void backward(int dim, int n, std::vector<std::complex<double>>& v) {
  backward(dim, n, v.data());
}

// Signed integer frequency for index j on an n-point axis: 0..n/2, then
// negative. j == n/2 is the (self-conjugate) Nyquist index.
inline int signed_freq(int j, int n) { return j <= n / 2 ? j : j - n; }

}  // namespace fft
}  // namespace klab

#include <doctest.h>

#include "klab/fft.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace klab;
using cplx = std::complex<double>;

TEST_CASE("1d round trip scales by n") {
  const int n = 64;
  std::vector<cplx> v(n), orig(n);
  for (int i = 0; i < n; ++i) orig[i] = v[i] = cplx(std::sin(0.1 * i), std::cos(0.2 * i));
  fft::forward(1, n, v);
  fft::backward(1, n, v);
  for (int i = 0; i < n; ++i) CHECK(std::abs(v[i] / double(n) - orig[i]) < 1e-12);
}

TEST_CASE("backward applies exp(+ikx) convention") {
  // Single coefficient at m=1 must produce e^{2 pi i x / n}.
  const int n = 32;
  std::vector<cplx> v(n, cplx(0, 0));
  v[1] = cplx(1.0, 0.0);
  fft::backward(1, n, v);
  for (int j = 0; j < n; ++j) {
    const double phase = 2.0 * M_PI * j / n;
    CHECK(std::abs(v[j] - cplx(std::cos(phase), std::sin(phase))) < 1e-12);
  }
}

TEST_CASE("2d round trip") {
  const int n = 16;
  std::vector<cplx> v(n * n), orig(n * n);
  for (int i = 0; i < n * n; ++i) orig[i] = v[i] = cplx(double(i % 7), double(i % 5));
  fft::forward(2, n, v);
  fft::backward(2, n, v);
  for (int i = 0; i < n * n; ++i) CHECK(std::abs(v[i] / double(n * n) - orig[i]) < 1e-11);
}

TEST_CASE("signed frequencies") {
  CHECK(fft::signed_freq(0, 8) == 0);
  CHECK(fft::signed_freq(3, 8) == 3);
  CHECK(fft::signed_freq(4, 8) == 4);
  CHECK(fft::signed_freq(5, 8) == -3);
  CHECK(fft::signed_freq(7, 8) == -1);
}

#include "klab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace klab {
namespace fft {

namespace {

std::mutex g_plan_mutex;
std::map<std::tuple<int, int, int>, fftw_plan> g_plans;

fftw_plan plan_for(int dim, int n, int sign) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  const auto key = std::make_tuple(dim, n, sign);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;

  const size_t total = dim == 1 ? size_t(n) : size_t(n) * size_t(n);
  fftw_complex* scratch = fftw_alloc_complex(total);
  fftw_plan p = nullptr;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (dim == 1) {
    p = fftw_plan_dft_1d(n, scratch, scratch, sign, flags);
  } else if (dim == 2) {
    p = fftw_plan_dft_2d(n, n, scratch, scratch, sign, flags);
  } else {
    fftw_free(scratch);
    throw std::invalid_argument("fft: only dim 1 and 2 are supported");
  }
  fftw_free(scratch);
  if (!p) throw std::runtime_error("fftw plan creation failed");
  g_plans.emplace(key, p);
  return p;
}

void execute(int dim, int n, int sign, std::complex<double>* data) {
  fftw_plan p = plan_for(dim, n, sign);
  fftw_complex* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, d, d);
}

}  // namespace

void forward(int dim, int n, std::complex<double>* data) {
  execute(dim, n, FFTW_FORWARD, data);
}

void backward(int dim, int n, std::complex<double>* data) {
  execute(dim, n, FFTW_BACKWARD, data);
}

}  // namespace fft
}  // namespace klab

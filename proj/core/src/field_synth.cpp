#include "klab/field_synth.hpp"

#include "klab/fft.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace klab {

namespace {

using cplx = std::complex<double>;

// Integer frequency vector of flat index `idx`.
inline void freqs_of(std::size_t idx, int dim, int n, int m[2]) {
  if (dim == 1) {
    m[0] = fft::signed_freq(int(idx), n);
    m[1] = 0;
  } else {
    m[0] = fft::signed_freq(int(idx / std::size_t(n)), n);
    m[1] = fft::signed_freq(int(idx % std::size_t(n)), n);
  }
}

// Flat index of -k (per-axis j -> (n - j) mod n).
inline std::size_t conj_index(std::size_t idx, int dim, int n) {
  if (dim == 1) {
    const std::size_t j = idx;
    return j == 0 ? 0 : std::size_t(n) - j;
  }
  const std::size_t i = idx / std::size_t(n), j = idx % std::size_t(n);
  const std::size_t ic = i == 0 ? 0 : std::size_t(n) - i;
  const std::size_t jc = j == 0 ? 0 : std::size_t(n) - j;
  return ic * std::size_t(n) + jc;
}

}  // namespace

FieldIncrement synthesize_increment(const CovarianceSpec& spec, const Grid& grid, double dt,
                                    uint64_t master_seed, uint32_t replica, int64_t slot,
                                    const SynthOptions& opts) {
  grid.validate_against(spec);
  if (!(dt > 0.0)) throw ConfigError("synthesize_increment: dt must be > 0");

  const int d = spec.dimension;
  const int n = grid.n;
  const double L = grid.box_length;
  const std::size_t N = grid.size();
  const double l2 = spec.corr_length * spec.corr_length;
  const double two_pi_over_L = 2.0 * M_PI / L;
  const double vol = std::pow(L, d);
  // Scalar spectral amplitude common to all families (the Gaussian factor of
  // spectral_density); family handling below mirrors spectral_density().
  const double gauss_pref = std::pow(2.0 * M_PI * l2, 0.5 * d);

  FieldIncrement inc;
  inc.grid = grid;
  inc.dt = dt;
  inc.replica = replica;
  inc.slot = slot;

  std::vector<std::vector<cplx>> vhat(d, std::vector<cplx>(N, cplx(0.0, 0.0)));

  if (spec.sigma2 > 0.0) {
    const CounterRng rng(master_seed, replica, StreamPurpose::Environment, slot);
    const bool scalar = spec.family == KernelFamily::IsotropicScalar;
    const bool transverse = spec.family == KernelFamily::Incompressible;
    const double psi_amp = scalar ? 0.0
                           : spec.sigma2 * l2 / (transverse ? double(d - 1) : 1.0);

    for (std::size_t idx = 0; idx < N; ++idx) {
      int m[2];
      freqs_of(idx, d, n, m);
      double k[2] = {two_pi_over_L * m[0], two_pi_over_L * m[1]};
      const double k2 = k[0] * k[0] + k[1] * k[1];

      // complex standard Gaussian per component (E|w|^2 = 1)
      cplx w[2];
      for (int c = 0; c < d; ++c) {
        const auto [g1, g2] = rng.normal_pair(uint32_t(idx * std::size_t(d) + c));
        w[c] = cplx(g1, g2) * M_SQRT1_2;
      }

      if (scalar) {
        const double amp = std::sqrt(spec.sigma2 * gauss_pref *
                                     std::exp(-0.5 * l2 * k2) * dt / vol);
        for (int c = 0; c < d; ++c) vhat[c][idx] = amp * w[c];
      } else {
        if (k2 == 0.0) continue;  // projection families carry no mean mode
        const double amp = std::sqrt(psi_amp * gauss_pref *
                                     std::exp(-0.5 * l2 * k2) * k2 * dt / vol);
        const double inv_norm = 1.0 / std::sqrt(k2);
        const double khat[2] = {k[0] * inv_norm, k[1] * inv_norm};
        const cplx along = khat[0] * w[0] + khat[1] * w[1];
        for (int c = 0; c < d; ++c) {
          const cplx v = transverse ? w[c] - khat[c] * along : khat[c] * along;
          vhat[c][idx] = amp * v;
        }
      }
    }

    // Hermitian symmetrization: W(k) = (a(k) + conj(a(-k))) / sqrt(2), which
    // keeps the target covariance and makes the field exactly real.
    for (std::size_t idx = 0; idx < N; ++idx) {
      const std::size_t cdx = conj_index(idx, d, n);
      if (idx < cdx) {
        for (int c = 0; c < d; ++c) {
          const cplx a = vhat[c][idx], b = vhat[c][cdx];
          const cplx s = (a + std::conj(b)) * M_SQRT1_2;
          vhat[c][idx] = s;
          vhat[c][cdx] = std::conj(s);
        }
      } else if (idx == cdx) {
        for (int c = 0; c < d; ++c)
          vhat[c][idx] = cplx(M_SQRT2 * vhat[c][idx].real(), 0.0);
      }
    }
  }

  auto to_real = [&](std::vector<cplx>& buf, int nn) {
    fft::backward(d, nn, buf);
    std::vector<double> out(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
    return out;
  };

  if (opts.need_node_values) {
    inc.comps.resize(d);
    for (int c = 0; c < d; ++c) {
      std::vector<cplx> buf = vhat[c];
      inc.comps[c] = to_real(buf, n);
    }
  }

  if (opts.upsample > 1) {
    const int U = opts.upsample;
    const int nf = U * n;
    const std::size_t Nf = d == 1 ? std::size_t(nf) : std::size_t(nf) * nf;
    inc.upsample = U;
    inc.fine.resize(d);
    for (int c = 0; c < d; ++c) {
      std::vector<cplx> buf(Nf, cplx(0.0, 0.0));
      // Zero-padded embedding; the Nyquist coefficient is split between +n/2
      // and -n/2 so the fine array stays Hermitian and original node values
      // are preserved exactly.
      for (std::size_t idx = 0; idx < N; ++idx) {
        if (vhat[c][idx] == cplx(0.0, 0.0)) continue;
        int m[2];
        freqs_of(idx, d, n, m);
        struct Target { std::size_t j; double w; };
        Target tx[2]; int ntx = 0;
        Target ty[2]; int nty = 0;
        auto expand = [&](int mm, Target* t) {
          if (mm == n / 2) {
            t[0] = {std::size_t(n / 2), 0.5};
            t[1] = {std::size_t(nf - n / 2), 0.5};
            return 2;
          }
          t[0] = {wrap_index(mm, nf), 1.0};
          return 1;
        };
        ntx = expand(m[0], tx);
        if (d == 2) nty = expand(m[1], ty);
        if (d == 1) {
          for (int a = 0; a < ntx; ++a) buf[tx[a].j] += tx[a].w * vhat[c][idx];
        } else {
          for (int a = 0; a < ntx; ++a)
            for (int b = 0; b < nty; ++b)
              buf[tx[a].j * std::size_t(nf) + ty[b].j] += tx[a].w * ty[b].w * vhat[c][idx];
        }
      }
      inc.fine[c] = to_real(buf, nf);
    }
  }

  if (opts.keep_spectrum) inc.spectrum = std::move(vhat);
  return inc;
}

namespace {

// Catmull-Rom weights for fractional offset t in [0,1).
inline void catmull_rom(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

}  // namespace

void interpolate_velocity_raw(const FieldIncrement& inc, const double* x, double* v_out) {
  const int d = inc.grid.dim;
  const int nf = inc.upsample * inc.grid.n;
  const double inv_dxf = nf / inc.grid.box_length;
  const int mask = nf - 1;  // nf is a power of two

  if (d == 1) {
    double u = x[0] * inv_dxf;
    u -= std::floor(u / nf) * nf;
    const int i0 = int(std::floor(u));
    double w[4];
    catmull_rom(u - i0, w);
    const int ia = (i0 - 1) & mask, ib = i0 & mask, ic = (i0 + 1) & mask, id = (i0 + 2) & mask;
    const auto& f = inc.fine[0];
    v_out[0] = w[0] * f[ia] + w[1] * f[ib] + w[2] * f[ic] + w[3] * f[id];
    return;
  }

  double u0 = x[0] * inv_dxf, u1 = x[1] * inv_dxf;
  u0 -= std::floor(u0 / nf) * nf;
  u1 -= std::floor(u1 / nf) * nf;
  const int i0 = int(std::floor(u0)), j0 = int(std::floor(u1));
  double wi[4], wj[4];
  catmull_rom(u0 - i0, wi);
  catmull_rom(u1 - j0, wj);
  int ii[4], jj[4];
  for (int a = 0; a < 4; ++a) {
    ii[a] = (i0 - 1 + a) & mask;
    jj[a] = (j0 - 1 + a) & mask;
  }
  for (int c = 0; c < d; ++c) {
    const auto& f = inc.fine[c];
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      const std::size_t row = std::size_t(ii[a]) * nf;
      double racc = 0.0;
      for (int b = 0; b < 4; ++b) racc += wj[b] * f[row + jj[b]];
      acc += wi[a] * racc;
    }
    v_out[c] = acc;
  }
}

Vec interpolate_velocity(const FieldIncrement& inc, const Vec& x) {
  if (inc.upsample < 2)
    throw std::logic_error("interpolate_velocity: no fine table; synthesize with upsample >= 2");
  Vec v(inc.grid.dim);
  interpolate_velocity_raw(inc, x.data(), v.data());
  return v;
}

Vec eval_velocity_exact(const FieldIncrement& inc, const Vec& x) {
  if (inc.spectrum.empty()) throw std::logic_error("eval_velocity_exact: spectrum not retained");
  const int d = inc.grid.dim;
  const int n = inc.grid.n;
  const double two_pi_over_L = 2.0 * M_PI / inc.grid.box_length;
  Vec v = Vec::Zero(d);
  for (std::size_t idx = 0; idx < inc.grid.size(); ++idx) {
    int m[2];
    freqs_of(idx, d, n, m);
    double phase = two_pi_over_L * (m[0] * x[0] + (d == 2 ? m[1] * x[1] : 0.0));
    const cplx e(std::cos(phase), std::sin(phase));
    for (int c = 0; c < d; ++c) v[c] += (inc.spectrum[c][idx] * e).real();
  }
  return v;
}

double relative_spectral_divergence(const FieldIncrement& inc) {
  const int d = inc.grid.dim;
  if (d == 1) throw std::logic_error("spectral divergence check needs dim >= 2");
  if (inc.comps.empty()) throw std::logic_error("relative_spectral_divergence: node values missing");
  const int n = inc.grid.n;
  const std::size_t N = inc.grid.size();
  const double two_pi_over_L = 2.0 * M_PI / inc.grid.box_length;

  std::vector<std::vector<cplx>> hat(d, std::vector<cplx>(N));
  for (int c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < N; ++i) hat[c][i] = inc.comps[c][i];
    fft::forward(d, n, hat[c]);
  }
  double max_div = 0.0, max_scale = 0.0;
  for (std::size_t idx = 0; idx < N; ++idx) {
    int m[2];
    freqs_of(idx, d, n, m);
    const double k0 = two_pi_over_L * m[0], k1 = two_pi_over_L * m[1];
    const double kn = std::hypot(k0, k1);
    const cplx div = k0 * hat[0][idx] + k1 * hat[1][idx];
    const double vn = std::hypot(std::abs(hat[0][idx]), std::abs(hat[1][idx]));
    max_div = std::max(max_div, std::abs(div));
    max_scale = std::max(max_scale, kn * vn);
  }
  return max_scale > 0.0 ? max_div / max_scale : 0.0;
}

Environment::Environment(CovarianceSpec spec, Grid grid, double dt, uint64_t master_seed,
                         uint32_t replica, SynthOptions opts)
    : spec_(spec), grid_(grid), dt_(dt), master_seed_(master_seed), replica_(replica), opts_(opts) {
  grid_.validate_against(spec_);
}

FieldIncrement Environment::increment(int64_t slot) const {
  return synthesize_increment(spec_, grid_, dt_, master_seed_, replica_, slot, opts_);
}

namespace {
constexpr char kMagic[8] = {'K', 'L', 'A', 'B', 'F', 'L', 'D', '1'};
}

void dump_increment(const FieldIncrement& inc, std::ostream& out) {
  if (inc.comps.empty()) throw std::logic_error("dump_increment: node values missing");
  out.write(kMagic, 8);
  const int64_t dim = inc.grid.dim, n = inc.grid.n, replica = inc.replica, slot = inc.slot;
  const double L = inc.grid.box_length, dt = inc.dt;
  out.write(reinterpret_cast<const char*>(&dim), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&L), 8);
  out.write(reinterpret_cast<const char*>(&dt), 8);
  out.write(reinterpret_cast<const char*>(&replica), 8);
  out.write(reinterpret_cast<const char*>(&slot), 8);
  for (const auto& comp : inc.comps)
    out.write(reinterpret_cast<const char*>(comp.data()), std::streamsize(comp.size() * 8));
}

FieldIncrement load_increment(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("bad field dump magic");
  int64_t dim = 0, n = 0, replica = 0, slot = 0;
  double L = 0.0, dt = 0.0;
  in.read(reinterpret_cast<char*>(&dim), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&L), 8);
  in.read(reinterpret_cast<char*>(&dt), 8);
  in.read(reinterpret_cast<char*>(&replica), 8);
  in.read(reinterpret_cast<char*>(&slot), 8);
  FieldIncrement inc;
  inc.grid = Grid{int(dim), int(n), L};
  inc.dt = dt;
  inc.replica = uint32_t(replica);
  inc.slot = slot;
  inc.comps.resize(std::size_t(dim));
  for (auto& comp : inc.comps) {
    comp.resize(inc.grid.size());
    in.read(reinterpret_cast<char*>(comp.data()), std::streamsize(comp.size() * 8));
  }
  if (!in) throw std::runtime_error("truncated field dump");
  return inc;
}

}  // namespace klab

#include "klab/rng.hpp"

#include <cmath>

namespace klab {

namespace philox {

namespace {
constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;
}  // namespace

std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round != 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const uint64_t p0 = uint64_t(kMul0) * ctr[0];
    const uint64_t p1 = uint64_t(kMul1) * ctr[2];
    ctr = {uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], uint32_t(p1),
           uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], uint32_t(p0)};
  }
  return ctr;
}

}  // namespace philox

CounterRng::CounterRng(uint64_t master_seed, uint32_t replica, StreamPurpose purpose, int64_t slot)
    : key_{uint32_t(master_seed), uint32_t(master_seed >> 32)},
      replica_(replica),
      purpose_(static_cast<uint32_t>(purpose)),
      slot_(uint32_t(slot + (int64_t(1) << 31))) {}

std::array<uint32_t, 4> CounterRng::raw(uint32_t block_index) const {
  return philox::block({block_index, slot_, replica_, purpose_}, key_);
}

namespace {
// (0,1) with 53 random bits; never returns 0 so log() below is safe.
inline double u64_to_unit(uint64_t x) {
  return double(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}
}  // namespace

std::pair<double, double> CounterRng::uniform_pair(uint32_t block_index) const {
  const auto w = raw(block_index);
  const uint64_t a = (uint64_t(w[0]) << 32) | w[1];
  const uint64_t b = (uint64_t(w[2]) << 32) | w[3];
  return {u64_to_unit(a), u64_to_unit(b)};
}

std::pair<double, double> CounterRng::normal_pair(uint32_t block_index) const {
  const auto [u1, u2] = uniform_pair(block_index);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

uint64_t CounterRng::uniform_u64(uint32_t block_index) const {
  const auto w = raw(block_index);
  return (uint64_t(w[0]) << 32) | w[1];
}

double SequentialRng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const auto [a, b] = rng_.normal_pair(next_block_++);
  cached_ = b;
  has_cached_ = true;
  return a;
}

double SequentialRng::uniform() {
  return rng_.uniform_pair(next_block_++).first;
}

}  // namespace klab

#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace klab {

// Counter-based random numbers (Philox4x32-10). Every draw is addressed by
// (master_seed, replica, purpose, slot, block), so any worker can reproduce
// any value without shared state, and replica sets can grow without
// reshuffling existing streams.

enum class StreamPurpose : uint32_t {
  Generic = 0,
  Environment = 1,   // velocity-field spectral draws, one slot per time step
  Molecular = 2,     // per-particle Brownian increments
  FlowMap = 3,       // the single Brownian path shared by a flow-map lattice
  InitialState = 4,  // initial particle positions / separations
  Resample = 5,      // bootstrap-style resampling in tests
};

namespace philox {

// One 4x32 block, 10 rounds. Matches the reference Philox4x32-10 sequence.
std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key);

}  // namespace philox

// Addressable stream for a fixed (seed, replica, purpose, slot) tuple.
// `slot` is a signed time-step index; negative slots (runs started in the
// past, as the corrector does) are folded by an offset of 2^31.
class CounterRng {
 public:
  CounterRng(uint64_t master_seed, uint32_t replica, StreamPurpose purpose, int64_t slot = 0);

  std::array<uint32_t, 4> raw(uint32_t block_index) const;

  // Two independent uniforms in (0,1), 53-bit resolution.
  std::pair<double, double> uniform_pair(uint32_t block_index) const;

  // Two independent standard normals (Box-Muller on one block).
  std::pair<double, double> normal_pair(uint32_t block_index) const;

  uint64_t uniform_u64(uint32_t block_index) const;

 private:
  std::array<uint32_t, 2> key_;
  uint32_t replica_;
  uint32_t purpose_;
  uint32_t slot_;
};

// Convenience sequential view over a CounterRng: hands out normals one at a
// time, advancing the block counter. Cheap to construct, not thread-safe.
class SequentialRng {
 public:
  explicit SequentialRng(CounterRng rng) : rng_(rng) {}
  SequentialRng(uint64_t master_seed, uint32_t replica, StreamPurpose purpose, int64_t slot = 0)
      : rng_(master_seed, replica, purpose, slot) {}

  double normal();
  double uniform();
  uint64_t u64() { return rng_.uniform_u64(next_block_++); }

 private:
  CounterRng rng_;
  uint32_t next_block_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace klab

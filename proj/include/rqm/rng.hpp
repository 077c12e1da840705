#pragma once

#include <cstdint>
#include <random>

namespace rqm {

/// Identifies one independent random stream: (master seed, block, index).
///
/// Blocks separate workloads that share a master seed (different initial
/// states, noise-scale replicates, probes); the index enumerates replicates
/// or paths within a block. Two distinct keys give statistically independent
/// streams; equal keys give bitwise-identical streams.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t block = 0;
  std::uint64_t index = 0;
};

/// Seedable generator owned by a single consumer.
///
/// Backed by std::mt19937_64 seeded through std::seed_seq, both of which are
/// fully specified by the standard, so streams are reproducible across
/// platforms. Uniform variates are produced here rather than through
/// std::uniform_real_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(StreamKey{seed, 0, 0}) {}

  explicit Rng(const StreamKey& key) {
    std::seed_seq seq{lo32(key.seed), hi32(key.seed), lo32(key.block),
                      hi32(key.block), lo32(key.index), hi32(key.index)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  static std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
  static std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

  std::mt19937_64 engine_;
};

}  // namespace rqm

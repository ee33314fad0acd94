#pragma once

#include <cstdint>
#include <random>

namespace nonnormal {

/// Well-known stream identifiers. A run seeded with `s` draws each of these
/// from its own child stream `Rng(s, id)`, so adding draws to one consumer
/// never shifts the numbers seen by another.
enum class Stream : std::uint64_t {
  kRecurrentInit = 1,
  kInputInit = 2,
  kReadoutInit = 3,
  kTrainData = 4,
  kValidationData = 5,
  kPermutation = 6,
  kJitter = 7,
  kDecodingSignal = 8,
  kDecodingNoise = 9,
  kDecodingInput = 10,
  kWorker = 11,
};

/// Portable, seedable 64-bit generator.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq{seed_lo,
/// seed_hi, stream_lo, stream_hi}; both are fully specified by the standard,
/// so draws are bit-identical across platforms. The distributions below are
/// implemented here rather than taken from <random>, whose distributions are
/// implementation-defined:
///   - uniform():  53 high bits of one engine output, scaled to [0, 1)
///   - below(n):   rejection sampling on the engine output (unbiased)
///   - gaussian(): Marsaglia polar method, caching the second deviate
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  Rng(std::uint64_t seed, Stream stream)
      : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal deviate.
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Independent child stream; `Rng(seed, a).child(b)` is deterministic.
  Rng child(std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace nonnormal

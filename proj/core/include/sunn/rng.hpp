#pragma once

#include <cstdint>

namespace sunn {

/// SplitMix64 (Steele, Lea & Flood 2014). Every random draw in the library
/// comes from a stream keyed by (seed, stream id), so results do not depend
/// on thread count or scheduling and reproduce across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  /// Independent stream for a given (seed, stream) pair.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    SplitMix64 mixer(seed ^ (stream_id * 0xD1B54A32D192ED03ULL));
    return SplitMix64(mixer.next() ^ stream_id);
  }

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return double(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace sunn

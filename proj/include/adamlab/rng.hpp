#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace adamlab {

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Reproducible random stream addressed by (base seed, stream id).
///
/// Derivation:
///   key    = mix64(seed) ^ mix64(id ^ 0xD1B54A32D192ED03)
///   s[k]   = mix64(key + (k + 1) * 0x9E3779B97F4A7C15),  k = 0..3
/// followed by xoshiro256** for the variates. For a fixed seed the map
/// id -> key is injective (mix64 is a bijection), and so is key -> s[0].
/// uniform() returns the top 53 bits scaled to [0, 1).
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t base_seed, std::uint64_t stream_id) noexcept;

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  std::uint64_t base_seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return id_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t id_;
  std::array<std::uint64_t, 4> s_{};
};

inline RandomStream make_stream(std::uint64_t base_seed,
                                std::uint64_t stream_id) noexcept {
  return RandomStream(base_seed, stream_id);
}

/// Seed for an independent family of streams (e.g. fresh randomness for a
/// residual check) derived from an existing seed and a tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::uint64_t tag) noexcept {
  return mix64(seed ^ mix64(tag + 0x632BE59BD9B4E019ULL));
}

}  // namespace adamlab

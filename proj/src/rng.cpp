#include "adamlab/rng.hpp"

namespace adamlab {

RandomStream::RandomStream(std::uint64_t base_seed,
                           std::uint64_t stream_id) noexcept
    : seed_(base_seed), id_(stream_id) {
  const std::uint64_t key =
      mix64(base_seed) ^ mix64(stream_id ^ 0xD1B54A32D192ED03ULL);
  for (std::uint64_t k = 0; k < 4; ++k) {
    s_[k] = mix64(key + (k + 1) * 0x9E3779B97F4A7C15ULL);
  }
}

}  // namespace adamlab

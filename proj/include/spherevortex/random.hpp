#ifndef SPHEREVORTEX_RANDOM_HPP
#define SPHEREVORTEX_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spherevortex {

using RngStream = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Independent stream keyed by (master_seed, k1, k2, ...); order of creation is irrelevant.
inline RngStream substream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = detail::splitmix64(master_seed);
  for (std::uint64_t k : keys) h = detail::splitmix64(h ^ detail::splitmix64(k + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)};
  return RngStream(seq);
}

inline RngStream make_stream(std::uint64_t seed) { return substream(seed, {}); }

}  // namespace spherevortex

#endif

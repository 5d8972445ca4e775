#pragma once

#include <cstdint>
#include <random>

namespace cocycle {

/// Independent stream for task `index` under a top-level seed. Streams depend
/// only on (seed, index), never on scheduling.
inline std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

/// Uniform on [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Integer in [lo, hi], by rejection so it is unbiased and portable.
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return lo + static_cast<std::int64_t>(r % span);
}

}  // namespace cocycle

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "ltadmm/errors.hpp"
#include "ltadmm/types.hpp"

namespace ltadmm {

//! Tags separating the independent random streams of one simulation run.
enum class StreamPurpose : std::uint64_t {
  dataset_features = 1,
  dataset_noise = 2,
  dataset_teacher = 3,
  quadratic_anchor = 4,
  batch_draw = 5,
  x_compress = 6,
  z_compress = 7,
};

//! Deterministic counter-based random stream.
//!
//! Every draw is a pure function of the key tuple (seed, agent, round, purpose,
//! lane) and the draw index within the stream. A stream therefore produces the
//! same values no matter when or on which thread it is consumed, and streams
//! with distinct keys are statistically independent. All randomness in the
//! simulator flows through these streams, which keeps trajectories bitwise
//! reproducible under any scheduling of the per-agent phases.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t agent, std::uint64_t round,
               StreamPurpose purpose, std::uint64_t lane = 0) noexcept
      : key_(derive_key(seed, agent, round, static_cast<std::uint64_t>(purpose), lane)) {}

  std::uint64_t next_u64() noexcept { return finalize(key_ + (++counter_) * kGamma); }

  //! Uniform double in [0, 1).
  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  //! Uniform integer in [0, bound).
  int uniform_int(int bound) {
    if (bound <= 0) throw ParameterError("uniform_int: bound must be positive");
    const auto wide =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(bound);
    return static_cast<int>(wide >> 64);
  }

  //! Standard normal via Box-Muller; consumes exactly two words per draw.
  double normal() noexcept {
    const double u1 = 1.0 - uniform01();  // in (0, 1], keeps the log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec normal_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  //! Uniformly random k-subset of {0,...,population-1}, without replacement,
  //! returned sorted.
  std::vector<int> sample_without_replacement(int population, int k) {
    if (population < 0 || k < 0 || k > population)
      throw ParameterError("sample_without_replacement: bad subset size");
    std::vector<int> pool(population);
    for (int i = 0; i < population; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + uniform_int(population - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  // SplitMix64 finalizer.
  static std::uint64_t finalize(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t absorb(std::uint64_t h, std::uint64_t v) noexcept {
    return finalize(h ^ (v + kGamma + (h << 6) + (h >> 2)));
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t agent, std::uint64_t round,
                                  std::uint64_t purpose, std::uint64_t lane) noexcept {
    std::uint64_t h = finalize(seed + kGamma);
    h = absorb(h, agent);
    h = absorb(h, round);
    h = absorb(h, purpose);
    h = absorb(h, lane);
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ltadmm

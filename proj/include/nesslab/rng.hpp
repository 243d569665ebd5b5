#pragma once

#include <cmath>
#include <cstdint>

namespace nesslab {

// Counter-based random numbers built on the splitmix64 finalizer.  Every
// draw is a pure function of (key, counter), so a stream position is fully
// determined by how many draws were taken; parallel replicas derive disjoint
// keys and never share a stream.
namespace detail {
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t bits_at(std::uint64_t key, std::uint64_t counter) noexcept {
  return mix64(key + counter * kGolden);
}
}  // namespace detail

/// Combine a seed with a stream tag into an independent generator key.
inline constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return detail::mix64(detail::mix64(seed + detail::kGolden) ^ (stream * 0xd1342543de82ef95ULL));
}

/// Uniform deviate in the open interval (0,1) at an explicit counter.
inline double uniform_at(std::uint64_t key, std::uint64_t counter) noexcept {
  return (static_cast<double>(detail::bits_at(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal deviate at an explicit counter (consumes counters 2c, 2c+1).
inline double gaussian_at(std::uint64_t key, std::uint64_t counter) noexcept {
  const double u1 = uniform_at(key, 2 * counter);
  const double u2 = uniform_at(key, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Stateless per-step noise: the deviate for (step, slot) never depends on how
// many other slots were consumed, which keeps trajectories bitwise reproducible
// under checkpoint replay.
struct NoiseSource {
  std::uint64_t key = 0;

  double gaussian(std::uint64_t step, std::uint32_t slot) const noexcept {
    return gaussian_at(detail::mix64(key ^ (step * detail::kGolden)), slot);
  }
};

// Sequential generator with an explicit, serializable counter.
class CounterRng {
 public:
  CounterRng() = default;
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(derive_key(seed, stream)) {}

  double uniform() { return uniform_at(key_, counter_++); }

  double gaussian() {
    const double u1 = uniform_at(key_, counter_);
    const double u2 = uniform_at(key_, counter_ + 1);
    counter_ += 2;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Exponential deviate with the given mean.
  double exponential(double mean) { return -mean * std::log(uniform()); }

  std::uint64_t random_bits() { return detail::bits_at(key_, counter_++); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  std::uint64_t key_ = detail::mix64(detail::kGolden);
  std::uint64_t counter_ = 0;
};

}  // namespace nesslab

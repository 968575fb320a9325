#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "spread/error.hpp"

namespace spread {

// Counter-based randomness built on the splitmix64 finalizer.  Every random
// quantity in the toolkit is a pure function of (master seed, purpose tag,
// replicate index, ...), so outputs do not depend on thread count or
// enumeration order.

namespace rng_detail {
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += rng_detail::kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds one word into a key; chain derive_key calls to build sub-streams.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t word) {
  return mix64(key ^ mix64(word));
}

// Purpose tags keep distinct uses of the same replicate index independent.
namespace stream_tag {
inline constexpr std::uint64_t points = 0x01;
inline constexpr std::uint64_t edges = 0x02;
inline constexpr std::uint64_t gw = 0x03;
inline constexpr std::uint64_t bonds = 0x04;
inline constexpr std::uint64_t pilot = 0x05;
}  // namespace stream_tag

constexpr double to_unit(std::uint64_t x) {
  // 53 high bits -> [0,1)
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// splitmix64 sequence starting from `key`.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr RngStream(std::uint64_t key) : state_(key) {}

  constexpr std::uint64_t key() const { return state_; }

  constexpr std::uint64_t next_u64() {
    std::uint64_t z = (state_ += rng_detail::kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0,1)
  double next_unit() { return to_unit(next_u64()); }

  // [a,b)
  double next_in(double a, double b) { return a + (b - a) * next_unit(); }

  double next_exponential() {
    // 1 - u in (0,1], log never sees 0
    return -std::log1p(-next_unit());
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t state_;
};

inline RngStream replicate_stream(std::uint64_t master_seed, std::uint64_t tag,
                                  std::uint64_t replicate) {
  return RngStream(derive_key(derive_key(master_seed, tag), replicate));
}

inline std::uint64_t replicate_key(std::uint64_t master_seed, std::uint64_t tag,
                                   std::uint64_t replicate) {
  return derive_key(derive_key(master_seed, tag), replicate);
}

// Exact Poisson(mean) count by summing unit exponentials; O(mean) draws.
inline std::uint64_t poisson_count(RngStream& stream, double mean) {
  if (!(mean >= 0) || !std::isfinite(mean)) {
    throw InvalidArgumentError("poisson_count: mean must be finite and >= 0");
  }
  std::uint64_t n = 0;
  double acc = stream.next_exponential();
  while (acc <= mean) {
    ++n;
    acc += stream.next_exponential();
  }
  return n;
}

// Uniform in [0,1) keyed by an unordered id pair; identical for (a,b) and
// (b,a), independent of any call order.
inline double pair_uniform(std::uint64_t key, std::uint32_t a, std::uint32_t b) {
  const std::uint64_t lo = a < b ? a : b;
  const std::uint64_t hi = a < b ? b : a;
  return to_unit(mix64(key ^ mix64((lo << 32) | hi)));
}

}  // namespace spread

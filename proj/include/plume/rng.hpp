#pragma once

#include <cmath>
#include <cstdint>

namespace plume {

/// Identifies one reproducible stream of random draws. Streams derived from
/// the same (seed, stream_id) always produce the same sequence, independent
/// of thread count or evaluation order.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

/// Derive a child stream keyed by up to three indices (run, iteration,
/// sample) plus a purpose tag so co-located draws never collide.
inline RngStream substream(RngStream base, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0, std::uint64_t purpose = 0) {
  std::uint64_t id = base.stream_id;
  id = detail::mix64(id ^ (a + 0x9e3779b97f4a7c15ULL));
  id = detail::mix64(id ^ (b + 0xc2b2ae3d27d4eb4fULL));
  id = detail::mix64(id ^ (c + 0x165667b19e3779f9ULL));
  id = detail::mix64(id ^ (purpose + 0x27d4eb2f165667c5ULL));
  return RngStream{base.seed, id};
}

/// Splitmix64 generator seeded from a stream key. Cheap to construct, so one
/// instance per Monte Carlo sample is the intended usage.
class StreamRng {
 public:
  explicit StreamRng(RngStream s)
      : state_(detail::mix64(detail::mix64(s.seed) ^ s.stream_id)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  /// Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double next_double_oc() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double next_normal() {
    const double u1 = next_double_oc();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace plume

#pragma once

#include "hiernav/geometry.hpp"

#include <cstdint>
#include <random>

namespace hiernav {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded RNG with explicit conversions so streams are identical across
/// compilers (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : engine_(splitmix64(seed)), base_seed_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(
                    uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  Vec3 point_in(const Aabb& box) {
    return Vec3(uniform(box.min.x(), box.max.x()),
                uniform(box.min.y(), box.max.y()),
                uniform(box.min.z(), box.max.z()));
  }

  Vec3 unit_vector() {
    // rejection-sampled direction, deterministic given the stream
    while (true) {
      Vec3 v(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      const double n = v.norm();
      if (n > 1e-6 && n <= 1.0) return v / n;
    }
  }

  /// Independent child stream, stable under reordering of other draws.
  Rng fork(std::uint64_t stream) const {
    return Rng(base_seed_ ^ splitmix64(stream + 0x51ed2701));
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t base_seed_ = 0;
};

}  // namespace hiernav

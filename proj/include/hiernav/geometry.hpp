#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>

namespace hiernav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-aligned box. Containment is half-open: points on a max face are outside.
struct Aabb {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Zero()};

  Aabb() = default;
  Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {}

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double volume() const {
    const Vec3 e = extent();
    return e.x() * e.y() * e.z();
  }
  bool empty() const { return (extent().array() <= 0.0).any(); }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() < max.array()).all();
  }

  // true when the closed boxes share volume or touch
  bool intersects(const Aabb& other) const {
    return (min.array() <= other.max.array()).all() &&
           (other.min.array() <= max.array()).all();
  }

  // true when this box lies entirely inside `other` (closed comparison)
  bool inside(const Aabb& other) const {
    return (min.array() >= other.min.array()).all() &&
           (max.array() <= other.max.array()).all();
  }

  Vec3 closest_point(const Vec3& p) const {
    return p.cwiseMax(min).cwiseMin(max);
  }

  /// Euclidean distance from p to the box; 0 for points inside.
  double distance_to(const Vec3& p) const {
    return (p - closest_point(p)).norm();
  }

  Aabb intersection(const Aabb& other) const {
    return Aabb(min.cwiseMax(other.min), max.cwiseMin(other.max));
  }
};

/// Integer grid coordinate of a cell at some octree height.
struct Index3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend bool operator==(const Index3& a, const Index3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
  friend bool operator!=(const Index3& a, const Index3& b) { return !(a == b); }
  friend bool operator<(const Index3& a, const Index3& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  }
};

namespace detail {

// spread the low 21 bits of v so they occupy every third bit
inline std::uint64_t spread_bits_3(std::uint64_t v) {
  v &= 0x1fffff;
  v = (v | (v << 32)) & 0x1f00000000ffffULL;
  v = (v | (v << 16)) & 0x1f0000ff0000ffULL;
  v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v << 2)) & 0x1249249249249249ULL;
  return v;
}

inline std::uint64_t compact_bits_3(std::uint64_t v) {
  v &= 0x1249249249249249ULL;
  v = (v | (v >> 2)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v >> 4)) & 0x100f00f00f00f00fULL;
  v = (v | (v >> 8)) & 0x1f0000ff0000ffULL;
  v = (v | (v >> 16)) & 0x1f00000000ffffULL;
  v = (v | (v >> 32)) & 0x1fffff;
  return v;
}

}  // namespace detail

/// Interleaved (Morton) code of a non-negative finest-level cell index.
/// Octree nodes cover contiguous Morton ranges, which the builders rely on.
inline std::uint64_t morton_encode(const Index3& idx) {
  return detail::spread_bits_3(static_cast<std::uint64_t>(idx.x)) |
         (detail::spread_bits_3(static_cast<std::uint64_t>(idx.y)) << 1) |
         (detail::spread_bits_3(static_cast<std::uint64_t>(idx.z)) << 2);
}

inline Index3 morton_decode(std::uint64_t code) {
  return Index3{static_cast<std::int64_t>(detail::compact_bits_3(code)),
                static_cast<std::int64_t>(detail::compact_bits_3(code >> 1)),
                static_cast<std::int64_t>(detail::compact_bits_3(code >> 2))};
}

}  // namespace hiernav

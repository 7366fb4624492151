#pragma once

#include "hiernav/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiernav {

enum class Occupancy : std::uint8_t { kFree = 0, kOccupied = 1, kUnknown = 2 };

inline const char* to_string(Occupancy o) {
  switch (o) {
    case Occupancy::kFree:
      return "free";
    case Occupancy::kOccupied:
      return "occupied";
    default:
      return "unknown";
  }
}

/// One octree node. A node has either no children or exactly eight.
/// Childless nodes above height 0 are collapsed uniform regions; only
/// free and unknown subtrees are ever collapsed, so every occupied finest
/// cell is represented by an explicit height-0 leaf.
///
/// Internal occupancy summarizes the subtree: occupied when every finest
/// descendant is occupied, free when all are free, unknown otherwise.
struct OctreeNode {
  Occupancy occupancy = Occupancy::kUnknown;
  bool any_occupied = false;
  bool any_unknown = false;
  std::unique_ptr<std::array<OctreeNode, 8>> children;

  bool has_children() const { return children != nullptr; }
  const OctreeNode& child(int i) const { return (*children)[i]; }
};

/// Grid location of a node: height in the hierarchy (0 = finest) plus the
/// integer cell index at that height.
struct NodeAddress {
  int height = 0;
  Index3 index{};

  friend bool operator==(const NodeAddress& a, const NodeAddress& b) {
    return a.height == b.height && a.index == b.index;
  }
  friend bool operator<(const NodeAddress& a, const NodeAddress& b) {
    return std::tie(a.height, a.index) < std::tie(b.height, b.index);
  }
};

/// O(1) read of the aggregated occupied-descendant flag.
inline bool has_occupied_descendant(const OctreeNode& node) {
  return node.any_occupied;
}

/// Hierarchical ternary occupancy map over a cube anchored at `origin`.
/// Side length at height h is min_cell_size * 2^h; the root sits at height
/// num_levels - 1. Immutable after construction; reads are thread-safe.
class OccupancyOctree {
 public:
  static constexpr int kDefaultNumLevels = 10;
  static constexpr int kMaxNumLevels = 21;  // 3*(L-1) Morton bits must fit

  static OccupancyOctree build_from_boxes(const std::vector<Aabb>& boxes,
                                          const Aabb& bounds,
                                          double min_cell_size,
                                          int num_levels = kDefaultNumLevels) {
    OccupancyOctree map(bounds, min_cell_size, num_levels);
    std::vector<std::uint64_t> codes;
    for (const Aabb& box : boxes) {
      map.append_box_cells(box, codes);
    }
    map.build_tree(std::move(codes));
    return map;
  }

  /// Points outside `bounds` are rejected; the count lands in
  /// *rejected_count when provided.
  static OccupancyOctree build_from_points(const std::vector<Vec3>& points,
                                           double min_cell_size,
                                           const Aabb& bounds,
                                           int num_levels = kDefaultNumLevels,
                                           std::int64_t* rejected_count = nullptr) {
    OccupancyOctree map(bounds, min_cell_size, num_levels);
    std::vector<std::uint64_t> codes;
    codes.reserve(points.size());
    std::int64_t rejected = 0;
    for (const Vec3& p : points) {
      if (!bounds.contains(p)) {
        ++rejected;
        continue;
      }
      codes.push_back(morton_encode(map.leaf_index(p)));
    }
    if (rejected_count != nullptr) *rejected_count = rejected;
    map.build_tree(std::move(codes));
    return map;
  }

  /// Occupancy of the finest cell containing `point`; unknown when outside
  /// the mapped bounds.
  Occupancy query_occupancy(const Vec3& point) const {
    if (!bounds_.contains(point)) return Occupancy::kUnknown;
    const Index3 leaf = leaf_index(point);
    const OctreeNode* node = &root_;
    for (int h = num_levels_ - 1; h > 0 && node->has_children(); --h) {
      node = &node->child(child_bits(leaf, h - 1));
    }
    return node->occupancy;
  }

  const OctreeNode& root() const { return root_; }
  NodeAddress root_address() const { return NodeAddress{num_levels_ - 1, {}}; }

  const Vec3& origin() const { return origin_; }
  const Aabb& bounds() const { return bounds_; }
  double min_cell_size() const { return min_cell_size_; }
  int num_levels() const { return num_levels_; }

  double cell_size(int height) const {
    return min_cell_size_ * static_cast<double>(std::uint64_t{1} << height);
  }

  Vec3 cell_center(const NodeAddress& addr) const {
    const double s = cell_size(addr.height);
    return origin_ + s * Vec3(static_cast<double>(addr.index.x) + 0.5,
                              static_cast<double>(addr.index.y) + 0.5,
                              static_cast<double>(addr.index.z) + 0.5);
  }

  Aabb cell_box(const NodeAddress& addr) const {
    const double s = cell_size(addr.height);
    const Vec3 lo = origin_ + s * Vec3(static_cast<double>(addr.index.x),
                                       static_cast<double>(addr.index.y),
                                       static_cast<double>(addr.index.z));
    return Aabb(lo, lo + Vec3(s, s, s));
  }

  static NodeAddress child_address(const NodeAddress& addr, int child) {
    return NodeAddress{addr.height - 1,
                       Index3{addr.index.x * 2 + (child & 1),
                              addr.index.y * 2 + ((child >> 1) & 1),
                              addr.index.z * 2 + ((child >> 2) & 1)}};
  }

  /// Finest-level index of the cell containing p (p must be inside the
  /// root cube for the result to be valid).
  Index3 leaf_index(const Vec3& p) const {
    const Vec3 rel = (p - origin_) / min_cell_size_;
    return Index3{static_cast<std::int64_t>(std::floor(rel.x())),
                  static_cast<std::int64_t>(std::floor(rel.y())),
                  static_cast<std::int64_t>(std::floor(rel.z()))};
  }

  /// Deepest stored node on the path to `addr`, along with a flag telling
  /// whether the returned node is exactly at `addr` (false means an
  /// ancestor was collapsed, so the region is uniform).
  std::pair<const OctreeNode*, bool> find_node(const NodeAddress& addr) const {
    const OctreeNode* node = &root_;
    for (int h = num_levels_ - 1; h > addr.height; --h) {
      if (!node->has_children()) return {node, false};
      const int shift = h - 1 - addr.height;
      const Index3 at_child_height{addr.index.x >> shift, addr.index.y >> shift,
                                   addr.index.z >> shift};
      node = &node->child((at_child_height.x & 1) | ((at_child_height.y & 1) << 1) |
                          ((at_child_height.z & 1) << 2));
    }
    return {node, true};
  }

  template <typename F>
  void for_each_occupied_leaf(F&& f) const {
    walk_occupied(root_, root_address(), f);
  }

  template <typename F>
  void visit_nodes(F&& f) const {
    walk_all(root_, root_address(), f);
  }

  std::int64_t occupied_leaf_count() const { return occupied_count_; }

  std::int64_t node_count() const {
    std::int64_t n = 0;
    visit_nodes([&n](const OctreeNode&, const NodeAddress&) { ++n; });
    return n;
  }

  std::size_t memory_bytes() const {
    return static_cast<std::size_t>(node_count()) * sizeof(OctreeNode);
  }

  // ---- map dump (versioned, occupied finest-cell indices) ----

  void save_dump(std::ostream& out) const {
    out << "hiernav-map v1\n";
    out << "origin " << fmt(origin_.x()) << ' ' << fmt(origin_.y()) << ' '
        << fmt(origin_.z()) << '\n';
    out << "min_cell_size " << fmt(min_cell_size_) << '\n';
    out << "num_levels " << num_levels_ << '\n';
    out << "bounds " << fmt(bounds_.min.x()) << ' ' << fmt(bounds_.min.y())
        << ' ' << fmt(bounds_.min.z()) << ' ' << fmt(bounds_.max.x()) << ' '
        << fmt(bounds_.max.y()) << ' ' << fmt(bounds_.max.z()) << '\n';
    out << "occupied_count " << occupied_count_ << '\n';
    for_each_occupied_leaf([&out](const Index3& idx) {
      out << idx.x << ' ' << idx.y << ' ' << idx.z << '\n';
    });
  }

  static OccupancyOctree load_dump(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "hiernav-map v1") {
      throw std::invalid_argument("map dump: bad or missing magic line");
    }
    Vec3 origin;
    Aabb bounds;
    double min_cell_size = 0.0;
    int num_levels = 0;
    std::int64_t count = -1;
    while (count < 0 && std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key == "origin") {
        ls >> origin.x() >> origin.y() >> origin.z();
      } else if (key == "min_cell_size") {
        ls >> min_cell_size;
      } else if (key == "num_levels") {
        ls >> num_levels;
      } else if (key == "bounds") {
        ls >> bounds.min.x() >> bounds.min.y() >> bounds.min.z() >>
            bounds.max.x() >> bounds.max.y() >> bounds.max.z();
      } else if (key == "occupied_count") {
        ls >> count;
      } else {
        throw std::invalid_argument("map dump: unknown header field '" + key + "'");
      }
      if (ls.fail()) {
        throw std::invalid_argument("map dump: malformed header line '" + line + "'");
      }
    }
    if (count < 0 || min_cell_size <= 0.0 || num_levels < 1) {
      throw std::invalid_argument("map dump: incomplete header");
    }
    OccupancyOctree map(bounds, min_cell_size, num_levels);
    if ((origin - bounds.min).norm() > 1e-12) {
      throw std::invalid_argument("map dump: origin must equal bounds min");
    }
    std::vector<std::uint64_t> codes;
    codes.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
      Index3 idx;
      if (!(in >> idx.x >> idx.y >> idx.z)) {
        throw std::invalid_argument("map dump: truncated cell list at entry " +
                                    std::to_string(i));
      }
      const std::int64_t side = std::int64_t{1} << (num_levels - 1);
      if (idx.x < 0 || idx.y < 0 || idx.z < 0 || idx.x >= side ||
          idx.y >= side || idx.z >= side) {
        throw std::invalid_argument("map dump: cell index out of range at entry " +
                                    std::to_string(i));
      }
      codes.push_back(morton_encode(idx));
    }
    map.build_tree(std::move(codes));
    return map;
  }

 private:
  OccupancyOctree(const Aabb& bounds, double min_cell_size, int num_levels)
      : origin_(bounds.min),
        bounds_(bounds),
        min_cell_size_(min_cell_size),
        num_levels_(num_levels) {
    if (bounds.empty()) throw std::invalid_argument("octree: empty bounds");
    if (min_cell_size <= 0.0) {
      throw std::invalid_argument("octree: min_cell_size must be positive");
    }
    if (num_levels < 1 || num_levels > kMaxNumLevels) {
      throw std::invalid_argument("octree: num_levels out of range [1, 21]");
    }
    const double root_side = cell_size(num_levels_ - 1);
    const Vec3 e = bounds.extent();
    if (e.maxCoeff() > root_side * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "octree: bounds extent " + std::to_string(e.maxCoeff()) +
          " m exceeds root cube side " + std::to_string(root_side) +
          " m; increase num_levels");
    }
    // per-axis count of finest cells whose center falls inside bounds;
    // everything past these indices is unknown space
    const std::int64_t side = std::int64_t{1} << (num_levels_ - 1);
    for (int a = 0; a < 3; ++a) {
      const std::int64_t n = static_cast<std::int64_t>(
          std::ceil(e[a] / min_cell_size_ - 0.5));
      (a == 0 ? center_count_.x : a == 1 ? center_count_.y : center_count_.z) =
          std::clamp<std::int64_t>(n, 0, side);
    }
  }

  static int child_bits(const Index3& leaf, int height) {
    return static_cast<int>(((leaf.x >> height) & 1) |
                            (((leaf.y >> height) & 1) << 1) |
                            (((leaf.z >> height) & 1) << 2));
  }

  // Append Morton codes of finest cells whose center lies in box ∩ bounds.
  void append_box_cells(const Aabb& box, std::vector<std::uint64_t>& codes) const {
    const Aabb clipped = box.intersection(bounds_);
    if (clipped.empty()) return;
    std::int64_t lo[3], hi_excl[3];  // center index in [lo, hi_excl) per axis
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<std::int64_t>(
          std::ceil((clipped.min[a] - origin_[a]) / min_cell_size_ - 0.5));
      hi_excl[a] = static_cast<std::int64_t>(
          std::ceil((clipped.max[a] - origin_[a]) / min_cell_size_ - 0.5));
    }
    for (std::int64_t x = lo[0]; x < hi_excl[0]; ++x) {
      for (std::int64_t y = lo[1]; y < hi_excl[1]; ++y) {
        for (std::int64_t z = lo[2]; z < hi_excl[2]; ++z) {
          codes.push_back(morton_encode(Index3{x, y, z}));
        }
      }
    }
  }

  void build_tree(std::vector<std::uint64_t>&& codes) {
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    occupied_count_ = static_cast<std::int64_t>(codes.size());
    root_ = build_node(num_levels_ - 1, Index3{}, std::span<const std::uint64_t>(codes));
  }

  OctreeNode build_node(int height, const Index3& index,
                        std::span<const std::uint64_t> occ) {
    OctreeNode node;
    if (height == 0) {
      if (!occ.empty()) {
        node.occupancy = Occupancy::kOccupied;
      } else {
        node.occupancy = leaf_state(index);
      }
    } else if (occ.empty()) {
      // uniform unless the node straddles the in-bounds center region
      const std::int64_t width = std::int64_t{1} << height;
      const bool all_in = (index.x + 1) * width <= center_count_.x &&
                          (index.y + 1) * width <= center_count_.y &&
                          (index.z + 1) * width <= center_count_.z;
      const bool none_in = index.x * width >= center_count_.x ||
                           index.y * width >= center_count_.y ||
                           index.z * width >= center_count_.z;
      if (all_in) {
        node.occupancy = Occupancy::kFree;
      } else if (none_in) {
        node.occupancy = Occupancy::kUnknown;
      } else {
        build_children(node, height, index, occ);
      }
    } else {
      build_children(node, height, index, occ);
    }
    if (!node.has_children()) {
      node.any_occupied = node.occupancy == Occupancy::kOccupied;
      node.any_unknown = node.occupancy == Occupancy::kUnknown;
    }
    return node;
  }

  void build_children(OctreeNode& node, int height, const Index3& index,
                      std::span<const std::uint64_t> occ) {
    node.children = std::make_unique<std::array<OctreeNode, 8>>();
    // children own contiguous Morton subranges keyed by the 3 bits at
    // position 3*(height-1)
    const int shift = 3 * (height - 1);
    std::size_t begin = 0;
    bool all_free = true, all_unknown = true, all_occupied = true;
    for (int c = 0; c < 8; ++c) {
      std::size_t end = begin;
      while (end < occ.size() &&
             static_cast<int>((occ[end] >> shift) & 7) == c) {
        ++end;
      }
      OctreeNode& child = (*node.children)[c];
      child = build_node(height - 1, child_index(index, c),
                         occ.subspan(begin, end - begin));
      begin = end;
      node.any_occupied |= child.any_occupied;
      node.any_unknown |= child.any_unknown;
      all_free &= child.occupancy == Occupancy::kFree && !child.has_children();
      all_unknown &= child.occupancy == Occupancy::kUnknown && !child.has_children();
      all_occupied &= child.occupancy == Occupancy::kOccupied;
    }
    if (all_occupied) {
      node.occupancy = Occupancy::kOccupied;  // fully occupied, kept expanded
    } else if (all_free || all_unknown) {
      // uniform free/unknown subtree: collapse to a childless node
      node.occupancy = all_free ? Occupancy::kFree : Occupancy::kUnknown;
      node.children.reset();
    } else {
      node.occupancy = Occupancy::kUnknown;  // mixed content
    }
  }

  static Index3 child_index(const Index3& index, int child) {
    return Index3{index.x * 2 + (child & 1), index.y * 2 + ((child >> 1) & 1),
                  index.z * 2 + ((child >> 2) & 1)};
  }

  Occupancy leaf_state(const Index3& index) const {
    const bool in_bounds = index.x < center_count_.x &&
                           index.y < center_count_.y &&
                           index.z < center_count_.z;
    return in_bounds ? Occupancy::kFree : Occupancy::kUnknown;
  }

  template <typename F>
  void walk_occupied(const OctreeNode& node, const NodeAddress& addr, F& f) const {
    if (!node.any_occupied) return;
    if (!node.has_children()) {
      // occupied subtrees are never collapsed, so this is a finest cell
      f(addr.index);
      return;
    }
    for (int c = 0; c < 8; ++c) {
      walk_occupied(node.child(c), child_address(addr, c), f);
    }
  }

  template <typename F>
  void walk_all(const OctreeNode& node, const NodeAddress& addr, F& f) const {
    f(node, addr);
    if (!node.has_children()) return;
    for (int c = 0; c < 8; ++c) {
      walk_all(node.child(c), child_address(addr, c), f);
    }
  }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  Vec3 origin_;
  Aabb bounds_;
  double min_cell_size_ = 0.0;
  int num_levels_ = 1;
  Index3 center_count_{};
  std::int64_t occupied_count_ = 0;
  OctreeNode root_;
};

}  // namespace hiernav

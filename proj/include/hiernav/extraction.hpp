#pragma once

#include "hiernav/octree.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hiernav {

/// Terminal node emitted by the extractor. Generates one avoidance policy.
struct ObstacleCell {
  Vec3 center{Vec3::Zero()};
  int height = 0;
  double side_length = 0.0;

  friend bool operator==(const ObstacleCell& a, const ObstacleCell& b) {
    return a.height == b.height && a.side_length == b.side_length &&
           a.center == b.center;
  }
};

/// Tunables of the coarse-to-fine traversal. The distance-limit constants
/// ship with defaults that put the coarsest usable level near a 30 m
/// perceptive radius on a 10-level tree.
struct ExtractionConfig {
  double limit_base = 3.0;       // growth base of the per-height use limit
  double limit_exponent = 1.0 / 3.0;  // height multiplier in the exponent
  double limit_offset = 0.25;    // subtracted from the power term (m)
  bool unknown_as_occupied = false;
};

/// Largest robot-to-center distance at which a cell of the given height is
/// still refined instead of being used directly: base^(h*exp) - offset.
inline double max_use_distance(int height, const ExtractionConfig& cfg = {}) {
  return std::pow(cfg.limit_base, static_cast<double>(height) * cfg.limit_exponent) -
         cfg.limit_offset;
}

namespace detail {

inline bool counts_as_occupied(const OctreeNode& node, const ExtractionConfig& cfg) {
  return node.occupancy == Occupancy::kOccupied ||
         (cfg.unknown_as_occupied && node.occupancy == Occupancy::kUnknown);
}

inline bool subtree_has_obstacle(const OctreeNode& node, const ExtractionConfig& cfg) {
  return node.any_occupied || (cfg.unknown_as_occupied && node.any_unknown);
}

inline void extract_recursive(const OccupancyOctree& map, const OctreeNode& node,
                              const NodeAddress& addr, const Vec3& robot_pos,
                              const ExtractionConfig& cfg,
                              std::vector<ObstacleCell>& out) {
  const Vec3 center = map.cell_center(addr);
  const double d = (center - robot_pos).norm();
  if (max_use_distance(addr.height, cfg) < d) {
    if (counts_as_occupied(node, cfg) || subtree_has_obstacle(node, cfg)) {
      out.push_back(ObstacleCell{center, addr.height, map.cell_size(addr.height)});
    }
    return;
  }
  if (addr.height == 0) {
    // Occupied finest cells reached by the recursion are always emitted,
    // even inside the height-0 use limit; dropping the nearest obstacles
    // would defeat avoidance.
    if (counts_as_occupied(node, cfg)) {
      out.push_back(ObstacleCell{center, 0, map.min_cell_size()});
    }
    return;
  }
  if (!subtree_has_obstacle(node, cfg)) return;
  if (!node.has_children()) {
    // collapsed uniform subtree (unknown treated as obstacle): descend
    // virtually, all implicit children share this node's state
    for (int c = 0; c < 8; ++c) {
      extract_recursive(map, node, OccupancyOctree::child_address(addr, c),
                        robot_pos, cfg, out);
    }
    return;
  }
  for (int c = 0; c < 8; ++c) {
    extract_recursive(map, node.child(c), OccupancyOctree::child_address(addr, c),
                      robot_pos, cfg, out);
  }
}

}  // namespace detail

/// Coarse-to-fine traversal emitting multi-resolution obstacle cells: a node
/// farther than its height's use limit is emitted whole (if anything under
/// it is occupied), otherwise the traversal refines into its children.
/// Deterministic: cells appear in fixed traversal order.
inline std::vector<ObstacleCell> extract_obstacles(const OccupancyOctree& map,
                                                   const Vec3& robot_pos,
                                                   const ExtractionConfig& cfg = {}) {
  std::vector<ObstacleCell> out;
  detail::extract_recursive(map, map.root(), map.root_address(), robot_pos, cfg, out);
  return out;
}

/// Fixed-resolution baseline: every occupied finest cell whose center lies
/// within `radius` of the robot, emitted at height 0.
inline std::vector<ObstacleCell> extract_fixed_resolution(const OccupancyOctree& map,
                                                          const Vec3& robot_pos,
                                                          double radius) {
  std::vector<ObstacleCell> out;
  const double r2 = radius * radius;
  map.for_each_occupied_leaf([&](const Index3& idx) {
    const Vec3 center = map.cell_center(NodeAddress{0, idx});
    if ((center - robot_pos).squaredNorm() <= r2) {
      out.push_back(ObstacleCell{center, 0, map.min_cell_size()});
    }
  });
  return out;
}

enum class ExtractionMode { kHierarchical, kFixed };

/// Worst-case number of cells a full extraction pass can touch inside the
/// given radius. Fixed mode counts finest cells filling the ball; the
/// hierarchical count fills each spherical shell between consecutive
/// use limits with cells of the matching height.
inline std::int64_t worst_case_visited_cells(double radius, double min_cell_size,
                                             ExtractionMode mode,
                                             const ExtractionConfig& cfg = {}) {
  const double ball = 4.0 / 3.0 * std::numbers::pi;
  if (mode == ExtractionMode::kFixed) {
    const double cells = ball * std::pow(radius / min_cell_size, 3.0);
    return static_cast<std::int64_t>(cells);
  }
  std::int64_t total = 0;
  double inner = 0.0;
  for (int h = 0; inner < radius; ++h) {
    const double outer = std::min(std::max(max_use_distance(h, cfg), 0.0), radius);
    if (outer > inner) {
      const double shell = ball * (outer * outer * outer - inner * inner * inner);
      const double side = min_cell_size * std::pow(2.0, h);
      total += static_cast<std::int64_t>(std::ceil(shell / (side * side * side)));
    }
    inner = outer;
  }
  return total;
}

}  // namespace hiernav

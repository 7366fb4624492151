#pragma once

#include "hiernav/octree.hpp"

#include <algorithm>
#include <limits>

namespace hiernav {

/// Truncated Euclidean distance to the nearest occupied finest cell:
/// minimum over all occupied cells of the distance from `point` to the
/// cell's surface (zero inside), capped at `truncation`. Deliberately a
/// brute-force scan over occupied cells — this is the evaluation oracle,
/// not a planning-time query. Points outside the mapped bounds report the
/// truncation value.
inline double edf_distance(const OccupancyOctree& map, const Vec3& point,
                           double truncation) {
  if (!map.bounds().contains(point)) return truncation;
  double best = truncation;
  map.for_each_occupied_leaf([&](const Index3& idx) {
    const double d = map.cell_box(NodeAddress{0, idx}).distance_to(point);
    best = std::min(best, d);
  });
  return best;
}

namespace detail {

inline void nearest_occupied(const OccupancyOctree& map, const OctreeNode& node,
                             const NodeAddress& addr, const Vec3& point,
                             double& best) {
  if (!node.any_occupied) return;
  if (addr.height == 0) {
    best = std::min(best, map.cell_box(addr).distance_to(point));
    return;
  }
  // nearest-first over children keeps the pruning bound tight
  int order[8];
  double dist[8];
  for (int c = 0; c < 8; ++c) {
    const NodeAddress child = OccupancyOctree::child_address(addr, c);
    order[c] = c;
    dist[c] = node.child(c).any_occupied ? map.cell_box(child).distance_to(point)
                                         : std::numeric_limits<double>::infinity();
  }
  std::sort(order, order + 8, [&](int a, int b) { return dist[a] < dist[b]; });
  for (int i = 0; i < 8; ++i) {
    const int c = order[i];
    if (dist[c] >= best) break;
    nearest_occupied(map, node.child(c), OccupancyOctree::child_address(addr, c),
                     point, best);
  }
}

}  // namespace detail

/// Same truncated distance field as edf_distance, evaluated through the
/// octree with branch-and-bound pruning so it is cheap enough to sample
/// every control step. Agreement with the brute-force oracle is covered by
/// tests.
inline double clearance_distance(const OccupancyOctree& map, const Vec3& point,
                                 double truncation) {
  if (!map.bounds().contains(point)) return truncation;
  double best = truncation;
  detail::nearest_occupied(map, map.root(), map.root_address(), point, best);
  return best;
}

}  // namespace hiernav

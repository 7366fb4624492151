#pragma once

#include "hiernav/extraction.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace hiernav {

/// A motion policy: desired acceleration plus a symmetric PSD metric that
/// weights the policy (possibly directionally) when several are fused.
struct Policy {
  Vec3 f{Vec3::Zero()};
  Mat3 A{Mat3::Zero()};

  static Policy zero() { return Policy{}; }
};

/// Per-obstacle policy tuning. Length scales grow with the cell height via
/// scale_params; the strength and stability constants stay fixed.
struct ObstaclePolicyParams {
  double eta_rep = 22.0;   // repulsor strength (m/s^2)
  double nu_rep = 0.75;    // repulsor length scale (m)
  double eta_damp = 35.0;  // damper strength
  double nu_damp = 0.45;   // damper length scale (m)
  double epsilon = 0.01;   // keeps the damper gain finite at contact
  double r = 1.5;          // active range of the metric weight (m)
  double c_softnorm = 0.1; // soft-normalization knee
};

/// Linear growth of the per-height length scales. The height is offset by
/// one level so finest-level policies keep nonzero scales.
struct ScaleRule {
  double nu_damp_per_level = 0.45;
  double nu_rep_per_level = 0.75;
  double r_per_level = 1.5;
  int height_offset = 1;
};

struct AttractorParams {
  double alpha = 10.0;  // pull gain (m/s^2)
  double beta = 8.5;    // damping gain (1/s)
  Vec3 goal{Vec3::Zero()};
};

/// nu_damp, nu_rep and r grow linearly with the (offset) cell height, so
/// coarse cells get a proportionally larger sphere of influence.
inline ObstaclePolicyParams scale_params(int height, const ObstaclePolicyParams& base,
                                         const ScaleRule& rule = {}) {
  const double level = static_cast<double>(height + rule.height_offset);
  ObstaclePolicyParams p = base;
  p.nu_damp = rule.nu_damp_per_level * level;
  p.nu_rep = rule.nu_rep_per_level * level;
  p.r = rule.r_per_level * level;
  return p;
}

/// Smoothly rescales v toward its unit direction; the norm saturates
/// strictly below 1 and the map is continuous (and zero) at the origin.
inline Vec3 soft_normalize(const Vec3& v, double c) {
  const double z = v.norm();
  const double h = z + c * std::log1p(std::exp(-2.0 * z / c));
  return v / h;
}

/// Quadratic falloff of the metric weight, clamped to zero past the active
/// range r so distant policies drop out entirely.
inline double range_weight(double d, double r) {
  if (d > r) return 0.0;
  const double t = 1.0 - d / r;
  return t * t;
}

/// Push away from the obstacle along away_dir, decaying exponentially in
/// the obstacle distance.
inline Vec3 repulsor(double d, const Vec3& away_dir, const ObstaclePolicyParams& p) {
  return p.eta_rep * std::exp(-d / p.nu_rep) * away_dir;
}

/// Velocity damping that only acts on the approach component: zero when the
/// robot moves away from or tangentially to the obstacle, and growing as
/// 1/(d/nu + eps) as the gap closes.
inline Vec3 damper(const Vec3& velocity, const Vec3& away_dir, double d,
                   const ObstaclePolicyParams& p) {
  const double approach = std::max(0.0, -velocity.dot(away_dir));
  if (approach == 0.0) return Vec3::Zero();
  const double gain = p.eta_damp / (d / p.nu_damp + p.epsilon);
  return gain * approach * away_dir.dot(velocity) * away_dir;
}

/// How the robot-to-cell distance is measured. The avoidance system uses
/// the surface of the cell's inscribed sphere so coarse cells do not look
/// artificially far; center distance is kept for analysis studies.
enum class CellDistanceMode { kInscribedSurface, kCenter };

inline double cell_distance(const Vec3& x, const ObstacleCell& cell,
                            CellDistanceMode mode = CellDistanceMode::kInscribedSurface) {
  const double to_center = (x - cell.center).norm();
  if (mode == CellDistanceMode::kCenter) return to_center;
  return std::max(0.0, to_center - 0.5 * cell.side_length);
}

struct ObstaclePolicyEval {
  Policy policy;
  bool at_cell_center = false;  // direction undefined; zero policy returned
};

/// Full avoidance policy of one obstacle cell: f = repulsor - damper, with a
/// rank-1 metric aligned with f and gated by the range weight.
inline ObstaclePolicyEval obstacle_policy(const Vec3& x, const Vec3& velocity,
                                          const ObstacleCell& cell,
                                          const ObstaclePolicyParams& p,
                                          CellDistanceMode mode =
                                              CellDistanceMode::kInscribedSurface) {
  const Vec3 offset = x - cell.center;
  const double to_center = offset.norm();
  if (to_center == 0.0) {
    return ObstaclePolicyEval{Policy::zero(), true};
  }
  const Vec3 away_dir = offset / to_center;
  const double d = cell_distance(x, cell, mode);
  Policy policy;
  policy.f = repulsor(d, away_dir, p) - damper(velocity, away_dir, d, p);
  const Vec3 s = soft_normalize(policy.f, p.c_softnorm);
  policy.A = range_weight(d, p.r) * (s * s.transpose());
  return policy;
}

/// Goal attractor: bounded pull toward the goal plus velocity damping,
/// with an isotropic unit metric.
inline Policy attractor_policy(const Vec3& x, const Vec3& velocity,
                               const AttractorParams& p, double c_softnorm = 0.1) {
  Policy policy;
  policy.f = p.alpha * soft_normalize(p.goal - x, c_softnorm) - p.beta * velocity;
  policy.A = Mat3::Identity();
  return policy;
}

/// Metric-weighted fusion of policies: A_c = sum A_i and
/// f_c = pinv(A_c) * sum A_i f_i, with the pseudoinverse taken through a
/// symmetric eigendecomposition (relative cutoff 1e-8). All-zero metrics
/// yield the zero policy.
inline Policy combine(std::span<const Policy> policies) {
  Mat3 metric_sum = Mat3::Zero();
  Vec3 weighted_f = Vec3::Zero();
  for (const Policy& p : policies) {
    if (!p.f.allFinite() || !p.A.allFinite()) {
      throw std::invalid_argument("combine: non-finite policy input");
    }
    metric_sum += p.A;
    weighted_f += p.A * p.f;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(metric_sum);
  const Vec3 evals = eig.eigenvalues();
  const double cutoff = evals.maxCoeff() * 1e-8;
  Vec3 inv = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (evals[i] > cutoff && evals[i] > 0.0) inv[i] = 1.0 / evals[i];
  }
  Policy out;
  out.A = metric_sum;
  out.f = eig.eigenvectors() * inv.asDiagonal() *
          eig.eigenvectors().transpose() * weighted_f;
  return out;
}

inline Policy combine(const std::vector<Policy>& policies) {
  return combine(std::span<const Policy>(policies));
}

struct NavigationEval {
  Vec3 accel{Vec3::Zero()};
  int colliding_cells = 0;  // cells whose box contains the robot position
};

/// Two-stage fusion: per-height sums of obstacle policies (tuned for that
/// height), then a final fusion of the per-height results with the goal
/// attractor.
inline NavigationEval evaluate_navigation(const Vec3& x, const Vec3& velocity,
                                          std::span<const ObstacleCell> cells,
                                          const AttractorParams& attractor,
                                          const ObstaclePolicyParams& base,
                                          const ScaleRule& rule = {}) {
  std::map<int, std::vector<Policy>> by_height;
  NavigationEval result;
  for (const ObstacleCell& cell : cells) {
    const ObstaclePolicyParams p = scale_params(cell.height, base, rule);
    const ObstaclePolicyEval eval = obstacle_policy(x, velocity, cell, p);
    if (eval.at_cell_center ||
        (x - cell.center).lpNorm<Eigen::Infinity>() < 0.5 * cell.side_length) {
      ++result.colliding_cells;
    }
    by_height[cell.height].push_back(eval.policy);
  }
  std::vector<Policy> stage_two;
  stage_two.reserve(by_height.size() + 1);
  for (const auto& [height, group] : by_height) {
    stage_two.push_back(combine(group));
  }
  stage_two.push_back(attractor_policy(x, velocity, attractor, base.c_softnorm));
  result.accel = combine(stage_two).f;
  return result;
}

}  // namespace hiernav

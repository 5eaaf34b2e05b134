#pragma once

#include "artflow/geom.hpp"

namespace artflow {

/// Per-point articulation flow: scaled motion directions with magnitude <= 1.
/// The fastest-moving observed point on the target child link has magnitude 1;
/// points off the target child link are zero.
struct FlowField {
  std::vector<Vec3> vectors;
  std::string target_joint;

  std::size_t size() const { return vectors.size(); }
  double max_magnitude() const;
};

struct FlowErrorReport {
  double mean_l2 = 0.0;
  double max_l2 = 0.0;
  double mean_cosine_distance = 0.0;  // over points with ||gt|| > 1e-6
};

/// Closed-form ground-truth flow for the target joint: prismatic child points
/// get the world-frame unit axis; revolute child points get
/// (omega x r) / ||omega x r_max||, r_max over the sampled child points.
FlowField gt_flow(const ArticulatedObject& obj, const JointState& state, const PointCloud& cloud,
                  const std::string& target_joint);

/// Finite-difference oracle: per-point displacement under a small joint
/// perturbation, normalized by the maximum displacement over the target child
/// link's points. Steps backward (sign-preserving) if q + delta_theta would
/// leave the limits.
FlowField fd_flow_oracle(const ArticulatedObject& obj, const JointState& state,
                         const PointCloud& cloud, const std::string& target_joint,
                         double delta_theta);

/// Flow computed from an explicit (possibly perturbed) screw axis over the
/// points selected by `mask` (all points when empty).
FlowField flow_from_screw(const ScrewAxis& axis, const PointCloud& cloud,
                          const std::vector<std::uint8_t>& mask, const std::string& target_joint);

FlowErrorReport flow_error(const FlowField& pred, const FlowField& gt);

}  // namespace artflow

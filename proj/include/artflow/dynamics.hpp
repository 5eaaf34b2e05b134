#pragma once

#include "artflow/geom.hpp"

namespace artflow {

struct AppliedForce {
  Vec3 point{0, 0, 0};   // world, on the child surface
  Vec3 force{0, 0, 0};   // newtons, ||force|| <= budget
};

/// Suction contact riding on the child link. `break_angle` accumulates the
/// lateral deviation between commanded motion and the feasible direction.
struct ContactState {
  bool attached = false;
  Vec3 contact_point_local{0, 0, 0};  // child-link frame
  double break_angle = 0.0;           // radians, accumulated
};

/// Net force transmitted through a prismatic constraint: (F . v) v.
Vec3 net_force_prismatic(const Vec3& force, const Vec3& v);

/// Net force transmitted through a revolute constraint at radius vector r
/// (perpendicular to omega): F - (F.r/||r||^2) r - (F.omega) omega.
Vec3 net_force_revolute(const Vec3& force, const Vec3& r, const Vec3& omega);

/// Best contact point and force for articulating the target joint: revolute
/// picks the sampled child point farthest from the axis with a tangent force;
/// prismatic picks the lowest-index child point with force along the axis.
/// Ties on radius break to the lowest index.
struct ContactChoice {
  int index = -1;
  Vec3 force{0, 0, 0};
};
ContactChoice optimal_contact(const ArticulatedObject& obj, const JointState& state,
                              const PointCloud& cloud, const std::string& target_joint,
                              double force_budget);

/// Quasi-static articulation step: projects the commanded gripper
/// displacement onto the joint's feasible direction at the current contact
/// position, clamps to limits, and breaks contact when the commanded motion
/// deviates from the feasible direction by more than `break_threshold`.
struct StepResult {
  JointState state;
  ContactState contact;
};
StepResult step_articulation(const ArticulatedObject& obj, const JointState& state,
                             const std::string& target_joint, const ContactState& contact,
                             const Vec3& commanded_displacement, double break_threshold);

}  // namespace artflow

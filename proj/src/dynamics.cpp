#include "artflow/dynamics.hpp"

#include <cmath>

namespace artflow {

namespace {

void require_unit(const Vec3& v, const char* name) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw std::runtime_error(std::string(name) + " must be a unit vector");
}

double angle_between(const Vec3& a, const Vec3& b) {
  const double na = a.norm(), nb = b.norm();
  if (na < 1e-15 || nb < 1e-15) return 0.0;
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

Vec3 perpendicular_radius(const ScrewAxis& screw, const Vec3& point) {
  const Vec3 d = point - screw.origin;
  return d - d.dot(screw.direction) * screw.direction;
}

}  // namespace

Vec3 net_force_prismatic(const Vec3& force, const Vec3& v) {
  require_unit(v, "prismatic axis");
  return force.dot(v) * v;
}

Vec3 net_force_revolute(const Vec3& force, const Vec3& r, const Vec3& omega) {
  require_unit(omega, "rotation axis");
  const double rn2 = r.squaredNorm();
  if (rn2 < 1e-18) throw DegenerateGeometryError("contact point lies on the rotation axis");
  if (std::abs(r.dot(omega)) > 1e-9 * std::sqrt(rn2))
    throw std::runtime_error("radius vector must be perpendicular to the axis");
  return force - (force.dot(r) / rn2) * r - force.dot(omega) * omega;
}

ContactChoice optimal_contact(const ArticulatedObject& obj, const JointState& state,
                              const PointCloud& cloud, const std::string& target_joint,
                              double force_budget) {
  if (!cloud.has_labels()) throw std::runtime_error("optimal_contact requires link labels");
  const auto& joint = obj.joint(target_joint);
  const ScrewAxis screw = joint_screw(obj, state, target_joint);
  const int target = cloud.label_of(joint.child_link);

  ContactChoice choice;
  if (joint.kind == JointKind::Prismatic) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.link_labels[i] == target && target >= 0) {
        choice.index = static_cast<int>(i);
        choice.force = force_budget * screw.direction;
        return choice;
      }
    }
    throw std::runtime_error("no sampled points on child link '" + joint.child_link + "'");
  }

  double best_r = -1.0;
  Vec3 best_radius = Vec3::Zero();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (target < 0 || cloud.link_labels[i] != target) continue;
    const Vec3 r = perpendicular_radius(screw, cloud.points[i]);
    if (r.norm() > best_r) {  // strict: ties keep the lowest index
      best_r = r.norm();
      best_radius = r;
      choice.index = static_cast<int>(i);
    }
  }
  if (choice.index < 0)
    throw std::runtime_error("no sampled points on child link '" + joint.child_link + "'");
  if (best_r < 1e-9)
    throw DegenerateGeometryError("all sampled child points lie on the rotation axis");
  choice.force = force_budget * screw.direction.cross(best_radius).normalized();
  return choice;
}

StepResult step_articulation(const ArticulatedObject& obj, const JointState& state,
                             const std::string& target_joint, const ContactState& contact,
                             const Vec3& commanded_displacement, double break_threshold) {
  if (!contact.attached) throw std::runtime_error("step_articulation requires an attached contact");
  const auto& joint = obj.joint(target_joint);
  const ScrewAxis screw = joint_screw(obj, state, target_joint);
  const auto poses = forward_kinematics(obj, state);
  const Vec3 world_contact =
      poses[static_cast<std::size_t>(obj.link_index(joint.child_link))] * contact.contact_point_local;

  Vec3 feasible;
  double radius = 0.0;
  if (joint.kind == JointKind::Prismatic) {
    feasible = screw.direction;
  } else {
    const Vec3 r = perpendicular_radius(screw, world_contact);
    radius = r.norm();
    if (radius < 1e-9)
      throw DegenerateGeometryError("contact point lies on the rotation axis");
    feasible = screw.direction.cross(r).normalized();
  }

  StepResult result{state, contact};
  const double deviation = angle_between(commanded_displacement, feasible);
  result.contact.break_angle += deviation;
  if (deviation > break_threshold) {
    result.contact.attached = false;
    return result;
  }

  const double dq = joint.kind == JointKind::Prismatic
                        ? commanded_displacement.dot(feasible)
                        : commanded_displacement.dot(feasible) / radius;
  const double q = std::clamp(state.at(target_joint) + dq, joint.q_min, joint.q_max);
  result.state.set(target_joint, q);
  return result;
}

}  // namespace artflow

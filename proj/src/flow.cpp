#include "artflow/flow.hpp"

#include <cmath>

namespace artflow {

double FlowField::max_magnitude() const {
  double m = 0.0;
  for (const auto& v : vectors) m = std::max(m, v.norm());
  return m;
}

namespace {

std::vector<std::uint8_t> child_mask(const ArticulatedObject& obj, const PointCloud& cloud,
                                     const std::string& target_joint) {
  if (!cloud.has_labels()) throw std::runtime_error("flow computation requires link labels");
  const auto& joint = obj.joint(target_joint);
  std::vector<std::uint8_t> mask(cloud.size(), 0);
  const int target = cloud.label_of(joint.child_link);
  for (std::size_t i = 0; i < cloud.size(); ++i) mask[i] = (target >= 0 && cloud.link_labels[i] == target);
  return mask;
}

}  // namespace

FlowField flow_from_screw(const ScrewAxis& axis, const PointCloud& cloud,
                          const std::vector<std::uint8_t>& mask, const std::string& target_joint) {
  FlowField field;
  field.target_joint = target_joint;
  field.vectors.assign(cloud.size(), Vec3::Zero());
  auto selected = [&](std::size_t i) { return mask.empty() || mask[i]; };

  if (axis.kind == JointKind::Prismatic) {
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if (selected(i)) field.vectors[i] = axis.direction;
    return field;
  }

  // Revolute: perpendicular radius vectors from the axis line, normalized by
  // the largest sampled radius.
  std::vector<Vec3> radii(cloud.size(), Vec3::Zero());
  double r_max = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!selected(i)) continue;
    const Vec3 d = cloud.points[i] - axis.origin;
    radii[i] = d - d.dot(axis.direction) * axis.direction;
    r_max = std::max(r_max, radii[i].norm());
  }
  if (r_max < 1e-9)
    throw DegenerateGeometryError("all sampled child points lie on the rotation axis");
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (selected(i)) field.vectors[i] = axis.direction.cross(radii[i]) / r_max;
  return field;
}

FlowField gt_flow(const ArticulatedObject& obj, const JointState& state, const PointCloud& cloud,
                  const std::string& target_joint) {
  const auto mask = child_mask(obj, cloud, target_joint);
  const ScrewAxis screw = joint_screw(obj, state, target_joint);
  bool any = false;
  for (auto m : mask) any |= (m != 0);
  if (!any) {
    FlowField field;
    field.target_joint = target_joint;
    field.vectors.assign(cloud.size(), Vec3::Zero());
    return field;
  }
  return flow_from_screw(screw, cloud, mask, target_joint);
}

FlowField fd_flow_oracle(const ArticulatedObject& obj, const JointState& state,
                         const PointCloud& cloud, const std::string& target_joint,
                         double delta_theta) {
  if (delta_theta == 0.0) throw std::runtime_error("delta_theta must be nonzero");
  const auto& joint = obj.joint(target_joint);
  const double q = state.at(target_joint);

  double step = delta_theta;
  double sign = 1.0;
  if (q + step > joint.q_max || q + step < joint.q_min) {
    step = -delta_theta;
    sign = -1.0;  // keep the field pointing toward increasing q
    if (q + step > joint.q_max || q + step < joint.q_min)
      throw std::runtime_error("joint '" + target_joint + "' has no room to perturb");
  }

  const auto mask = child_mask(obj, cloud, target_joint);
  const auto poses0 = forward_kinematics(obj, state);
  JointState perturbed = state;
  perturbed.set(target_joint, q + step);
  const auto poses1 = forward_kinematics(obj, perturbed);

  FlowField field;
  field.target_joint = target_joint;
  field.vectors.assign(cloud.size(), Vec3::Zero());
  double max_disp = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int label = cloud.has_labels() ? cloud.link_labels[i] : -1;
    if (label < 0) continue;
    const std::size_t link = static_cast<std::size_t>(
        obj.link_index(cloud.label_names[static_cast<std::size_t>(label)]));
    const Vec3 local = poses0[link].inverse() * cloud.points[i];
    field.vectors[i] = sign * (poses1[link] * local - cloud.points[i]);
    if (mask[i]) max_disp = std::max(max_disp, field.vectors[i].norm());
  }
  if (max_disp < 1e-18)
    throw DegenerateGeometryError("zero maximum displacement over the target child link");
  for (auto& v : field.vectors) v /= max_disp;
  return field;
}

FlowErrorReport flow_error(const FlowField& pred, const FlowField& gt) {
  if (pred.size() != gt.size()) throw std::runtime_error("flow field length mismatch");
  if (pred.size() == 0) throw std::runtime_error("empty flow fields");
  FlowErrorReport report;
  double sum_l2 = 0.0, sum_cos = 0.0;
  std::size_t cos_count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double l2 = (pred.vectors[i] - gt.vectors[i]).norm();
    sum_l2 += l2;
    report.max_l2 = std::max(report.max_l2, l2);
    const double gn = gt.vectors[i].norm();
    if (gn > 1e-6) {
      const double pn = pred.vectors[i].norm();
      sum_cos += pn < 1e-12 ? 1.0 : 1.0 - pred.vectors[i].dot(gt.vectors[i]) / (pn * gn);
      ++cos_count;
    }
  }
  report.mean_l2 = sum_l2 / static_cast<double>(pred.size());
  report.mean_cosine_distance = cos_count ? sum_cos / static_cast<double>(cos_count) : 0.0;
  return report;
}

}  // namespace artflow

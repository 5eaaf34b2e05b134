#include "artflow/policy.hpp"

#include <cmath>

namespace artflow {

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::OracleGT: return "oracle";
    case EstimatorKind::NormalDirection: return "normal";
    case EstimatorKind::ScrewParameters: return "screw";
  }
  return "?";
}

std::optional<EstimatorKind> estimator_from_string(const std::string& name) {
  if (name == "oracle") return EstimatorKind::OracleGT;
  if (name == "normal") return EstimatorKind::NormalDirection;
  if (name == "screw") return EstimatorKind::ScrewParameters;
  return std::nullopt;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Success: return "Success";
    case Termination::MaxSteps: return "MaxSteps";
    case Termination::ContactLost: return "ContactLost";
    case Termination::ContactFailed: return "ContactFailed";
    case Termination::EstimatorDegenerate: return "EstimatorDegenerate";
  }
  return "?";
}

const char* to_string(ObservationMode::Kind kind) {
  return kind == ObservationMode::Kind::Full ? "full" : "camera";
}

namespace {

std::vector<std::uint8_t> target_mask(const ArticulatedObject& obj, const PointCloud& cloud,
                                      const std::string& target_joint) {
  if (cloud.has_mask()) return cloud.part_mask;
  const auto& joint = obj.joint(target_joint);
  const int target = cloud.label_of(joint.child_link);
  std::vector<std::uint8_t> mask(cloud.size(), 0);
  if (cloud.has_labels())
    for (std::size_t i = 0; i < cloud.size(); ++i)
      mask[i] = (target >= 0 && cloud.link_labels[i] == target);
  return mask;
}

ScrewAxis perturbed_screw(const ScrewAxis& truth, const ScrewPerturbation& pert) {
  ScrewAxis out = truth;
  Rng rng(pert.seed);
  if (pert.direction_angle != 0.0) {
    Vec3 perp;
    do {
      const Vec3 u = rng.unit_vector();
      perp = u - u.dot(truth.direction) * truth.direction;
    } while (perp.norm() < 1e-6);
    perp.normalize();
    out.direction = (std::cos(pert.direction_angle) * truth.direction +
                     std::sin(pert.direction_angle) * perp)
                        .normalized();
  }
  if (pert.origin_offset != 0.0) out.origin += pert.origin_offset * rng.unit_vector();
  return out;
}

}  // namespace

FlowField estimate_flow(const FlowEstimator& estimator, const ArticulatedObject& obj,
                        const JointState& state, const PointCloud& cloud,
                        const std::string& target_joint, const Vec3& view_point) {
  if (cloud.size() == 0) throw std::runtime_error("empty observation");
  switch (estimator.kind) {
    case EstimatorKind::OracleGT:
      return gt_flow(obj, state, cloud, target_joint);
    case EstimatorKind::NormalDirection: {
      const auto mask = target_mask(obj, cloud, target_joint);
      const PointCloud with_normals = estimate_normals(cloud, estimator.neighbor_k, view_point);
      FlowField field;
      field.target_joint = target_joint;
      field.vectors.assign(cloud.size(), Vec3::Zero());
      for (std::size_t i = 0; i < cloud.size(); ++i)
        if (mask[i] && with_normals.normal_valid[i]) field.vectors[i] = with_normals.normals[i];
      return field;
    }
    case EstimatorKind::ScrewParameters: {
      const auto mask = target_mask(obj, cloud, target_joint);
      const ScrewAxis truth = joint_screw(obj, state, target_joint);
      return flow_from_screw(perturbed_screw(truth, estimator.perturbation), cloud, mask,
                             target_joint);
    }
  }
  throw std::runtime_error("unknown estimator kind");
}

std::optional<GraspCandidate> select_contact(const PointCloud& cloud, const FlowField& flow,
                                             const GraspConstraints& constraints,
                                             const std::vector<std::uint8_t>& edge_flags,
                                             const std::vector<double>& curvature) {
  if (flow.size() != cloud.size() || edge_flags.size() != cloud.size() ||
      curvature.size() != cloud.size())
    throw std::runtime_error("select_contact input length mismatch");

  std::vector<std::uint8_t> violating(cloud.size(), 0);
  std::vector<Vec3> violating_points;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    violating[i] = edge_flags[i] || !(curvature[i] <= constraints.curvature_max);
    if (violating[i]) violating_points.push_back(cloud.points[i]);
  }

  std::optional<KnnIndex> bad_index;
  if (!violating_points.empty()) bad_index.emplace(violating_points);

  GraspCandidate best;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (violating[i]) continue;
    if (bad_index && !bad_index->radius_search(cloud.points[i], constraints.edge_clearance).empty())
      continue;
    const double mag = flow.vectors[i].norm();
    if (mag > best_mag) {  // strict: ties keep the lowest index
      best_mag = mag;
      best.index = static_cast<int>(i);
      best.position = cloud.points[i];
      best.flow = flow.vectors[i];
    }
  }
  if (best.index < 0) return std::nullopt;
  return best;
}

std::optional<Vec3> select_direction(const PointCloud& cloud, const FlowField& flow,
                                     const Vec3& contact_position, double contact_radius) {
  double best_mag = -1.0;
  Vec3 best = Vec3::Zero();
  bool any_in_range = false;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if ((cloud.points[i] - contact_position).norm() > contact_radius) continue;
    any_in_range = true;
    const double mag = flow.vectors[i].norm();
    if (mag > best_mag) {
      best_mag = mag;
      best = flow.vectors[i];
    }
  }
  if (!any_in_range || best_mag < 1e-6) return std::nullopt;
  return best.normalized();
}

namespace {

PointCloud observe(const ArticulatedObject& obj, const JointState& state,
                   const ObservationMode& observation, const std::string& target_joint, int step) {
  PointCloud cloud;
  if (observation.kind == ObservationMode::Kind::Full) {
    const std::uint64_t seed =
        hash_combine(hash_combine(observation.seed, static_cast<std::uint64_t>(step)), "obs");
    cloud = sample_surface(obj, state, observation.sample_count, seed);
  } else {
    cloud = backproject(render_depth(obj, state, observation.camera), observation.camera,
                        observation.stride);
  }
  if (cloud.size() > 0) cloud.set_part_mask_from_labels(obj.joint(target_joint).child_link);
  return cloud;
}

RolloutResult finish(RolloutResult result, const ArticulatedObject& obj,
                     const std::string& target_joint, const RolloutConfig& config) {
  const auto& joint = obj.joint(target_joint);
  const double q_end = result.states.back().at(target_joint);
  result.e_goal = std::abs(q_end - joint.q_max) / joint.range();
  result.success = result.e_goal <= config.success_threshold;
  if (result.success) result.termination = Termination::Success;
  return result;
}

}  // namespace

RolloutResult rollout(const ArticulatedObject& obj, const JointState& initial_state,
                      const std::string& target_joint, const FlowEstimator& estimator,
                      const ObservationMode& observation, const RolloutConfig& config,
                      const GraspConstraints& grasp) {
  RolloutResult result;
  result.states.push_back(initial_state);
  const Vec3 view_point = observation.camera.eye();

  try {
    // Phase 1: grasp selection.
    const PointCloud cloud0 = observe(obj, initial_state, observation, target_joint, 0);
    if (cloud0.size() <= static_cast<std::size_t>(grasp.neighbor_k)) {
      result.termination = Termination::EstimatorDegenerate;
      return finish(std::move(result), obj, target_joint, config);
    }
    // The Normal Direction baseline grasps at the ground-truth max-flow
    // point; only the motion direction comes from normals. Unit-magnitude
    // normal fields would otherwise make the max-flow grasp arbitrary.
    FlowEstimator contact_estimator = estimator;
    if (estimator.kind == EstimatorKind::NormalDirection)
      contact_estimator.kind = EstimatorKind::OracleGT;
    const FlowField contact_flow =
        estimate_flow(contact_estimator, obj, initial_state, cloud0, target_joint, view_point);

    const auto edges = detect_edges(cloud0, grasp.neighbor_k, grasp.edge_angle_gap);
    const auto curvature = estimate_gaussian_curvature(cloud0, grasp.neighbor_k);
    const auto candidate = select_contact(cloud0, contact_flow, grasp, edges, curvature);
    if (!candidate) {
      result.termination = Termination::ContactFailed;
      return finish(std::move(result), obj, target_joint, config);
    }

    const auto& joint = obj.joint(target_joint);
    const auto poses = forward_kinematics(obj, initial_state);
    ContactState contact;
    contact.attached = true;
    contact.contact_point_local =
        poses[static_cast<std::size_t>(obj.link_index(joint.child_link))].inverse() *
        candidate->position;

    // Phase 2: articulation execution.
    JointState state = initial_state;
    for (int step = 1; step <= config.max_steps; ++step) {
      const PointCloud cloud = observe(obj, state, observation, target_joint, step);
      if (cloud.size() == 0) {
        result.termination = Termination::EstimatorDegenerate;
        return finish(std::move(result), obj, target_joint, config);
      }
      const FlowField flow = estimate_flow(estimator, obj, state, cloud, target_joint, view_point);
      const Vec3 world_contact =
          forward_kinematics(obj, state)[static_cast<std::size_t>(
              obj.link_index(joint.child_link))] *
          contact.contact_point_local;
      const auto direction = select_direction(cloud, flow, world_contact, config.contact_radius);
      if (!direction) {
        result.termination = Termination::EstimatorDegenerate;
        return finish(std::move(result), obj, target_joint, config);
      }
      const auto stepped = step_articulation(obj, state, target_joint, contact,
                                             config.step_size * *direction, config.break_angle);
      state = stepped.state;
      contact = stepped.contact;
      result.states.push_back(state);
      result.steps_used = step;

      const double e =
          std::abs(state.at(target_joint) - joint.q_max) / joint.range();
      if (e <= config.success_threshold) {
        result.termination = Termination::Success;
        return finish(std::move(result), obj, target_joint, config);
      }
      if (!contact.attached) {
        result.termination = Termination::ContactLost;
        return finish(std::move(result), obj, target_joint, config);
      }
    }
    result.termination = Termination::MaxSteps;
    return finish(std::move(result), obj, target_joint, config);
  } catch (const std::exception&) {
    // Degenerate estimates and geometry failures become termination reasons
    // so evaluation suites always complete.
    result.termination = Termination::EstimatorDegenerate;
    return finish(std::move(result), obj, target_joint, config);
  }
}

}  // namespace artflow

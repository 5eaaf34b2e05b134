#pragma once

#include "artflow/camera.hpp"
#include "artflow/dynamics.hpp"
#include "artflow/flow.hpp"

#include <optional>

namespace artflow {

enum class EstimatorKind { OracleGT, NormalDirection, ScrewParameters };

const char* to_string(EstimatorKind kind);
std::optional<EstimatorKind> estimator_from_string(const std::string& name);

/// Deterministic perturbation applied to the true screw axis by the
/// ScrewParameters baseline.
struct ScrewPerturbation {
  double direction_angle = 0.0;  // radians
  double origin_offset = 0.0;    // meters
  std::uint64_t seed = 0;
};

struct FlowEstimator {
  EstimatorKind kind = EstimatorKind::OracleGT;
  ScrewPerturbation perturbation;
  int neighbor_k = 16;  // NormalDirection neighborhood
};

struct GraspConstraints {
  double edge_clearance = 0.02;      // meters, suction tip radius
  double curvature_max = 500.0;      // 1/m^2
  int neighbor_k = 16;
  double edge_angle_gap = M_PI / 2;  // radians
};

struct RolloutConfig {
  int max_steps = 50;
  double step_size = 0.01;          // meters per step
  double success_threshold = 0.1;   // delta
  double contact_radius = 0.05;     // meters
  double break_angle = M_PI / 3.0;  // radians
};

enum class Termination { Success, MaxSteps, ContactLost, ContactFailed, EstimatorDegenerate };
const char* to_string(Termination t);

struct RolloutResult {
  std::vector<JointState> states;  // includes the initial state
  double e_goal = 1.0;
  bool success = false;
  int steps_used = 0;
  Termination termination = Termination::MaxSteps;
};

struct GraspCandidate {
  int index = -1;
  Vec3 position{0, 0, 0};
  Vec3 flow{0, 0, 0};
};

/// Runs the chosen estimator over an observation. `view_point` is the sensor
/// position used for normal sign alignment.
FlowField estimate_flow(const FlowEstimator& estimator, const ArticulatedObject& obj,
                        const JointState& state, const PointCloud& cloud,
                        const std::string& target_joint, const Vec3& view_point);

/// Max-flow point subject to the suction feasibility constraints: not an edge
/// point, curvature below threshold, and no violating point within the
/// clearance distance. Ties by lowest index; nullopt when no point is
/// feasible.
std::optional<GraspCandidate> select_contact(const PointCloud& cloud, const FlowField& flow,
                                             const GraspConstraints& constraints,
                                             const std::vector<std::uint8_t>& edge_flags,
                                             const std::vector<double>& curvature);

/// Direction of the max-magnitude flow among points within `contact_radius`
/// of the contact. nullopt when no point is in range or the best magnitude is
/// negligible.
std::optional<Vec3> select_direction(const PointCloud& cloud, const FlowField& flow,
                                     const Vec3& contact_position, double contact_radius);

/// How the policy observes the scene each step.
struct ObservationMode {
  enum class Kind { Full, Camera } kind = Kind::Full;
  int sample_count = 1024;        // Full mode
  std::uint64_t seed = 0;         // Full mode; per-step streams derived from it
  CameraModel camera;             // Camera mode; also the view point in Full mode
  int stride = 1;
};

const char* to_string(ObservationMode::Kind kind);

/// Two-phase closed-loop policy: select a suction contact at the max-flow
/// feasible point, then repeatedly move along the max-magnitude estimated
/// flow near the contact until the joint reaches its limit. Failures are
/// reported as termination reasons, never exceptions.
RolloutResult rollout(const ArticulatedObject& obj, const JointState& initial_state,
                      const std::string& target_joint, const FlowEstimator& estimator,
                      const ObservationMode& observation, const RolloutConfig& config,
                      const GraspConstraints& grasp = {});

}  // namespace artflow

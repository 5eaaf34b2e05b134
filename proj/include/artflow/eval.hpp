#pragma once

#include "artflow/policy.hpp"

#include <cmath>

#include <iosfwd>

namespace artflow {

/// Remaining fraction of the joint range after a rollout:
/// |j_end - j_goal| / |j_goal - j_init|.
double normalized_distance(double j_init, double j_end, double j_goal);

/// Success iff e_goal <= delta (boundary inclusive).
bool success(double e_goal, double delta);

struct TrialRecord {
  std::string object_id;
  std::string category;
  std::string joint_id;
  EstimatorKind estimator = EstimatorKind::OracleGT;
  ObservationMode::Kind observation = ObservationMode::Kind::Full;
  std::uint64_t seed = 0;
  double e_goal = 1.0;
  bool success = false;
  int steps = 0;
  Termination termination = Termination::MaxSteps;
};

struct CategoryStats {
  std::string category;
  int trials = 0;
  double mean_e_goal = 0.0;
  double success_rate = 0.0;
};

struct SuiteReport {
  std::vector<TrialRecord> trials;  // sorted by (estimator, observation, object, joint, seed)
  std::vector<CategoryStats> per_category;  // keyed by estimator/observation/category
  std::vector<std::string> category_keys;   // parallel to per_category
  double overall_mean_e_goal = 0.0;
  double overall_success_rate = 0.0;
  std::uint64_t suite_seed = 0;
  std::string config_echo;
};

struct SuiteObject {
  std::string id;
  std::string category;
  ArticulatedObject object;
  std::vector<std::string> target_joints;  // empty = all movable joints
};

struct SuiteConfig {
  RolloutConfig rollout;
  GraspConstraints grasp;
  std::vector<EstimatorKind> estimators{EstimatorKind::OracleGT};
  FlowEstimator estimator_template;  // perturbation etc. applied per kind
  std::vector<ObservationMode::Kind> modes{ObservationMode::Kind::Full};
  int repetitions = 1;
  // Full-observation clouds are redrawn every step; enough density that thin
  // parts keep several points inside the contact ball at every step.
  int sample_count = 2048;
  // Distances in multiples of the swept-volume diagonal. Tighter than the
  // general-purpose defaults so the articulated part stays inside the frustum
  // and above the self-occlusion silhouette for the whole trajectory.
  ViewpointRanges viewpoint{25.0 * M_PI / 180.0, 50.0 * M_PI / 180.0,
                            -M_PI / 4.0,         M_PI / 4.0,
                            1.2,                 1.8};
  int camera_resolution = 256;
  int jobs = 1;
};

/// Deterministic batch evaluation: one trial per (object, joint, estimator,
/// mode, repetition). Object failures become failed trials, not aborts.
SuiteReport run_suite(const std::vector<SuiteObject>& objects, const SuiteConfig& config,
                      std::uint64_t suite_seed);

/// Recomputes aggregates from raw records (sorted first); used by run_suite
/// and by consumers reloading CSV dumps.
void aggregate(SuiteReport& report);

void write_trials_csv(const SuiteReport& report, std::ostream& out);
void write_report_table(const SuiteReport& report, std::ostream& out);
std::string trial_to_record_line(const TrialRecord& trial);  // line-delimited structured text
TrialRecord trial_from_record_line(const std::string& line);

}  // namespace artflow

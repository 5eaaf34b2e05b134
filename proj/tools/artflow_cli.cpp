// artflow command-line driver: dataset generation, single rollouts, suite
// evaluation and flow validation. Exit codes: 0 success, 1 task failure,
// 2 usage / I-O error.

#include <CLI11.hpp>

#include "artflow/eval.hpp"
#include "artflow/flow.hpp"
#include "artflow/procgen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace artflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTaskFailure = 1;
constexpr int kExitUsage = 2;

struct ObjectSource {
  std::string scene_path;   // native scene file
  std::string procgen_kind; // procedural family name
  std::uint64_t procgen_seed = 0;
};

void add_object_flags(CLI::App* cmd, ObjectSource& src) {
  auto* scene = cmd->add_option("--object", src.scene_path, "Scene description file");
  auto* proc = cmd->add_option("--procgen", src.procgen_kind,
                               "Procedural object kind (drawer|door|lid|cabinet)");
  cmd->add_option("--procgen-seed", src.procgen_seed, "Seed for the procedural object");
  scene->excludes(proc);
}

ArticulatedObject resolve_object(const ObjectSource& src) {
  if (!src.scene_path.empty()) return load_scene(src.scene_path);
  if (!src.procgen_kind.empty()) {
    const auto kind = proc_kind_from_string(src.procgen_kind);
    if (!kind) throw CLI::ValidationError("--procgen", "unknown kind '" + src.procgen_kind + "'");
    ProcSpec spec;
    spec.kind = *kind;
    spec.seed = src.procgen_seed;
    return generate(spec);
  }
  throw CLI::ValidationError("object source", "one of --object or --procgen is required");
}

Vec3 posed_center(const ArticulatedObject& obj, const JointState& state, double* diagonal) {
  TriMesh whole;
  const auto poses = forward_kinematics(obj, state);
  for (std::size_t i = 0; i < obj.links.size(); ++i)
    append(whole, transformed(obj.links[i].mesh, poses[i]));
  Vec3 lo, hi;
  whole.bounds(lo, hi);
  if (diagonal) *diagonal = (hi - lo).norm();
  return (lo + hi) / 2.0;
}

int cmd_gen_dataset(const ObjectSource& src, const std::string& out_dir, int count, int samples,
                    std::uint64_t seed) {
  if (count < 1) throw CLI::ValidationError("--count", "empty dataset request");
  const auto obj = resolve_object(src);
  fs::create_directories(out_dir);
  int written = 0;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t state_seed = hash_combine(hash_combine(seed, "state"),
                                                  static_cast<std::uint64_t>(i));
    const auto state = random_state(obj, state_seed);
    const auto cloud = sample_surface(obj, state, samples,
                                      hash_combine(state_seed, "samples"));
    for (const auto& joint : obj.joints) {
      const auto flow = gt_flow(obj, state, cloud, joint.id);
      std::ostringstream name;
      name << "pair_" << joint.id << '_' << std::setw(5) << std::setfill('0') << i << ".afp";
      save_cloud_file(cloud, (fs::path(out_dir) / name.str()).string(), &flow.vectors);
      ++written;
    }
  }
  std::cout << "wrote " << written << " observation/flow pairs to " << out_dir << "\n";
  return kExitOk;
}

int cmd_rollout(const ObjectSource& src, const std::string& joint_arg, const std::string& estimator_arg,
                bool camera_obs, std::uint64_t seed, const RolloutConfig& rollout_config,
                int samples, const std::string& dump_dir) {
  const auto obj = resolve_object(src);
  const std::string joint_id = joint_arg.empty() ? obj.joints.front().id : joint_arg;
  const auto est_kind = estimator_from_string(estimator_arg);
  if (!est_kind)
    throw CLI::ValidationError("--estimator", "unknown estimator '" + estimator_arg + "'");

  double diagonal = 1.0;
  const Vec3 center = posed_center(obj, obj.closed_state(), &diagonal);
  ViewpointRanges ranges;
  ranges.distance_min *= diagonal;
  ranges.distance_max *= diagonal;
  const CameraModel camera = random_viewpoint(hash_combine(seed, "camera"), ranges, center);

  ObservationMode observation;
  observation.kind = camera_obs ? ObservationMode::Kind::Camera : ObservationMode::Kind::Full;
  observation.sample_count = samples;
  observation.seed = hash_combine(seed, "samples");
  observation.camera = camera;

  FlowEstimator estimator;
  estimator.kind = *est_kind;
  estimator.perturbation.seed = hash_combine(seed, "perturbation");

  const auto result =
      rollout(obj, obj.closed_state(), joint_id, estimator, observation, rollout_config);

  if (!dump_dir.empty()) {
    fs::create_directories(dump_dir);
    for (std::size_t s = 0; s < result.states.size(); ++s) {
      const auto cloud = sample_surface(obj, result.states[s], samples,
                                        hash_combine(seed, static_cast<std::uint64_t>(s)));
      const auto flow = gt_flow(obj, result.states[s], cloud, joint_id);
      std::ostringstream name;
      name << "step_" << std::setw(4) << std::setfill('0') << s << ".afp";
      save_cloud_file(cloud, (fs::path(dump_dir) / name.str()).string(), &flow.vectors);
    }
  }

  TrialRecord record;
  record.object_id = src.scene_path.empty() ? src.procgen_kind : src.scene_path;
  record.category = src.procgen_kind.empty() ? "scene" : src.procgen_kind;
  record.joint_id = joint_id;
  record.estimator = *est_kind;
  record.observation = observation.kind;
  record.seed = seed;
  record.e_goal = result.e_goal;
  record.success = result.success;
  record.steps = result.steps_used;
  record.termination = result.termination;
  std::cout << trial_to_record_line(record) << "\n";
  return result.success ? kExitOk : kExitTaskFailure;
}

int cmd_eval(const std::string& out_dir, const std::string& estimators_arg,
             const std::string& modes_arg, int repetitions, int jobs, int samples,
             std::uint64_t seed, const RolloutConfig& rollout_config) {
  SuiteConfig config;
  config.rollout = rollout_config;
  config.repetitions = repetitions;
  config.jobs = jobs;
  config.sample_count = samples;

  config.estimators.clear();
  std::istringstream est_in(estimators_arg);
  for (std::string token; std::getline(est_in, token, ',');) {
    const auto kind = estimator_from_string(token);
    if (!kind) throw CLI::ValidationError("--estimators", "unknown estimator '" + token + "'");
    config.estimators.push_back(*kind);
  }
  config.modes.clear();
  std::istringstream mode_in(modes_arg);
  for (std::string token; std::getline(mode_in, token, ',');) {
    if (token == "full") config.modes.push_back(ObservationMode::Kind::Full);
    else if (token == "camera") config.modes.push_back(ObservationMode::Kind::Camera);
    else throw CLI::ValidationError("--modes", "unknown observation mode '" + token + "'");
  }

  const auto suite = make_acceptance_suite(seed);
  const auto report = run_suite(suite, config, seed);

  fs::create_directories(out_dir);
  {
    std::ofstream csv(fs::path(out_dir) / "trials.csv");
    if (!csv) throw std::runtime_error("cannot write trials.csv under " + out_dir);
    write_trials_csv(report, csv);
  }
  {
    std::ofstream table(fs::path(out_dir) / "report.txt");
    if (!table) throw std::runtime_error("cannot write report.txt under " + out_dir);
    write_report_table(report, table);
  }
  write_report_table(report, std::cout);
  return kExitOk;
}

int cmd_validate_flow(const ObjectSource& src, int object_count, int states_per_object,
                      double delta_theta, double tolerance, int samples, std::uint64_t seed) {
  if (delta_theta == 0.0) throw CLI::ValidationError("--delta-theta", "must be nonzero");
  const bool fixed_object = !src.scene_path.empty() || !src.procgen_kind.empty();
  if (fixed_object) object_count = 1;
  double max_angle = 0.0, max_mag = 0.0;
  int comparisons = 0;
  for (int oi = 0; oi < object_count; ++oi) {
    const auto obj = fixed_object
                         ? resolve_object(src)
                         : random_object(hash_combine(seed, static_cast<std::uint64_t>(oi)));
    for (int si = 0; si < states_per_object; ++si) {
      auto state = random_state(obj, hash_combine(hash_combine(seed, "state"),
                                                  static_cast<std::uint64_t>(oi * 1000 + si)));
      for (const auto& j : obj.joints) {
        // Keep room on at least one side of the state for the difference step.
        const double margin = std::min(2.0 * std::abs(delta_theta), 0.4 * j.range());
        state.set(j.id, std::clamp(state.at(j.id), j.q_min + margin, j.q_max - margin));
      }
      const auto cloud = sample_surface(obj, state, samples,
                                        hash_combine(hash_combine(seed, "cloud"),
                                                     static_cast<std::uint64_t>(oi * 1000 + si)));
      for (const auto& joint : obj.joints) {
        const auto gt = gt_flow(obj, state, cloud, joint.id);
        const auto fd = fd_flow_oracle(obj, state, cloud, joint.id, delta_theta);
        for (std::size_t i = 0; i < gt.size(); ++i) {
          const double gn = gt.vectors[i].norm(), fn = fd.vectors[i].norm();
          max_mag = std::max(max_mag, std::abs(gn - fn));
          if (gn > 1e-9 && fn > 1e-9) {
            const double c = std::clamp(gt.vectors[i].dot(fd.vectors[i]) / (gn * fn), -1.0, 1.0);
            max_angle = std::max(max_angle, std::acos(c));
          }
          ++comparisons;
        }
      }
    }
  }
  std::cout << "objects=" << object_count << " states=" << states_per_object
            << " comparisons=" << comparisons << "\n"
            << "max angular deviation: " << max_angle << " rad\n"
            << "max magnitude deviation: " << max_mag << "\n"
            << "tolerance: " << tolerance << "\n";
  const bool ok = max_angle < tolerance && max_mag < tolerance;
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitTaskFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"articulated-object flow simulation and policy evaluation"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Global random seed")->capture_default_str();
  app.fallthrough();  // lets --seed appear after the subcommand name

  RolloutConfig rollout_config;
  const auto add_rollout_flags = [&](CLI::App* cmd) {
    cmd->add_option("--steps", rollout_config.max_steps, "Maximum policy steps");
    cmd->add_option("--step-size", rollout_config.step_size, "Gripper displacement per step (m)");
    cmd->add_option("--delta", rollout_config.success_threshold,
                    "Success threshold on the normalized goal distance");
  };

  // gen-dataset
  ObjectSource gen_src;
  std::string gen_out = "dataset";
  int gen_count = 100;
  int gen_samples = 1024;
  auto* gen = app.add_subcommand("gen-dataset",
                                 "Generate observation / ground-truth flow pair files");
  add_object_flags(gen, gen_src);
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--count", gen_count, "Randomized joint states per object")
      ->capture_default_str();
  gen->add_option("--samples", gen_samples, "Surface samples per observation")
      ->capture_default_str();

  // rollout
  ObjectSource roll_src;
  std::string roll_joint, roll_estimator = "oracle", roll_dump;
  bool roll_camera = false, roll_full = false;
  int roll_samples = 2048;
  auto* roll = app.add_subcommand("rollout", "Run the flow-following policy once");
  add_object_flags(roll, roll_src);
  roll->add_option("--joint", roll_joint, "Target joint id (default: first joint)");
  roll->add_option("--estimator", roll_estimator, "oracle|normal|screw")->capture_default_str();
  auto* cam_flag = roll->add_flag("--camera", roll_camera, "Observe through a rendered depth camera");
  roll->add_flag("--full-obs", roll_full, "Observe the full surface (default)")->excludes(cam_flag);
  roll->add_option("--samples", roll_samples, "Surface samples per observation")
      ->capture_default_str();
  roll->add_option("--dump-steps", roll_dump, "Directory for per-step cloud+flow dumps");
  add_rollout_flags(roll);

  // eval
  std::string eval_out = "eval_out", eval_estimators = "oracle", eval_modes = "full";
  int eval_reps = 1, eval_jobs = 1, eval_samples = 2048;
  auto* eval = app.add_subcommand("eval", "Evaluate estimators over the 20-object suite");
  eval->add_option("--out", eval_out, "Output directory")->capture_default_str();
  eval->add_option("--estimators", eval_estimators, "Comma-separated: oracle,normal,screw")
      ->capture_default_str();
  eval->add_option("--modes", eval_modes, "Comma-separated: full,camera")->capture_default_str();
  eval->add_option("--reps", eval_reps, "Repetitions per combination")->capture_default_str();
  eval->add_option("--jobs", eval_jobs, "Worker threads")->capture_default_str();
  eval->add_option("--samples", eval_samples, "Surface samples per observation")
      ->capture_default_str();
  add_rollout_flags(eval);

  // validate-flow
  ObjectSource val_src;
  int val_objects = 100, val_states = 5, val_samples = 400;
  double val_delta_theta = 1e-6, val_tolerance = 1e-4;
  auto* val = app.add_subcommand("validate-flow",
                                 "Cross-check closed-form flow against finite differences");
  add_object_flags(val, val_src);
  val->add_option("--objects", val_objects, "Random object count (ignored with a fixed object)")
      ->capture_default_str();
  val->add_option("--states", val_states, "Random states per object")->capture_default_str();
  val->add_option("--delta-theta", val_delta_theta, "Finite-difference step")
      ->capture_default_str();
  val->add_option("--tolerance", val_tolerance, "Maximum allowed deviation")
      ->capture_default_str();
  val->add_option("--samples", val_samples, "Surface samples per cloud")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return cmd_gen_dataset(gen_src, gen_out, gen_count, gen_samples, seed);
    if (roll->parsed())
      return cmd_rollout(roll_src, roll_joint, roll_estimator, roll_camera, seed, rollout_config,
                         roll_samples, roll_dump);
    if (eval->parsed())
      return cmd_eval(eval_out, eval_estimators, eval_modes, eval_reps, eval_jobs, eval_samples,
                      seed, rollout_config);
    if (val->parsed())
      return cmd_validate_flow(val_src, val_objects, val_states, val_delta_theta, val_tolerance,
                               val_samples, seed);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

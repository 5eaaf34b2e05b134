#include "artflow/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace artflow {

double normalized_distance(double j_init, double j_end, double j_goal) {
  const double range = std::abs(j_goal - j_init);
  if (range == 0.0) throw std::runtime_error("zero-range joint in normalized_distance");
  return std::abs(j_end - j_goal) / range;
}

bool success(double e_goal, double delta) {
  if (e_goal < 0.0) throw std::runtime_error("negative normalized distance");
  return e_goal <= delta;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trial_sort_key(const TrialRecord& t) {
  std::ostringstream key;
  key << to_string(t.estimator) << '|' << to_string(t.observation) << '|' << t.object_id << '|'
      << t.joint_id << '|' << std::setw(20) << std::setfill('0') << t.seed;
  return key.str();
}

std::string group_key(const TrialRecord& t) {
  return std::string(to_string(t.estimator)) + "/" + to_string(t.observation) + "/" + t.category;
}

}  // namespace

void aggregate(SuiteReport& report) {
  std::sort(report.trials.begin(), report.trials.end(),
            [](const TrialRecord& a, const TrialRecord& b) {
              return trial_sort_key(a) < trial_sort_key(b);
            });
  std::map<std::string, CategoryStats> stats;
  double sum_e = 0.0;
  int successes = 0;
  for (const auto& t : report.trials) {
    auto& s = stats[group_key(t)];
    s.category = t.category;
    s.trials += 1;
    s.mean_e_goal += t.e_goal;
    s.success_rate += t.success ? 1.0 : 0.0;
    sum_e += t.e_goal;
    successes += t.success ? 1 : 0;
  }
  report.per_category.clear();
  report.category_keys.clear();
  for (auto& [key, s] : stats) {
    s.mean_e_goal /= s.trials;
    s.success_rate /= s.trials;
    report.category_keys.push_back(key);
    report.per_category.push_back(s);
  }
  const double n = static_cast<double>(report.trials.size());
  report.overall_mean_e_goal = n > 0 ? sum_e / n : 0.0;
  report.overall_success_rate = n > 0 ? successes / n : 0.0;
}

SuiteReport run_suite(const std::vector<SuiteObject>& objects, const SuiteConfig& config,
                      std::uint64_t suite_seed) {
  if (objects.empty() || config.estimators.empty() || config.modes.empty())
    throw std::runtime_error("run_suite requires non-empty objects, estimators and modes");

  struct Task {
    const SuiteObject* object;
    std::string joint;
    EstimatorKind estimator;
    ObservationMode::Kind mode;
    int repetition;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& obj : objects) {
    std::vector<std::string> joints = obj.target_joints;
    if (joints.empty()) joints = obj.object.joint_ids();
    for (const auto& joint : joints) {
      for (auto estimator : config.estimators) {
        for (auto mode : config.modes) {
          for (int rep = 0; rep < config.repetitions; ++rep) {
            // Estimator deliberately excluded: estimators under comparison see
            // identical cameras and sample clouds (paired trials).
            std::uint64_t seed = hash_combine(suite_seed, obj.id);
            seed = hash_combine(seed, joint);
            seed = hash_combine(seed, std::string(to_string(mode)));
            seed = hash_combine(seed, static_cast<std::uint64_t>(rep));
            tasks.push_back({&obj, joint, estimator, mode, rep, seed});
          }
        }
      }
    }
  }

  std::vector<TrialRecord> trials(tasks.size());
  auto run_task = [&](std::size_t ti) {
    const Task& task = tasks[ti];
    TrialRecord record;
    record.object_id = task.object->id;
    record.category = task.object->category;
    record.joint_id = task.joint;
    record.estimator = task.estimator;
    record.observation = task.mode;
    record.seed = task.seed;
    try {
      const ArticulatedObject& object = task.object->object;
      const auto& joint = object.joint(task.joint);
      if (!(joint.range() > 0.0)) throw std::runtime_error("zero-range joint");

      // Camera framed on the swept volume (closed and fully open states) so
      // moving parts stay in view for the whole trajectory; also the sensor
      // position for normal alignment in full-observation mode.
      Vec3 lo, hi;
      TriMesh whole;
      const JointState closed = object.closed_state();
      JointState open_state = closed;
      for (const auto& j : object.joints) open_state.set(j.id, j.q_max);
      for (const JointState* s : {&closed, static_cast<const JointState*>(&open_state)}) {
        const auto poses = forward_kinematics(object, *s);
        for (std::size_t li = 0; li < object.links.size(); ++li)
          append(whole, transformed(object.links[li].mesh, poses[li]));
      }
      whole.bounds(lo, hi);
      const Vec3 center = (lo + hi) / 2.0;
      const double diagonal = (hi - lo).norm();
      ViewpointRanges ranges = config.viewpoint;
      ranges.distance_min *= diagonal;
      ranges.distance_max *= diagonal;
      const double f = static_cast<double>(config.camera_resolution);
      const CameraModel camera =
          random_viewpoint(hash_combine(task.seed, "camera"), ranges, center, f, f,
                           config.camera_resolution, config.camera_resolution);

      ObservationMode observation;
      observation.kind = task.mode == ObservationMode::Kind::Full ? ObservationMode::Kind::Full
                                                                  : ObservationMode::Kind::Camera;
      observation.sample_count = config.sample_count;
      observation.seed = hash_combine(task.seed, "samples");
      observation.camera = camera;

      FlowEstimator estimator = config.estimator_template;
      estimator.kind = task.estimator;
      estimator.perturbation.seed = hash_combine(task.seed, "perturbation");

      const RolloutResult result = rollout(object, object.closed_state(), task.joint, estimator,
                                           observation, config.rollout, config.grasp);
      record.e_goal = result.e_goal;
      record.success = result.success;
      record.steps = result.steps_used;
      record.termination = result.termination;
    } catch (const std::exception&) {
      record.e_goal = 1.0;
      record.success = false;
      record.steps = 0;
      record.termination = Termination::ContactFailed;
    }
    trials[ti] = std::move(record);
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) break;
          run_task(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  SuiteReport report;
  report.trials = std::move(trials);
  report.suite_seed = suite_seed;
  {
    std::ostringstream cfg;
    cfg << "max_steps=" << config.rollout.max_steps << " step_size=" << fmt_double(config.rollout.step_size)
        << " delta=" << fmt_double(config.rollout.success_threshold)
        << " contact_radius=" << fmt_double(config.rollout.contact_radius)
        << " break_angle=" << fmt_double(config.rollout.break_angle)
        << " samples=" << config.sample_count << " reps=" << config.repetitions
        << " metric=per-point-mean";
    report.config_echo = cfg.str();
  }
  aggregate(report);
  return report;
}

void write_trials_csv(const SuiteReport& report, std::ostream& out) {
  out << "object,category,joint,estimator,observation,seed,e_goal,success,steps,termination\n";
  for (const auto& t : report.trials) {
    out << t.object_id << ',' << t.category << ',' << t.joint_id << ',' << to_string(t.estimator)
        << ',' << to_string(t.observation) << ',' << t.seed << ',' << fmt_double(t.e_goal) << ','
        << (t.success ? 1 : 0) << ',' << t.steps << ',' << to_string(t.termination) << '\n';
  }
}

void write_report_table(const SuiteReport& report, std::ostream& out) {
  out << "suite seed: " << report.suite_seed << '\n';
  out << "config: " << report.config_echo << '\n';
  out << std::left << std::setw(34) << "estimator/observation/category" << std::right
      << std::setw(8) << "trials" << std::setw(12) << "mean_e" << std::setw(12) << "success"
      << '\n';
  for (std::size_t i = 0; i < report.per_category.size(); ++i) {
    const auto& s = report.per_category[i];
    out << std::left << std::setw(34) << report.category_keys[i] << std::right << std::setw(8)
        << s.trials << std::setw(12) << std::fixed << std::setprecision(4) << s.mean_e_goal
        << std::setw(12) << s.success_rate << '\n';
    out.unsetf(std::ios::fixed);
  }
  out << std::left << std::setw(34) << "overall" << std::right << std::setw(8)
      << report.trials.size() << std::setw(12) << std::fixed << std::setprecision(4)
      << report.overall_mean_e_goal << std::setw(12) << report.overall_success_rate << '\n';
  out.unsetf(std::ios::fixed);
}

std::string trial_to_record_line(const TrialRecord& trial) {
  std::ostringstream out;
  out << "object=" << trial.object_id << " category=" << trial.category
      << " joint=" << trial.joint_id << " estimator=" << to_string(trial.estimator)
      << " observation=" << to_string(trial.observation) << " seed=" << trial.seed
      << " e_goal=" << fmt_double(trial.e_goal) << " success=" << (trial.success ? 1 : 0)
      << " steps=" << trial.steps << " termination=" << to_string(trial.termination);
  return out.str();
}

TrialRecord trial_from_record_line(const std::string& line) {
  TrialRecord t;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed trial record");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "object") t.object_id = value;
    else if (key == "category") t.category = value;
    else if (key == "joint") t.joint_id = value;
    else if (key == "estimator") {
      const auto kind = estimator_from_string(value);
      if (!kind) throw std::runtime_error("unknown estimator '" + value + "'");
      t.estimator = *kind;
    } else if (key == "observation") {
      t.observation = value == "camera" ? ObservationMode::Kind::Camera : ObservationMode::Kind::Full;
    } else if (key == "seed") t.seed = std::stoull(value);
    else if (key == "e_goal") t.e_goal = std::stod(value);
    else if (key == "success") t.success = value == "1";
    else if (key == "steps") t.steps = std::stoi(value);
    else if (key == "termination") {
      // round-trips only the enum names emitted by to_string
      for (Termination term : {Termination::Success, Termination::MaxSteps, Termination::ContactLost,
                               Termination::ContactFailed, Termination::EstimatorDegenerate})
        if (value == to_string(term)) t.termination = term;
    } else {
      throw std::runtime_error("unknown trial record key '" + key + "'");
    }
  }
  return t;
}

}  // namespace artflow

#include <doctest.h>

#include "artflow/policy.hpp"
#include "artflow/procgen.hpp"

#include <cmath>

using namespace artflow;

namespace {

const char* kDrawerScene = R"(root base
link base box 0.3 0.3 0.3
link drawer box 0.2 0.2 0.1
joint slide prismatic base drawer origin 0.15 0 0 0 0 0 1 axis 1 0 0 limits 0 0.25
)";

PointCloud flat_grid(int nx, int ny, double spacing) {
  PointCloud c;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      c.points.emplace_back(spacing * i, spacing * j, 0.0);
  return c;
}

ObservationMode full_obs(std::uint64_t seed, const Vec3& sensor, const Vec3& center,
                         int samples = 2048) {
  ObservationMode obs;
  obs.kind = ObservationMode::Kind::Full;
  obs.sample_count = samples;
  obs.seed = seed;
  obs.camera = make_lookat_camera(sensor, center);
  return obs;
}

Vec3 object_center(const ArticulatedObject& obj) {
  TriMesh whole;
  const auto poses = forward_kinematics(obj, obj.closed_state());
  for (std::size_t i = 0; i < obj.links.size(); ++i)
    append(whole, transformed(obj.links[i].mesh, poses[i]));
  Vec3 lo, hi;
  whole.bounds(lo, hi);
  return (lo + hi) / 2.0;
}

}  // namespace

TEST_CASE("estimate_flow delegates per estimator kind") {
  const auto obj = parse_scene(kDrawerScene);
  const auto state = obj.closed_state();
  const auto cloud = sample_surface(obj, state, 600, 31);
  const Vec3 sensor(2, 0, 0);

  SUBCASE("oracle equals the closed-form ground truth") {
    FlowEstimator est;
    est.kind = EstimatorKind::OracleGT;
    const auto flow = estimate_flow(est, obj, state, cloud, "slide", sensor);
    const auto truth = gt_flow(obj, state, cloud, "slide");
    for (std::size_t i = 0; i < flow.size(); ++i)
      CHECK((flow.vectors[i] - truth.vectors[i]).norm() == 0.0);
  }

  SUBCASE("unperturbed screw estimator equals the oracle") {
    FlowEstimator est;
    est.kind = EstimatorKind::ScrewParameters;
    est.perturbation = {0.0, 0.0, 12345};
    const auto flow = estimate_flow(est, obj, state, cloud, "slide", sensor);
    const auto truth = gt_flow(obj, state, cloud, "slide");
    for (std::size_t i = 0; i < flow.size(); ++i)
      CHECK((flow.vectors[i] - truth.vectors[i]).norm() < 1e-12);
  }

  SUBCASE("perturbed screw direction tilts the prismatic flow by the set angle") {
    FlowEstimator est;
    est.kind = EstimatorKind::ScrewParameters;
    est.perturbation = {20.0 * M_PI / 180.0, 0.0, 7};
    const auto flow = estimate_flow(est, obj, state, cloud, "slide", sensor);
    const auto truth = gt_flow(obj, state, cloud, "slide");
    for (std::size_t i = 0; i < flow.size(); ++i) {
      if (truth.vectors[i].norm() < 0.5) continue;
      const double c = flow.vectors[i].normalized().dot(truth.vectors[i].normalized());
      CHECK(std::acos(std::clamp(c, -1.0, 1.0)) ==
            doctest::Approx(20.0 * M_PI / 180.0).epsilon(1e-9));
    }
  }

  SUBCASE("normal-direction flow is the aligned surface normal on the child") {
    FlowEstimator est;
    est.kind = EstimatorKind::NormalDirection;
    const auto flow = estimate_flow(est, obj, state, cloud, "slide", sensor);
    const int child = cloud.label_of("drawer");
    for (std::size_t i = 0; i < flow.size(); ++i) {
      if (cloud.link_labels[i] != child) {
        CHECK(flow.vectors[i].norm() == 0.0);
      } else if (flow.vectors[i].norm() > 0.0) {
        CHECK(flow.vectors[i].norm() == doctest::Approx(1.0));
        // Aligned toward the sensor side.
        CHECK(flow.vectors[i].dot(sensor - cloud.points[i]) > 0.0);
      }
    }
  }

  SUBCASE("empty observation throws") {
    FlowEstimator est;
    CHECK_THROWS_AS(estimate_flow(est, obj, state, PointCloud{}, "slide", sensor),
                    std::runtime_error);
  }
}

TEST_CASE("select_contact matches an exhaustive filter-then-argmax oracle") {
  auto cloud = flat_grid(30, 30, 0.01);  // 0.29 x 0.29 plate
  FlowField flow;
  flow.vectors.assign(cloud.size(), Vec3::Zero());
  // Flow magnitude grows along +x so the unconstrained argmax sits on the
  // boundary; constraints must push the choice inward.
  for (std::size_t i = 0; i < cloud.size(); ++i)
    flow.vectors[i] = Vec3(0, 0, 0.1 + cloud.points[i].x());

  GraspConstraints constraints;  // clearance 0.02, curvature 500
  const auto edges = detect_edges(cloud, constraints.neighbor_k, constraints.edge_angle_gap);
  const auto curvature = estimate_gaussian_curvature(cloud, constraints.neighbor_k);
  const auto got = select_contact(cloud, flow, constraints, edges, curvature);
  REQUIRE(got.has_value());

  // Independent reconstruction: filter by the published rule, then argmax.
  int best = -1;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (edges[i] || !(curvature[i] <= constraints.curvature_max)) continue;
    bool clear = true;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      const bool violating = edges[j] || !(curvature[j] <= constraints.curvature_max);
      if (violating &&
          (cloud.points[i] - cloud.points[j]).norm() <= constraints.edge_clearance) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    if (flow.vectors[i].norm() > best_mag) {
      best_mag = flow.vectors[i].norm();
      best = static_cast<int>(i);
    }
  }
  CHECK(got->index == best);
  CHECK((got->position - cloud.points[static_cast<std::size_t>(best)]).norm() == 0.0);
  // The winner is off the boundary: edge points plus the clearance band are out.
  CHECK(cloud.points[static_cast<std::size_t>(got->index)].x() < 0.29 - 1e-9);
}

TEST_CASE("select_contact returns nullopt when everything violates") {
  auto cloud = flat_grid(10, 3, 0.01);  // narrow strip: all points are edges
  FlowField flow;
  flow.vectors.assign(cloud.size(), Vec3(0, 0, 1));
  GraspConstraints constraints;
  constraints.neighbor_k = 8;
  const auto edges = detect_edges(cloud, constraints.neighbor_k, constraints.edge_angle_gap);
  const auto curvature = estimate_gaussian_curvature(cloud, constraints.neighbor_k);
  // The strip is 0.02 wide: every non-edge point still sits within the
  // 0.02 clearance of a boundary point, so nothing is feasible.
  CHECK(!select_contact(cloud, flow, constraints, edges, curvature).has_value());
}

TEST_CASE("select_contact rejects mismatched input lengths") {
  auto cloud = flat_grid(5, 5, 0.01);
  FlowField flow;
  flow.vectors.assign(cloud.size(), Vec3::Zero());
  CHECK_THROWS_AS(select_contact(cloud, flow, GraspConstraints{}, {}, {}), std::runtime_error);
}

TEST_CASE("select_direction") {
  PointCloud cloud;
  cloud.points = {Vec3(0, 0, 0), Vec3(0.03, 0, 0), Vec3(0.2, 0, 0)};
  FlowField flow;
  flow.vectors = {Vec3(0.2, 0, 0), Vec3(0, 0.9, 0), Vec3(0, 0, 5.0)};

  SUBCASE("picks the max-magnitude flow within the radius, normalized") {
    const auto dir = select_direction(cloud, flow, Vec3::Zero(), 0.05);
    REQUIRE(dir.has_value());
    CHECK((*dir - Vec3(0, 1, 0)).norm() < 1e-15);  // index 2 is out of range
  }

  SUBCASE("nullopt when nothing is in range") {
    CHECK(!select_direction(cloud, flow, Vec3(10, 0, 0), 0.05).has_value());
  }

  SUBCASE("nullopt when in-range flow is negligible") {
    FlowField tiny;
    tiny.vectors = {Vec3(1e-9, 0, 0), Vec3(0, 1e-8, 0), Vec3(0, 0, 5.0)};
    CHECK(!select_direction(cloud, tiny, Vec3::Zero(), 0.05).has_value());
  }
}

TEST_CASE("rollout: oracle opens a procedural drawer from closed") {
  ProcSpec spec;
  spec.kind = ProcKind::Drawer;
  spec.seed = 5;
  const auto obj = generate(spec);
  FlowEstimator est;
  est.kind = EstimatorKind::OracleGT;
  const auto obs = full_obs(11, object_center(obj) + Vec3(1.0, 0.3, 0.4), object_center(obj));
  const auto result = rollout(obj, obj.closed_state(), "slide", est, obs, RolloutConfig{});
  CHECK(result.success);
  CHECK(result.termination == Termination::Success);
  CHECK(result.e_goal <= 0.1);
  CHECK(result.steps_used <= 45);
  CHECK(result.states.size() == static_cast<std::size_t>(result.steps_used) + 1);
  // Joint value is monotically non-decreasing under the oracle.
  for (std::size_t i = 1; i < result.states.size(); ++i)
    CHECK(result.states[i].at("slide") >= result.states[i - 1].at("slide") - 1e-12);
}

TEST_CASE("rollout: prismatic success within the ideal step budget") {
  const auto obj = parse_scene(kDrawerScene);  // range 0.25, step 0.01
  FlowEstimator est;
  est.kind = EstimatorKind::OracleGT;
  const auto obs = full_obs(3, Vec3(2, 0.5, 0.5), Vec3(0.2, 0, 0));
  const auto result = rollout(obj, obj.closed_state(), "slide", est, obs, RolloutConfig{});
  CHECK(result.success);
  // 90% of range / step size, plus slack for the grasp not being axis-perfect.
  CHECK(result.steps_used <= static_cast<int>(std::ceil(0.9 * 0.25 / 0.01)) + 5);
}

TEST_CASE("rollout: oracle opens a door and a cabinet joint with camera observation") {
  ProcSpec spec;
  spec.kind = ProcKind::Door;
  spec.seed = 2;
  const auto obj = generate(spec);
  const Vec3 center = object_center(obj);
  ObservationMode obs;
  obs.kind = ObservationMode::Kind::Camera;
  obs.camera = make_lookat_camera(center + Vec3(1.2, 0.4, 0.7), center);
  FlowEstimator est;
  est.kind = EstimatorKind::OracleGT;
  const auto result = rollout(obj, obj.closed_state(), "hinge", est, obs, RolloutConfig{});
  CHECK(result.success);
  CHECK(result.e_goal <= 0.1);
}

TEST_CASE("rollout: fully hidden child link degenerates on the first step") {
  // The movable slab is entirely inside the base, so the camera never sees a
  // child point: the estimated flow near the contact is all zero.
  ArticulatedObject obj;
  obj.root_link = "shell";
  LinkSpec shell;
  shell.id = "shell";
  shell.mesh = make_box_mesh(Vec3(0.5, 0.5, 0.5));
  obj.links.push_back(std::move(shell));
  LinkSpec inner;
  inner.id = "inner";
  inner.mesh = make_box_mesh(Vec3(0.1, 0.1, 0.1));
  obj.links.push_back(std::move(inner));
  JointSpec j;
  j.id = "slide";
  j.kind = JointKind::Prismatic;
  j.parent_link = "shell";
  j.child_link = "inner";
  j.axis = Vec3::UnitX();
  j.q_max = 0.05;
  obj.joints.push_back(j);
  obj.validate();

  ObservationMode obs;
  obs.kind = ObservationMode::Kind::Camera;
  obs.camera = make_lookat_camera(Vec3(1.5, 0.8, 0.9), Vec3::Zero());
  FlowEstimator est;
  est.kind = EstimatorKind::OracleGT;
  const auto result = rollout(obj, obj.closed_state(), "slide", est, obs, RolloutConfig{});
  CHECK(!result.success);
  CHECK(result.termination == Termination::EstimatorDegenerate);
  CHECK(result.steps_used == 0);
}

TEST_CASE("rollout: normal-direction baseline fails on the quarter-sphere lid") {
  ProcSpec spec;
  spec.kind = ProcKind::Lid;
  spec.seed = 3;
  const auto obj = generate(spec);
  const Vec3 center = object_center(obj);
  const auto obs = full_obs(21, center + Vec3(0.8, 0.3, 0.6), center);
  FlowEstimator est;
  est.kind = EstimatorKind::NormalDirection;
  const auto result = rollout(obj, obj.closed_state(), "rim", est, obs, RolloutConfig{});
  // Shell normals are radial, exactly orthogonal to the hinge motion: the very
  // first commanded step deviates ~90 degrees and the suction cup lets go.
  CHECK(!result.success);
  CHECK(result.e_goal > 0.1);
}

TEST_CASE("rollout: normal-direction baseline opens a flat drawer") {
  ProcSpec spec;
  spec.kind = ProcKind::Drawer;
  spec.seed = 9;
  const auto obj = generate(spec);
  const Vec3 center = object_center(obj);
  // Sensor in front of the drawer face so aligned normals point along +x = v.
  const auto obs = full_obs(33, center + Vec3(1.2, 0.2, 0.3), center);
  FlowEstimator est;
  est.kind = EstimatorKind::NormalDirection;
  const auto result = rollout(obj, obj.closed_state(), "slide", est, obs, RolloutConfig{});
  CHECK(result.success);
}

TEST_CASE("rollout: zero screw perturbation reproduces the oracle trajectory") {
  ProcSpec spec;
  spec.kind = ProcKind::Door;
  spec.seed = 6;
  const auto obj = generate(spec);
  const Vec3 center = object_center(obj);
  const auto obs = full_obs(17, center + Vec3(1.0, -0.3, 0.5), center);

  FlowEstimator oracle;
  oracle.kind = EstimatorKind::OracleGT;
  FlowEstimator screw;
  screw.kind = EstimatorKind::ScrewParameters;
  screw.perturbation = {0.0, 0.0, 424242};

  const auto a = rollout(obj, obj.closed_state(), "hinge", oracle, obs, RolloutConfig{});
  const auto b = rollout(obj, obj.closed_state(), "hinge", screw, obs, RolloutConfig{});
  CHECK(a.success == b.success);
  CHECK(a.steps_used == b.steps_used);
  CHECK(a.termination == b.termination);
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i)
    CHECK(a.states[i].at("hinge") == doctest::Approx(b.states[i].at("hinge")).epsilon(1e-9));
}

TEST_CASE("property: select_contact index is preserved under rigid transforms") {
  const auto obj = parse_scene(kDrawerScene);
  const auto state = obj.closed_state();
  auto cloud = sample_surface(obj, state, 800, 41);
  const auto flow = gt_flow(obj, state, cloud, "slide");
  GraspConstraints constraints;
  const auto edges = detect_edges(cloud, constraints.neighbor_k, constraints.edge_angle_gap);
  const auto curvature = estimate_gaussian_curvature(cloud, constraints.neighbor_k);
  const auto base = select_contact(cloud, flow, constraints, edges, curvature);
  REQUIRE(base.has_value());

  const Pose rigid = Pose::from(Quat(Eigen::AngleAxisd(1.1, Vec3(2, -1, 3).normalized())),
                                Vec3(0.7, 0.4, -0.9));
  PointCloud moved = cloud;
  for (auto& p : moved.points) p = rigid * p;
  FlowField moved_flow = flow;
  for (auto& v : moved_flow.vectors) v = rigid.rotation * v;
  const auto moved_edges = detect_edges(moved, constraints.neighbor_k, constraints.edge_angle_gap);
  const auto moved_curv = estimate_gaussian_curvature(moved, constraints.neighbor_k);
  const auto got = select_contact(moved, moved_flow, constraints, moved_edges, moved_curv);
  REQUIRE(got.has_value());
  CHECK(got->index == base->index);
}

TEST_CASE("property: loosening the grasp constraints never loses feasibility") {
  const auto obj = parse_scene(kDrawerScene);
  const auto state = obj.closed_state();
  auto cloud = sample_surface(obj, state, 800, 43);
  const auto flow = gt_flow(obj, state, cloud, "slide");
  GraspConstraints strict;
  const auto edges = detect_edges(cloud, strict.neighbor_k, strict.edge_angle_gap);
  const auto curvature = estimate_gaussian_curvature(cloud, strict.neighbor_k);
  const auto strict_pick = select_contact(cloud, flow, strict, edges, curvature);

  GraspConstraints loose = strict;
  loose.edge_clearance = 0.0;
  loose.curvature_max = 1e9;
  const auto loose_pick = select_contact(cloud, flow, loose, edges, curvature);
  REQUIRE(loose_pick.has_value());
  if (strict_pick) {
    CHECK(loose_pick->flow.norm() >= strict_pick->flow.norm() - 1e-15);
  }
}

TEST_CASE("estimator and termination names round-trip") {
  for (auto kind : {EstimatorKind::OracleGT, EstimatorKind::NormalDirection,
                    EstimatorKind::ScrewParameters}) {
    CHECK(estimator_from_string(to_string(kind)) == kind);
  }
  CHECK(!estimator_from_string("bogus").has_value());
  CHECK(std::string(to_string(Termination::ContactLost)) == "ContactLost");
}

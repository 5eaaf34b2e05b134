#include <doctest.h>

#include "artflow/procgen.hpp"

#include <cmath>
#include <set>

using namespace artflow;

namespace {

/// Signed volume integral over the mesh; positive for outward winding on a
/// closed surface, and a consistency check across triangles.
double signed_volume(const TriMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    v += a.dot(b.cross(c)) / 6.0;
  }
  return v;
}

}  // namespace

TEST_CASE("generate is deterministic per seed and kind") {
  for (auto kind : {ProcKind::Drawer, ProcKind::Door, ProcKind::Lid, ProcKind::Cabinet2Joint}) {
    ProcSpec spec;
    spec.kind = kind;
    spec.seed = 123;
    const auto a = generate(spec);
    const auto b = generate(spec);
    REQUIRE(a.links.size() == b.links.size());
    for (std::size_t i = 0; i < a.links.size(); ++i) {
      REQUIRE(a.links[i].mesh.vertices.size() == b.links[i].mesh.vertices.size());
      for (std::size_t v = 0; v < a.links[i].mesh.vertices.size(); ++v)
        CHECK(a.links[i].mesh.vertices[v] == b.links[i].mesh.vertices[v]);
    }
    REQUIRE(a.joints.size() == b.joints.size());
    for (std::size_t i = 0; i < a.joints.size(); ++i) {
      CHECK(a.joints[i].q_max == b.joints[i].q_max);
      CHECK(a.joints[i].axis == b.joints[i].axis);
    }
    // A different seed changes the geometry.
    spec.seed = 124;
    const auto c = generate(spec);
    bool differs = false;
    for (std::size_t i = 0; i < a.links.size() && !differs; ++i)
      differs = a.links[i].mesh.vertices != c.links[i].mesh.vertices;
    CHECK(differs);
  }
}

TEST_CASE("generated objects satisfy the model invariants") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    for (auto kind : {ProcKind::Drawer, ProcKind::Door, ProcKind::Lid, ProcKind::Cabinet2Joint}) {
      ProcSpec spec;
      spec.kind = kind;
      spec.seed = seed;
      const auto obj = generate(spec);
      CHECK(!obj.links.empty());
      CHECK(!obj.joints.empty());
      for (const auto& joint : obj.joints) {
        CHECK(std::abs(joint.axis.norm() - 1.0) < 1e-12);
        // Usable articulation range for the policy step budget.
        CHECK(joint.range() >= 0.1);
        CHECK(joint.q_min == 0.0);
      }
      for (const auto& link : obj.links) {
        CHECK(link.mesh.total_area() > 0.0);
        // Desk scale: everything fits in a unit box.
        Vec3 lo, hi;
        link.mesh.bounds(lo, hi);
        CHECK((hi - lo).norm() < 1.5);
      }
      // FK at both limits stays finite and well formed.
      JointState open;
      for (const auto& joint : obj.joints) open.set(joint.id, joint.q_max);
      for (const auto& pose : forward_kinematics(obj, open))
        CHECK(std::isfinite(pose.translation.norm()));
    }
  }
}

TEST_CASE("closed box links have outward-consistent winding") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (auto kind : {ProcKind::Drawer, ProcKind::Door, ProcKind::Cabinet2Joint}) {
      ProcSpec spec;
      spec.kind = kind;
      spec.seed = seed;
      const auto obj = generate(spec);
      for (const auto& link : obj.links) {
        if (link.mesh.triangles.size() != 12) continue;  // closed boxes only
        CHECK(signed_volume(link.mesh) > 0.0);
      }
    }
  }
}

TEST_CASE("lid shell is centered on its hinge axis") {
  // Every shell vertex is equidistant from the joint origin, so surface
  // normals are radial and exactly orthogonal to the hinge motion.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ProcSpec spec;
    spec.kind = ProcKind::Lid;
    spec.seed = seed;
    const auto obj = generate(spec);
    const auto& lid = obj.link("lid").mesh;
    const auto& joint = obj.joint("rim");
    REQUIRE(!lid.vertices.empty());
    const double r0 = (lid.vertices[0] - joint.origin.translation).norm();
    for (const auto& v : lid.vertices)
      CHECK((v - joint.origin.translation).norm() == doctest::Approx(r0).epsilon(1e-9));
  }
}

TEST_CASE("drawer front is a flat plate normal to the slide axis") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ProcSpec spec;
    spec.kind = ProcKind::Drawer;
    spec.seed = seed;
    const auto obj = generate(spec);
    const auto& plate = obj.link("drawer").mesh;
    const auto& joint = obj.joint("slide");
    CHECK(joint.kind == JointKind::Prismatic);
    const double x0 = plate.vertices[0].x();
    for (const auto& v : plate.vertices) CHECK(v.x() == x0);
    CHECK((joint.axis - Vec3::UnitX()).norm() == 0.0);
  }
}

TEST_CASE("make_acceptance_suite composition") {
  const auto suite = make_acceptance_suite(2024);
  CHECK(suite.size() == 20);
  std::map<std::string, int> per_category;
  std::set<std::string> ids;
  for (const auto& so : suite) {
    ++per_category[so.category];
    ids.insert(so.id);
  }
  CHECK(ids.size() == 20);  // unique ids
  CHECK(per_category["drawer"] == 6);
  CHECK(per_category["door"] == 6);
  CHECK(per_category["lid"] == 4);
  CHECK(per_category["cabinet"] == 4);
  // Deterministic.
  const auto again = make_acceptance_suite(2024);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    CHECK(suite[i].id == again[i].id);
    CHECK(suite[i].object.links[0].mesh.vertices == again[i].object.links[0].mesh.vertices);
  }
}

TEST_CASE("random_object covers all kinds and random_state respects limits") {
  std::set<std::size_t> link_counts;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto obj = random_object(seed);
    link_counts.insert(obj.links.size());
    for (int i = 0; i < 5; ++i) {
      const auto state = random_state(obj, hash_combine(seed, static_cast<std::uint64_t>(i)));
      for (const auto& joint : obj.joints) {
        CHECK(state.at(joint.id) >= joint.q_min);
        CHECK(state.at(joint.id) <= joint.q_max);
      }
    }
  }
  CHECK(link_counts.count(3) == 1);  // cabinets showed up
  CHECK(link_counts.count(2) == 1);  // two-link kinds showed up
}

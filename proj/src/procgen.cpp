#include "artflow/procgen.hpp"

#include <cmath>

namespace artflow {

const char* to_string(ProcKind kind) {
  switch (kind) {
    case ProcKind::Drawer: return "drawer";
    case ProcKind::Door: return "door";
    case ProcKind::Lid: return "lid";
    case ProcKind::Cabinet2Joint: return "cabinet";
  }
  return "?";
}

std::optional<ProcKind> proc_kind_from_string(const std::string& name) {
  if (name == "drawer") return ProcKind::Drawer;
  if (name == "door") return ProcKind::Door;
  if (name == "lid") return ProcKind::Lid;
  if (name == "cabinet") return ProcKind::Cabinet2Joint;
  return std::nullopt;
}

namespace {

LinkSpec box_link(const std::string& id, const Vec3& center, const Vec3& extents) {
  LinkSpec link;
  link.id = id;
  link.mesh = make_box_mesh(center, extents);
  if (center.isZero(0.0)) link.box_extents = extents;
  return link;
}

JointSpec make_joint(const std::string& id, JointKind kind, const std::string& parent,
                     const std::string& child, const Vec3& origin, const Vec3& axis, double lo,
                     double hi) {
  JointSpec j;
  j.id = id;
  j.kind = kind;
  j.parent_link = parent;
  j.child_link = child;
  j.origin = Pose::translate(origin);
  j.axis = axis;
  j.q_min = lo;
  j.q_max = hi;
  return j;
}

ArticulatedObject make_drawer(Rng& rng, const ProcSpec& spec) {
  const double w = spec.drawer_width.sample(rng);
  const double h = spec.drawer_height.sample(rng);
  const double t = spec.drawer_thickness.sample(rng);
  const double range = spec.drawer_range.sample(rng);
  const double depth = rng.uniform(0.25, 0.4);
  // Base silhouette strictly inside the front plate so plate-edge
  // neighborhoods only ever mix parallel surfaces.
  const double bw = w - 0.04, bh = h - 0.04;

  ArticulatedObject obj;
  obj.root_link = "base";
  obj.links.push_back(box_link("base", Vec3(-depth / 2, 0, bh / 2), Vec3(depth, bw, bh)));
  LinkSpec slider;
  slider.id = "drawer";
  // Flat front plate: every surface normal equals the slide axis, so
  // normal-based direction estimates are exact on this family.
  slider.mesh.vertices = {Vec3(t, -w / 2, -h / 2), Vec3(t, w / 2, -h / 2),
                          Vec3(t, w / 2, h / 2), Vec3(t, -w / 2, h / 2)};
  slider.mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  obj.links.push_back(std::move(slider));
  obj.joints.push_back(make_joint("slide", JointKind::Prismatic, "base", "drawer",
                                  Vec3(0, 0, bh / 2), Vec3::UnitX(), 0.0, range));
  obj.validate();
  return obj;
}

ArticulatedObject make_door(Rng& rng, const ProcSpec& spec) {
  const double w = spec.door_width.sample(rng);
  const double h = spec.door_height.sample(rng);
  const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
  // Panel sits on the hinge side that makes opening swing outward (+x), so
  // the moving part never sweeps through the frame.
  const double side = -sign;

  ArticulatedObject obj;
  obj.root_link = "frame";
  obj.links.push_back(
      box_link("frame", Vec3(0, -side * 0.045, h / 2 + 0.05), Vec3(0.06, 0.06, h + 0.1)));
  LinkSpec panel;
  panel.id = "panel";
  panel.mesh = make_box_mesh(Vec3(0, side * (w / 2 + 0.01), h / 2), Vec3(0.02, w, h));
  obj.links.push_back(std::move(panel));
  // Hinge coincident with the panel's inner vertical edge; sign picks the
  // swing direction.
  obj.joints.push_back(make_joint("hinge", JointKind::Revolute, "frame", "panel",
                                  Vec3(0, 0, 0.05), Vec3(0, 0, sign), 0.0, M_PI / 2));
  obj.validate();
  return obj;
}

ArticulatedObject make_lid(Rng& rng, const ProcSpec& spec) {
  const double radius = spec.lid_radius.sample(rng);
  const double pot_depth = rng.uniform(0.1, 0.2);
  const double pw = 2.4 * radius;

  ArticulatedObject obj;
  obj.root_link = "pot";
  obj.links.push_back(box_link("pot", Vec3(0, 0, -pot_depth / 2), Vec3(pw, pw, pot_depth)));
  LinkSpec lid;
  lid.id = "lid";
  // Quarter-sphere shell over x >= 0, z >= 0, centered on the hinge axis so
  // surface normals are exactly orthogonal to the articulation motion.
  lid.mesh = make_sphere_patch(Vec3::Zero(), radius, M_PI / 2, -M_PI / 2, M_PI / 2, 12, 16);
  obj.links.push_back(std::move(lid));
  obj.joints.push_back(make_joint("rim", JointKind::Revolute, "pot", "lid", Vec3::Zero(),
                                  Vec3(0, -1, 0), 0.0, M_PI / 2));
  obj.validate();
  return obj;
}

ArticulatedObject make_cabinet(Rng& rng, const ProcSpec& spec) {
  const double dw = rng.uniform(0.18, 0.24);  // door width
  const double dh = 0.24;
  const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
  const double slide_range = rng.uniform(0.12, 0.2);
  const double bw = dw + 0.12;

  ArticulatedObject obj;
  obj.root_link = "base";
  obj.links.push_back(box_link("base", Vec3(-0.175, 0, 0.31), Vec3(0.35, bw, 0.62)));
  LinkSpec door;
  door.id = "door";
  door.mesh = make_box_mesh(Vec3(0, -sign * dw / 2, dh / 2), Vec3(0.02, dw, dh));
  obj.links.push_back(std::move(door));
  LinkSpec slab;
  slab.id = "drawer";
  slab.mesh = make_box_mesh(Vec3(0.015, 0, 0), Vec3(0.03, 0.24, 0.2));
  obj.links.push_back(std::move(slab));
  // Hinge side chosen so the door opens outward (+x), away from the base.
  obj.joints.push_back(make_joint("hinge", JointKind::Revolute, "base", "door",
                                  Vec3(0.01, sign * dw / 2, 0.34), Vec3(0, 0, sign), 0.0,
                                  M_PI / 2));
  obj.joints.push_back(make_joint("slide", JointKind::Prismatic, "base", "drawer",
                                  Vec3(0.01, 0, 0.15), Vec3::UnitX(), 0.0, slide_range));
  obj.validate();
  return obj;
}

}  // namespace

ArticulatedObject generate(const ProcSpec& spec) {
  Rng rng(hash_combine(spec.seed, std::string(to_string(spec.kind))));
  switch (spec.kind) {
    case ProcKind::Drawer: return make_drawer(rng, spec);
    case ProcKind::Door: return make_door(rng, spec);
    case ProcKind::Lid: return make_lid(rng, spec);
    case ProcKind::Cabinet2Joint: return make_cabinet(rng, spec);
  }
  throw std::runtime_error("unknown procedural kind");
}

std::vector<SuiteObject> make_acceptance_suite(std::uint64_t seed) {
  std::vector<SuiteObject> suite;
  auto add = [&](ProcKind kind, int count) {
    for (int i = 0; i < count; ++i) {
      ProcSpec spec;
      spec.kind = kind;
      spec.seed = hash_combine(hash_combine(seed, std::string(to_string(kind))),
                               static_cast<std::uint64_t>(i));
      SuiteObject obj;
      obj.id = std::string(to_string(kind)) + "_" + std::to_string(i);
      obj.category = to_string(kind);
      obj.object = generate(spec);
      suite.push_back(std::move(obj));
    }
  };
  add(ProcKind::Drawer, 6);
  add(ProcKind::Door, 6);
  add(ProcKind::Lid, 4);
  add(ProcKind::Cabinet2Joint, 4);
  return suite;
}

ArticulatedObject random_object(std::uint64_t seed) {
  ProcSpec spec;
  spec.seed = seed;
  const ProcKind kinds[4] = {ProcKind::Drawer, ProcKind::Door, ProcKind::Lid,
                             ProcKind::Cabinet2Joint};
  spec.kind = kinds[hash_combine(seed, "kind") % 4];
  return generate(spec);
}

JointState random_state(const ArticulatedObject& obj, std::uint64_t seed) {
  Rng rng(seed);
  JointState state;
  for (const auto& joint : obj.joints)
    state.values[joint.id] = rng.uniform(joint.q_min, joint.q_max);
  return state;
}

}  // namespace artflow

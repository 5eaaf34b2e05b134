#pragma once

#include "artflow/core.hpp"
#include "artflow/mesh.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace artflow {

enum class JointKind { Revolute, Prismatic };

const char* to_string(JointKind kind);

/// 1-DoF joint between two links. `origin` is the joint frame expressed in
/// the parent-link frame; `axis` is a unit vector in the joint frame.
struct JointSpec {
  std::string id;
  JointKind kind = JointKind::Revolute;
  std::string parent_link;
  std::string child_link;
  Pose origin;
  Vec3 axis{0.0, 0.0, 1.0};
  double q_min = 0.0;
  double q_max = 0.0;

  double range() const { return q_max - q_min; }
};

struct LinkSpec {
  std::string id;
  TriMesh mesh;                       // always populated (boxes are meshed)
  std::optional<Vec3> box_extents;    // set when the source geometry was a box
  double mass = 1.0;
};

/// Joint configuration, joint-id -> scalar q. Ordered map keeps iteration
/// deterministic.
struct JointState {
  std::map<std::string, double> values;

  double at(const std::string& joint_id) const;
  void set(const std::string& joint_id, double q) { values[joint_id] = q; }
};

/// World-frame screw axis of a joint at a given configuration.
struct ScrewAxis {
  JointKind kind = JointKind::Revolute;
  Vec3 direction{0.0, 0.0, 1.0};  // unit
  Vec3 origin{0.0, 0.0, 0.0};     // point on the axis line (unused for prismatic)
};

/// Kinematic tree of links connected by 1-DoF joints. The root link is pinned
/// to the world frame. Immutable after validate(); all queries are by index
/// or id.
class ArticulatedObject {
 public:
  std::vector<LinkSpec> links;
  std::vector<JointSpec> joints;
  std::string root_link;

  /// Checks all structural invariants and builds the index tables. Throws
  /// std::runtime_error on violation. Must be called after construction.
  void validate();

  int link_index(const std::string& id) const;
  int joint_index(const std::string& id) const;
  const LinkSpec& link(const std::string& id) const { return links[static_cast<std::size_t>(link_index(id))]; }
  const JointSpec& joint(const std::string& id) const { return joints[static_cast<std::size_t>(joint_index(id))]; }

  /// Joints in parent-before-child order.
  const std::vector<int>& topological_joints() const { return topo_joints_; }

  /// Index of the joint whose child is this link, or -1 for the root.
  int parent_joint_of_link(int link_idx) const { return parent_joint_[static_cast<std::size_t>(link_idx)]; }

  /// Joint ids of all movable joints, in declaration order.
  std::vector<std::string> joint_ids() const;

  JointState closed_state() const;  // every joint at q_min
  void check_state(const JointState& state) const;

 private:
  std::map<std::string, int> link_by_id_;
  std::map<std::string, int> joint_by_id_;
  std::vector<int> topo_joints_;
  std::vector<int> parent_joint_;
};

/// Parses the native object description. Mesh references are resolved
/// relative to `mesh_dir`.
ArticulatedObject parse_scene(const std::string& text, const std::string& mesh_dir = "");

/// Serializes to the native format. Mesh-backed links are written as
/// `<link>.mesh` files under `mesh_dir` (must be writable when needed).
std::string serialize_scene(const ArticulatedObject& obj, const std::string& mesh_dir = "");
void save_scene(const ArticulatedObject& obj, const std::string& dir,
                const std::string& name = "scene.txt");
ArticulatedObject load_scene(const std::string& path);

/// URDF subset importer: revolute / prismatic / continuous / fixed joints,
/// box and mesh geometry. Fixed joints are merged so the runtime model stays
/// strictly 1-DoF per joint.
ArticulatedObject import_urdf_subset(const std::string& xml_text, const std::string& mesh_dir = "");

/// World pose of every link, indexed like obj.links. Root pose is identity.
std::vector<Pose> forward_kinematics(const ArticulatedObject& obj, const JointState& state);

/// World-frame screw axis of `joint_id` at `state`, accounting for all
/// parent motion.
ScrewAxis joint_screw(const ArticulatedObject& obj, const JointState& state,
                      const std::string& joint_id);

}  // namespace artflow

#include "artflow/model.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace artflow {

namespace {

constexpr double kAxisNormTol = 1e-6;

Vec3 normalized_axis(const Vec3& axis, const std::string& where) {
  const double n = axis.norm();
  if (std::abs(n - 1.0) > kAxisNormTol) {
    if (n < kAxisNormTol) throw std::runtime_error(where + ": zero-length joint axis");
    throw std::runtime_error(where + ": non-unit joint axis (norm " + std::to_string(n) + ")");
  }
  return axis / n;
}

}  // namespace

const char* to_string(JointKind kind) {
  return kind == JointKind::Revolute ? "revolute" : "prismatic";
}

double JointState::at(const std::string& joint_id) const {
  auto it = values.find(joint_id);
  if (it == values.end()) throw std::runtime_error("joint state missing joint '" + joint_id + "'");
  return it->second;
}

void ArticulatedObject::validate() {
  link_by_id_.clear();
  joint_by_id_.clear();
  for (int i = 0; i < static_cast<int>(links.size()); ++i) {
    if (!link_by_id_.emplace(links[i].id, i).second)
      throw std::runtime_error("duplicate link id '" + links[i].id + "'");
    const auto& mesh = links[i].mesh;
    if (mesh.triangles.empty())
      throw std::runtime_error("link '" + links[i].id + "' has no geometry");
    for (const auto& t : mesh.triangles)
      for (int v : t)
        if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
          throw std::runtime_error("link '" + links[i].id + "' has invalid triangle indices");
    if (links[i].box_extents && links[i].box_extents->minCoeff() <= 0.0)
      throw std::runtime_error("link '" + links[i].id + "' has non-positive box extents");
  }
  if (!link_by_id_.count(root_link))
    throw std::runtime_error("root link '" + root_link + "' does not exist");

  parent_joint_.assign(links.size(), -1);
  for (int j = 0; j < static_cast<int>(joints.size()); ++j) {
    auto& joint = joints[j];
    if (!joint_by_id_.emplace(joint.id, j).second)
      throw std::runtime_error("duplicate joint id '" + joint.id + "'");
    if (joint.parent_link == joint.child_link)
      throw std::runtime_error("self-loop joint '" + joint.id + "'");
    if (!link_by_id_.count(joint.parent_link))
      throw std::runtime_error("joint '" + joint.id + "' references unknown link '" +
                               joint.parent_link + "'");
    if (!link_by_id_.count(joint.child_link))
      throw std::runtime_error("joint '" + joint.id + "' references unknown link '" +
                               joint.child_link + "'");
    if (!(joint.q_min < joint.q_max))
      throw std::runtime_error("joint '" + joint.id + "' has empty limit range");
    joint.axis = normalized_axis(joint.axis, "joint '" + joint.id + "'");
    joint.origin.rotation.normalize();
    const int child = link_by_id_.at(joint.child_link);
    if (parent_joint_[child] != -1)
      throw std::runtime_error("link '" + joint.child_link + "' has multiple parent joints");
    if (joint.child_link == root_link)
      throw std::runtime_error("root link cannot be a joint child");
    parent_joint_[child] = j;
  }
  for (int i = 0; i < static_cast<int>(links.size()); ++i) {
    if (links[i].id != root_link && parent_joint_[i] == -1)
      throw std::runtime_error("link '" + links[i].id + "' is not connected to the tree");
  }

  // Parent-before-child order; also detects cycles (non-tree structures).
  topo_joints_.clear();
  std::set<std::string> placed{root_link};
  std::vector<int> pending(joints.size());
  for (int j = 0; j < static_cast<int>(joints.size()); ++j) pending[j] = j;
  while (!pending.empty()) {
    bool progressed = false;
    std::vector<int> next;
    for (int j : pending) {
      if (placed.count(joints[j].parent_link)) {
        topo_joints_.push_back(j);
        placed.insert(joints[j].child_link);
        progressed = true;
      } else {
        next.push_back(j);
      }
    }
    if (!progressed) throw std::runtime_error("kinematic cycle detected");
    pending = std::move(next);
  }
}

int ArticulatedObject::link_index(const std::string& id) const {
  auto it = link_by_id_.find(id);
  if (it == link_by_id_.end()) throw std::runtime_error("unknown link '" + id + "'");
  return it->second;
}

int ArticulatedObject::joint_index(const std::string& id) const {
  auto it = joint_by_id_.find(id);
  if (it == joint_by_id_.end()) throw std::runtime_error("unknown joint '" + id + "'");
  return it->second;
}

std::vector<std::string> ArticulatedObject::joint_ids() const {
  std::vector<std::string> out;
  out.reserve(joints.size());
  for (const auto& j : joints) out.push_back(j.id);
  return out;
}

JointState ArticulatedObject::closed_state() const {
  JointState s;
  for (const auto& j : joints) s.values[j.id] = j.q_min;
  return s;
}

void ArticulatedObject::check_state(const JointState& state) const {
  if (state.values.size() != joints.size())
    throw std::runtime_error("joint state has wrong number of entries");
  for (const auto& j : joints) {
    const double q = state.at(j.id);
    if (q < j.q_min - 1e-12 || q > j.q_max + 1e-12)
      throw std::runtime_error("joint '" + j.id + "' out of limits");
  }
}

std::vector<Pose> forward_kinematics(const ArticulatedObject& obj, const JointState& state) {
  std::vector<Pose> poses(obj.links.size());
  poses[static_cast<std::size_t>(obj.link_index(obj.root_link))] = Pose::identity();
  for (int j : obj.topological_joints()) {
    const auto& joint = obj.joints[static_cast<std::size_t>(j)];
    const double q = state.at(joint.id);
    Pose motion;
    if (joint.kind == JointKind::Revolute) {
      motion = Pose::rotate(Quat(Eigen::AngleAxisd(q, joint.axis)));
    } else {
      motion = Pose::translate(q * joint.axis);
    }
    const Pose& parent = poses[static_cast<std::size_t>(obj.link_index(joint.parent_link))];
    poses[static_cast<std::size_t>(obj.link_index(joint.child_link))] =
        parent * joint.origin * motion;
  }
  return poses;
}

ScrewAxis joint_screw(const ArticulatedObject& obj, const JointState& state,
                      const std::string& joint_id) {
  const auto& joint = obj.joint(joint_id);
  const auto poses = forward_kinematics(obj, state);
  const Pose frame = poses[static_cast<std::size_t>(obj.link_index(joint.parent_link))] * joint.origin;
  ScrewAxis screw;
  screw.kind = joint.kind;
  screw.direction = (frame.rotation * joint.axis).normalized();
  screw.origin = frame.translation;
  return screw;
}

// ---------------------------------------------------------------------------
// Native format

ArticulatedObject parse_scene(const std::string& text, const std::string& mesh_dir) {
  ArticulatedObject obj;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_root = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "root") {
      std::string id;
      if (!(ls >> id)) throw ParseError(lineno, "root requires a link id");
      obj.root_link = id;
      have_root = true;
    } else if (tag == "link") {
      LinkSpec link;
      std::string kind;
      if (!(ls >> link.id >> kind)) throw ParseError(lineno, "malformed link record");
      if (kind == "box") {
        Vec3 e;
        if (!(ls >> e.x() >> e.y() >> e.z())) throw ParseError(lineno, "malformed box extents");
        if (e.minCoeff() <= 0.0) throw ParseError(lineno, "box extents must be positive");
        link.box_extents = e;
        link.mesh = make_box_mesh(e);
      } else if (kind == "mesh") {
        std::string path;
        if (!(ls >> path)) throw ParseError(lineno, "mesh record requires a path");
        const auto full = mesh_dir.empty() ? path : (std::filesystem::path(mesh_dir) / path).string();
        try {
          link.mesh = load_mesh_file(full);
        } catch (const std::exception& e) {
          throw ParseError(lineno, std::string("mesh load failed: ") + e.what());
        }
      } else {
        throw ParseError(lineno, "unknown link geometry '" + kind + "'");
      }
      obj.links.push_back(std::move(link));
    } else if (tag == "joint") {
      JointSpec joint;
      std::string kind, kw;
      if (!(ls >> joint.id >> kind >> joint.parent_link >> joint.child_link))
        throw ParseError(lineno, "malformed joint record");
      if (kind == "revolute") {
        joint.kind = JointKind::Revolute;
      } else if (kind == "prismatic") {
        joint.kind = JointKind::Prismatic;
      } else {
        throw ParseError(lineno, "unknown joint kind '" + kind + "'");
      }
      Vec3 t;
      double qx, qy, qz, qw;
      if (!(ls >> kw) || kw != "origin" || !(ls >> t.x() >> t.y() >> t.z() >> qx >> qy >> qz >> qw))
        throw ParseError(lineno, "malformed joint origin");
      joint.origin = Pose::from(Quat(qw, qx, qy, qz), t);
      if (!(ls >> kw) || kw != "axis" || !(ls >> joint.axis.x() >> joint.axis.y() >> joint.axis.z()))
        throw ParseError(lineno, "malformed joint axis");
      if (!(ls >> kw) || kw != "limits" || !(ls >> joint.q_min >> joint.q_max))
        throw ParseError(lineno, "malformed joint limits");
      const double n = joint.axis.norm();
      if (n < 1e-12) throw ParseError(lineno, "zero joint axis");
      if (std::abs(n - 1.0) > kAxisNormTol)
        throw ParseError(lineno, "non-unit joint axis (norm " + std::to_string(n) + ")");
      joint.axis /= n;
      obj.joints.push_back(std::move(joint));
    } else {
      throw ParseError(lineno, "unknown record '" + tag + "'");
    }
  }
  if (!have_root) throw ParseError(lineno, "missing root record");
  obj.validate();
  return obj;
}

std::string serialize_scene(const ArticulatedObject& obj, const std::string& mesh_dir) {
  std::ostringstream out;
  out.precision(17);
  out << "root " << obj.root_link << '\n';
  for (const auto& link : obj.links) {
    if (link.box_extents) {
      const Vec3& e = *link.box_extents;
      out << "link " << link.id << " box " << e.x() << ' ' << e.y() << ' ' << e.z() << '\n';
    } else {
      if (mesh_dir.empty())
        throw std::runtime_error("mesh-backed link '" + link.id + "' requires a mesh directory");
      const std::string file = link.id + ".mesh";
      save_mesh_file(link.mesh, (std::filesystem::path(mesh_dir) / file).string());
      out << "link " << link.id << " mesh " << file << '\n';
    }
  }
  for (const auto& j : obj.joints) {
    const Quat& q = j.origin.rotation;
    const Vec3& t = j.origin.translation;
    out << "joint " << j.id << ' ' << to_string(j.kind) << ' ' << j.parent_link << ' '
        << j.child_link << " origin " << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x()
        << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << " axis " << j.axis.x() << ' '
        << j.axis.y() << ' ' << j.axis.z() << " limits " << j.q_min << ' ' << j.q_max << '\n';
  }
  return out.str();
}

void save_scene(const ArticulatedObject& obj, const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string text = serialize_scene(obj, dir);
  std::ofstream out(std::filesystem::path(dir) / name);
  if (!out) throw std::runtime_error("cannot write scene file in " + dir);
  out << text;
}

ArticulatedObject load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str(), std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// URDF subset

namespace {

namespace pt = boost::property_tree;

Vec3 parse_triple(const std::string& text, const Vec3& fallback) {
  if (text.empty()) return fallback;
  std::istringstream in(text);
  Vec3 v;
  if (!(in >> v.x() >> v.y() >> v.z())) throw std::runtime_error("malformed 3-vector '" + text + "'");
  return v;
}

Pose parse_origin(const pt::ptree& element) {
  Vec3 xyz = Vec3::Zero(), rpy = Vec3::Zero();
  if (auto origin = element.get_child_optional("origin")) {
    xyz = parse_triple(origin->get<std::string>("<xmlattr>.xyz", ""), Vec3::Zero());
    rpy = parse_triple(origin->get<std::string>("<xmlattr>.rpy", ""), Vec3::Zero());
  }
  const Quat q = Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                 Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                 Eigen::AngleAxisd(rpy.x(), Vec3::UnitX());
  return Pose::from(q, xyz);
}

struct UrdfLink {
  std::string id;
  TriMesh mesh;  // possibly empty until merged
  std::optional<Vec3> box_extents;
};

}  // namespace

ArticulatedObject import_urdf_subset(const std::string& xml_text, const std::string& mesh_dir) {
  pt::ptree tree;
  {
    std::istringstream in(xml_text);
    try {
      pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
      throw std::runtime_error(std::string("URDF XML error: ") + e.what());
    }
  }
  auto robot = tree.get_child_optional("robot");
  if (!robot) throw std::runtime_error("URDF missing <robot> element");

  std::vector<UrdfLink> links;
  struct UrdfJoint {
    JointSpec spec;
    bool fixed = false;
  };
  std::vector<UrdfJoint> joints;

  for (const auto& [name, node] : *robot) {
    if (name == "link") {
      UrdfLink link;
      link.id = node.get<std::string>("<xmlattr>.name");
      if (auto visual = node.get_child_optional("visual")) {
        const Pose origin = parse_origin(*visual);
        auto geometry = visual->get_child_optional("geometry");
        if (geometry) {
          if (auto box = geometry->get_child_optional("box")) {
            const Vec3 size = parse_triple(box->get<std::string>("<xmlattr>.size"), Vec3::Zero());
            link.mesh = transformed(make_box_mesh(size), origin);
            if (origin.translation.isZero(0.0) &&
                origin.rotation.isApprox(Quat::Identity(), 0.0)) {
              link.box_extents = size;
            }
          } else if (auto meshel = geometry->get_child_optional("mesh")) {
            const std::string file = meshel->get<std::string>("<xmlattr>.filename");
            const auto full =
                mesh_dir.empty() ? file : (std::filesystem::path(mesh_dir) / file).string();
            if (!std::filesystem::exists(full))
              throw std::runtime_error("unresolvable mesh path: " + file);
            link.mesh = transformed(load_mesh_file(full), origin);
          } else {
            throw std::runtime_error("link '" + link.id + "': unsupported geometry");
          }
        }
      }
      links.push_back(std::move(link));
    } else if (name == "joint") {
      UrdfJoint j;
      j.spec.id = node.get<std::string>("<xmlattr>.name");
      const std::string type = node.get<std::string>("<xmlattr>.type");
      j.spec.parent_link = node.get<std::string>("parent.<xmlattr>.link");
      j.spec.child_link = node.get<std::string>("child.<xmlattr>.link");
      j.spec.origin = parse_origin(node);
      if (type == "fixed") {
        j.fixed = true;
      } else if (type == "revolute" || type == "continuous" || type == "prismatic") {
        j.spec.kind = type == "prismatic" ? JointKind::Prismatic : JointKind::Revolute;
        auto axis = node.get_child_optional("axis");
        if (!axis) throw std::runtime_error("joint '" + j.spec.id + "': missing axis");
        j.spec.axis = parse_triple(axis->get<std::string>("<xmlattr>.xyz"), Vec3::Zero());
        const double n = j.spec.axis.norm();
        if (n < 1e-12) throw std::runtime_error("joint '" + j.spec.id + "': zero axis");
        j.spec.axis /= n;
        if (type == "continuous") {
          j.spec.q_min = 0.0;
          j.spec.q_max = 2.0 * M_PI;
        } else {
          auto limit = node.get_child_optional("limit");
          if (!limit) throw std::runtime_error("joint '" + j.spec.id + "': missing limit");
          j.spec.q_min = limit->get<double>("<xmlattr>.lower", 0.0);
          j.spec.q_max = limit->get<double>("<xmlattr>.upper", 0.0);
        }
      } else {
        throw std::runtime_error("unsupported joint type '" + type + "'");
      }
      joints.push_back(std::move(j));
    }
  }

  // Root = the link that is never a child.
  std::set<std::string> children;
  for (const auto& j : joints) children.insert(j.spec.child_link);
  std::string root;
  for (const auto& l : links) {
    if (!children.count(l.id)) {
      if (!root.empty()) throw std::runtime_error("URDF has multiple root links");
      root = l.id;
    }
  }
  if (root.empty()) throw std::runtime_error("URDF has no root link");

  // Merge fixed joints: fold each fixed child's geometry into its parent,
  // composing the fixed origin into descendants' joint origins.
  auto find_link = [&](const std::string& id) -> UrdfLink& {
    for (auto& l : links)
      if (l.id == id) return l;
    throw std::runtime_error("URDF joint references unknown link '" + id + "'");
  };
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t ji = 0; ji < joints.size(); ++ji) {
      if (!joints[ji].fixed) continue;
      // Skip if the child still has fixed descendants to fold first.
      const std::string child = joints[ji].spec.child_link;
      const Pose origin = joints[ji].spec.origin;
      UrdfLink& parent = find_link(joints[ji].spec.parent_link);
      UrdfLink& child_link = find_link(child);
      append(parent.mesh, transformed(child_link.mesh, origin));
      if (!child_link.mesh.triangles.empty()) parent.box_extents.reset();
      for (auto& other : joints) {
        if (&other != &joints[ji] && other.spec.parent_link == child) {
          other.spec.parent_link = joints[ji].spec.parent_link;
          other.spec.origin = origin * other.spec.origin;
        }
      }
      links.erase(std::remove_if(links.begin(), links.end(),
                                 [&](const UrdfLink& l) { return l.id == child; }),
                  links.end());
      joints.erase(joints.begin() + static_cast<std::ptrdiff_t>(ji));
      merged = true;
      break;
    }
  }

  ArticulatedObject obj;
  obj.root_link = root;
  for (auto& l : links) {
    if (l.mesh.triangles.empty())
      throw std::runtime_error("link '" + l.id + "' has no geometry after merging");
    LinkSpec spec;
    spec.id = l.id;
    spec.mesh = std::move(l.mesh);
    spec.box_extents = l.box_extents;
    obj.links.push_back(std::move(spec));
  }
  for (auto& j : joints) obj.joints.push_back(std::move(j.spec));
  obj.validate();
  return obj;
}

}  // namespace artflow

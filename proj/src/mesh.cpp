#include "artflow/mesh.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace artflow {

double TriMesh::total_area() const {
  double a = 0.0;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t) a += triangle_area(t);
  return a;
}

void TriMesh::bounds(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

TriMesh make_box_mesh(const Vec3& extents) { return make_box_mesh(Vec3::Zero(), extents); }

TriMesh make_box_mesh(const Vec3& center, const Vec3& extents) {
  const Vec3 h = extents / 2.0;
  TriMesh m;
  m.vertices.reserve(8);
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(center + Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                                       (i & 4) ? h.z() : -h.z()));
  }
  // Outward winding, two triangles per face.
  const int faces[6][4] = {
      {1, 3, 7, 5},  // +x
      {2, 0, 4, 6},  // -x
      {3, 2, 6, 7},  // +y
      {0, 1, 5, 4},  // -y
      {4, 5, 7, 6},  // +z
      {2, 3, 1, 0},  // -z
  };
  for (const auto& f : faces) {
    m.triangles.push_back({f[0], f[1], f[2]});
    m.triangles.push_back({f[0], f[2], f[3]});
  }
  return m;
}

TriMesh make_sphere_patch(const Vec3& center, double radius, double colat_max, double azim_min,
                          double azim_max, int rings, int segments) {
  TriMesh m;
  auto vertex = [&](double colat, double azim) -> Vec3 {
    return center + radius * Vec3(std::sin(colat) * std::cos(azim),
                                  std::sin(colat) * std::sin(azim), std::cos(colat));
  };
  // Grid of (rings+1) x (segments+1) vertices; the colat=0 row collapses to
  // the pole but stays indexed for simplicity (degenerate triangles skipped).
  for (int i = 0; i <= rings; ++i) {
    const double colat = colat_max * i / rings;
    for (int j = 0; j <= segments; ++j) {
      const double azim = azim_min + (azim_max - azim_min) * j / segments;
      m.vertices.push_back(vertex(colat, azim));
    }
  }
  auto idx = [&](int i, int j) { return i * (segments + 1) + j; };
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < segments; ++j) {
      const int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      if (i > 0) m.triangles.push_back({a, b, d});
      m.triangles.push_back({b, c, d});
    }
  }
  return m;
}

TriMesh transformed(const TriMesh& mesh, const Pose& pose) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = pose * v;
  return out;
}

void append(TriMesh& dst, const TriMesh& src) {
  const int base = static_cast<int>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const auto& t : src.triangles) dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

TriMesh load_mesh_ascii(std::istream& in) {
  TriMesh m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw ParseError(lineno, "malformed vertex");
      m.vertices.push_back(p);
    } else if (tag == "f") {
      std::array<int, 3> t{};
      if (!(ls >> t[0] >> t[1] >> t[2])) throw ParseError(lineno, "malformed face");
      for (int i : t) {
        if (i < 0 || i >= static_cast<int>(m.vertices.size()))
          throw ParseError(lineno, "face index out of range");
      }
      m.triangles.push_back(t);
    } else {
      throw ParseError(lineno, "unknown mesh record '" + tag + "'");
    }
  }
  return m;
}

TriMesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  return load_mesh_ascii(in);
}

void save_mesh_ascii(const TriMesh& mesh, std::ostream& out) {
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void save_mesh_file(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path);
  save_mesh_ascii(mesh, out);
}

}  // namespace artflow

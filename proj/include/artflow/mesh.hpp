#pragma once

#include "artflow/core.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace artflow {

/// Indexed triangle mesh. Vertices in meters, indices 0-based.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  double triangle_area(int t) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    return 0.5 * e1.cross(e2).norm();
  }

  double total_area() const;

  /// Axis-aligned bounds; undefined for an empty mesh.
  void bounds(Vec3& lo, Vec3& hi) const;
};

/// Axis-aligned box centered at the origin with the given full extents,
/// outward-consistent winding.
TriMesh make_box_mesh(const Vec3& extents);
TriMesh make_box_mesh(const Vec3& center, const Vec3& extents);

/// Spherical patch of radius r centered at `center`, colatitude in
/// [0, colat_max] from +z, azimuth in [azim_min, azim_max] from +x.
/// Outward (radial) winding.
TriMesh make_sphere_patch(const Vec3& center, double radius, double colat_max,
                          double azim_min, double azim_max, int rings = 12, int segments = 16);

TriMesh transformed(const TriMesh& mesh, const Pose& pose);
void append(TriMesh& dst, const TriMesh& src);

/// ASCII triangle format: `v x y z` and `f i j k` lines, 0-indexed faces.
TriMesh load_mesh_ascii(std::istream& in);
TriMesh load_mesh_file(const std::string& path);
void save_mesh_ascii(const TriMesh& mesh, std::ostream& out);
void save_mesh_file(const TriMesh& mesh, const std::string& path);

}  // namespace artflow

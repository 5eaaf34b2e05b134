#include "artflow/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace artflow {

CameraModel make_lookat_camera(const Vec3& eye, const Vec3& lookat, double fx, double fy,
                               int width, int height) {
  CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.width = width;
  cam.height = height;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;

  Vec3 forward = lookat - eye;
  if (forward.norm() < 1e-12) throw std::runtime_error("camera eye coincides with lookat");
  forward.normalize();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitY());  // looking straight up/down
  right.normalize();
  const Vec3 down = forward.cross(right).normalized();

  Mat3 cam_to_world;
  cam_to_world.col(0) = right;
  cam_to_world.col(1) = down;
  cam_to_world.col(2) = forward;
  const Quat q(cam_to_world);
  cam.world_to_camera = Pose::from(q, eye).inverse();
  return cam;
}

namespace {

constexpr double kNearPlane = 1e-4;

struct CamVertex {
  Vec3 p;  // camera frame
};

/// Clips a triangle against z >= near; returns 0-4 vertices of the clipped
/// polygon.
int clip_near(const Vec3 in[3], Vec3 out[4]) {
  int count = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = in[i];
    const Vec3& b = in[(i + 1) % 3];
    const bool a_in = a.z() >= kNearPlane;
    const bool b_in = b.z() >= kNearPlane;
    if (a_in) out[count++] = a;
    if (a_in != b_in) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      out[count++] = a + t * (b - a);
    }
  }
  return count;
}

struct Raster {
  DepthImage* depth;
  std::vector<std::int32_t>* ids;
  const CameraModel* cam;

  void triangle(const Vec3& a, const Vec3& b, const Vec3& c, std::int32_t id) {
    // Screen-space positions with linear-in-screen 1/z.
    auto project = [&](const Vec3& p) {
      return Vec3(cam->fx * p.x() / p.z() + cam->cx, cam->fy * p.y() / p.z() + cam->cy,
                  1.0 / p.z());
    };
    const Vec3 sa = project(a), sb = project(b), sc = project(c);
    double area = (sb.x() - sa.x()) * (sc.y() - sa.y()) - (sb.y() - sa.y()) * (sc.x() - sa.x());
    if (std::abs(area) < 1e-12) return;

    const int u0 = std::max(0, static_cast<int>(std::ceil(std::min({sa.x(), sb.x(), sc.x()}))));
    const int u1 = std::min(cam->width - 1,
                            static_cast<int>(std::floor(std::max({sa.x(), sb.x(), sc.x()}))));
    const int v0 = std::max(0, static_cast<int>(std::ceil(std::min({sa.y(), sb.y(), sc.y()}))));
    const int v1 = std::min(cam->height - 1,
                            static_cast<int>(std::floor(std::max({sa.y(), sb.y(), sc.y()}))));
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const double w0 = ((sb.x() - u) * (sc.y() - v) - (sb.y() - v) * (sc.x() - u)) / area;
        const double w1 = ((sc.x() - u) * (sa.y() - v) - (sc.y() - v) * (sa.x() - u)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double inv_z = w0 * sa.z() + w1 * sb.z() + w2 * sc.z();
        if (inv_z <= 0.0) continue;
        const double z = 1.0 / inv_z;
        const std::size_t idx = static_cast<std::size_t>(v) * cam->width + u;
        if (z < depth->depth[idx]) {
          depth->depth[idx] = z;
          (*ids)[idx] = id;
        }
      }
    }
  }
};

}  // namespace

RenderResult render_depth(const ArticulatedObject& obj, const JointState& state,
                          const CameraModel& camera) {
  if (camera.fx <= 0 || camera.fy <= 0 || camera.cx <= 0 || camera.cx >= camera.width ||
      camera.cy <= 0 || camera.cy >= camera.height)
    throw std::runtime_error("invalid camera intrinsics");

  RenderResult result;
  result.depth.width = camera.width;
  result.depth.height = camera.height;
  result.depth.depth.assign(static_cast<std::size_t>(camera.width) * camera.height,
                            DepthImage::background());
  result.link_ids.assign(result.depth.depth.size(), -1);
  for (const auto& link : obj.links) result.link_names.push_back(link.id);

  const auto poses = forward_kinematics(obj, state);
  Raster raster{&result.depth, &result.link_ids, &camera};
  for (int li = 0; li < static_cast<int>(obj.links.size()); ++li) {
    const auto& mesh = obj.links[static_cast<std::size_t>(li)].mesh;
    const Pose to_cam = camera.world_to_camera * poses[static_cast<std::size_t>(li)];
    for (const auto& tri : mesh.triangles) {
      const Vec3 verts[3] = {to_cam * mesh.vertices[tri[0]], to_cam * mesh.vertices[tri[1]],
                             to_cam * mesh.vertices[tri[2]]};
      Vec3 clipped[4];
      const int count = clip_near(verts, clipped);
      for (int t = 2; t < count; ++t)
        raster.triangle(clipped[0], clipped[t - 1], clipped[t], li);
    }
  }
  return result;
}

PointCloud backproject(const RenderResult& render, const CameraModel& camera, int stride) {
  if (stride < 1) throw std::runtime_error("stride must be >= 1");
  if (render.depth.width != camera.width || render.depth.height != camera.height)
    throw std::runtime_error("depth image does not match camera");
  PointCloud cloud;
  cloud.label_names = render.link_names;
  const Pose cam_to_world = camera.world_to_camera.inverse();
  for (int v = 0; v < camera.height; v += stride) {
    for (int u = 0; u < camera.width; u += stride) {
      const std::size_t idx = static_cast<std::size_t>(v) * camera.width + u;
      const double z = render.depth.depth[idx];
      if (!std::isfinite(z)) continue;
      const Vec3 pc((u - camera.cx) * z / camera.fx, (v - camera.cy) * z / camera.fy, z);
      cloud.points.push_back(cam_to_world * pc);
      cloud.link_labels.push_back(render.link_ids[idx]);
    }
  }
  return cloud;
}

CameraModel random_viewpoint(std::uint64_t rng_seed, const ViewpointRanges& ranges,
                             const Vec3& lookat, double fx, double fy, int width, int height) {
  if (ranges.elevation_min > ranges.elevation_max || ranges.azimuth_min > ranges.azimuth_max ||
      ranges.distance_min > ranges.distance_max)
    throw std::runtime_error("empty viewpoint range");
  Rng rng(rng_seed);
  const double elevation = rng.uniform(ranges.elevation_min, ranges.elevation_max);
  const double azimuth = rng.uniform(ranges.azimuth_min, ranges.azimuth_max);
  const double distance = rng.uniform(ranges.distance_min, ranges.distance_max);
  const Vec3 eye = lookat + distance * Vec3(std::cos(elevation) * std::cos(azimuth),
                                            std::cos(elevation) * std::sin(azimuth),
                                            std::sin(elevation));
  return make_lookat_camera(eye, lookat, fx, fy, width, height);
}

void save_depth_pgm(const DepthImage& img, std::ostream& out) {
  out << "P2\n" << img.width << ' ' << img.height << "\n65535\n";
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double z = img.at(u, v);
      const int mm = std::isfinite(z) ? std::clamp(static_cast<int>(z * 1000.0), 1, 65535) : 0;
      out << mm << (u + 1 == img.width ? '\n' : ' ');
    }
  }
}

void save_depth_pgm_file(const DepthImage& img, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write depth file: " + path);
  save_depth_pgm(img, out);
}

}  // namespace artflow

#pragma once

#include "artflow/geom.hpp"

#include <limits>

namespace artflow {

struct CameraModel {
  double fx = 256.0, fy = 256.0;
  double cx = 128.0, cy = 128.0;
  int width = 256, height = 256;
  Pose world_to_camera;  // camera frame: +z forward, +x right, +y down

  Vec3 eye() const { return world_to_camera.inverse().translation; }
};

/// Pinhole look-at camera with world +z as up.
CameraModel make_lookat_camera(const Vec3& eye, const Vec3& lookat, double fx = 256.0,
                               double fy = 256.0, int width = 256, int height = 256);

struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> depth;  // meters; +inf background

  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  static constexpr double background() { return std::numeric_limits<double>::infinity(); }
};

struct RenderResult {
  DepthImage depth;
  std::vector<std::int32_t> link_ids;  // per pixel, -1 background
  std::vector<std::string> link_names;
};

/// Z-buffer rasterization of all posed link triangles. Back faces are kept
/// (a depth sensor sees surfaces regardless of winding).
RenderResult render_depth(const ArticulatedObject& obj, const JointState& state,
                          const CameraModel& camera);

/// Back-projects foreground pixels to a labeled world-frame cloud. `stride`
/// subsamples the pixel grid.
PointCloud backproject(const RenderResult& render, const CameraModel& camera, int stride = 1);

struct ViewpointRanges {
  double elevation_min = 15.0 * M_PI / 180.0, elevation_max = 60.0 * M_PI / 180.0;
  double azimuth_min = -M_PI / 3.0, azimuth_max = M_PI / 3.0;
  double distance_min = 1.0, distance_max = 2.0;  // meters
};

/// Uniformly sampled camera pose in a spherical-coordinate box around
/// `lookat`, up = world z. Deterministic per seed.
CameraModel random_viewpoint(std::uint64_t rng_seed, const ViewpointRanges& ranges,
                             const Vec3& lookat, double fx = 256.0, double fy = 256.0,
                             int width = 256, int height = 256);

/// PGM-style ASCII export (depth in millimeters, background 0).
void save_depth_pgm(const DepthImage& img, std::ostream& out);
void save_depth_pgm_file(const DepthImage& img, const std::string& path);

}  // namespace artflow

#pragma once

#include "artflow/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace artflow {

/// Point cloud in the world frame with optional per-point attributes. All
/// optional arrays are either empty or sized N. Labels are indices into
/// `label_names` (-1 for unlabeled points).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::int32_t> link_labels;
  std::vector<std::string> label_names;
  std::vector<std::uint8_t> part_mask;
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> normal_valid;

  std::size_t size() const { return points.size(); }
  bool has_labels() const { return !link_labels.empty(); }
  bool has_mask() const { return !part_mask.empty(); }
  bool has_normals() const { return !normals.empty(); }

  int label_of(const std::string& link_id) const;  // -1 if absent
  void set_part_mask_from_labels(const std::string& link_id);
};

struct SurfaceSample {
  Vec3 point;
  std::string link_id;
  int triangle_index = 0;        // into the link's own mesh
  Vec3 barycentric{0, 0, 0};
};

/// Area-uniform surface sampling over all links posed by forward kinematics.
/// Deterministic given the seed. Throws on zero total surface area.
PointCloud sample_surface(const ArticulatedObject& obj, const JointState& state, int n,
                          std::uint64_t rng_seed, std::vector<SurfaceSample>* samples = nullptr);

/// Exact k-nearest-neighbor queries over a fixed cloud, grid-accelerated.
/// Ties broken by (distance, index) so results are deterministic.
class KnnIndex {
 public:
  explicit KnnIndex(const std::vector<Vec3>& points);

  /// Indices of the k nearest points to points[query], excluding query itself.
  std::vector<int> neighbors(int query, int k) const;

  /// All indices within `radius` of an arbitrary position (inclusive).
  std::vector<int> radius_search(const Vec3& position, double radius) const;

 private:
  const std::vector<Vec3>& points_;
  Vec3 origin_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1, nz_ = 1;
  std::vector<std::vector<int>> cells_;
  int cell_of(const Vec3& p) const;
};

/// PCA normals from k-NN covariance, sign-aligned toward `view_point`.
/// Points with a degenerate neighborhood get normal_valid = 0 and a zero
/// normal.
PointCloud estimate_normals(const PointCloud& cloud, int k, const Vec3& view_point);

/// Gaussian curvature (1/m^2) from a local quadric fit in the tangent frame.
/// Degenerate fits report +infinity.
std::vector<double> estimate_gaussian_curvature(const PointCloud& cloud, int k);

/// Boundary/crease detection: a point is an edge if the largest angular gap
/// of its projected neighbors exceeds `angle_gap_threshold`, or if the two
/// largest covariance eigenvalues have ratio > 10.
std::vector<std::uint8_t> detect_edges(const PointCloud& cloud, int k, double angle_gap_threshold);

// Columnar binary + CSV serialization. Flow columns are optional and carried
// separately (see flow.hpp).
void save_cloud(const PointCloud& cloud, std::ostream& out, const std::vector<Vec3>* flow = nullptr);
void save_cloud_file(const PointCloud& cloud, const std::string& path,
                     const std::vector<Vec3>* flow = nullptr);
PointCloud load_cloud(std::istream& in, std::vector<Vec3>* flow = nullptr);
PointCloud load_cloud_file(const std::string& path, std::vector<Vec3>* flow = nullptr);
void save_cloud_csv(const PointCloud& cloud, std::ostream& out, const std::vector<Vec3>* flow = nullptr);

}  // namespace artflow

#include "artflow/geom.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <queue>

namespace artflow {

int PointCloud::label_of(const std::string& link_id) const {
  for (int i = 0; i < static_cast<int>(label_names.size()); ++i)
    if (label_names[static_cast<std::size_t>(i)] == link_id) return i;
  return -1;
}

void PointCloud::set_part_mask_from_labels(const std::string& link_id) {
  const int target = label_of(link_id);
  part_mask.assign(size(), 0);
  for (std::size_t i = 0; i < size(); ++i)
    part_mask[i] = (link_labels[i] == target && target >= 0) ? 1 : 0;
}

PointCloud sample_surface(const ArticulatedObject& obj, const JointState& state, int n,
                          std::uint64_t rng_seed, std::vector<SurfaceSample>* samples) {
  if (n < 1) throw std::runtime_error("sample count must be >= 1");
  const auto poses = forward_kinematics(obj, state);

  struct Tri {
    int link;
    int tri;
    Vec3 a, b, c;  // world
  };
  std::vector<Tri> tris;
  std::vector<double> cumulative;
  double total = 0.0;
  for (int li = 0; li < static_cast<int>(obj.links.size()); ++li) {
    const auto& mesh = obj.links[static_cast<std::size_t>(li)].mesh;
    const Pose& pose = poses[static_cast<std::size_t>(li)];
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
      const auto& idx = mesh.triangles[static_cast<std::size_t>(t)];
      Tri tri{li, t, pose * mesh.vertices[idx[0]], pose * mesh.vertices[idx[1]],
              pose * mesh.vertices[idx[2]]};
      const double area = 0.5 * (tri.b - tri.a).cross(tri.c - tri.a).norm();
      if (area <= 0.0) continue;
      total += area;
      tris.push_back(tri);
      cumulative.push_back(total);
    }
  }
  if (total <= 0.0) throw DegenerateGeometryError("object has zero total surface area");

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n));
  cloud.link_labels.reserve(static_cast<std::size_t>(n));
  for (const auto& link : obj.links) cloud.label_names.push_back(link.id);

  Rng rng(rng_seed);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t ti = std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative.begin()), tris.size() - 1);
    const Tri& tri = tris[ti];
    double b1 = rng.uniform(), b2 = rng.uniform();
    if (b1 + b2 > 1.0) {
      b1 = 1.0 - b1;
      b2 = 1.0 - b2;
    }
    const double b0 = 1.0 - b1 - b2;
    const Vec3 p = b0 * tri.a + b1 * tri.b + b2 * tri.c;
    cloud.points.push_back(p);
    cloud.link_labels.push_back(tri.link);
    if (samples) {
      SurfaceSample s;
      s.point = p;
      s.link_id = obj.links[static_cast<std::size_t>(tri.link)].id;
      s.triangle_index = tri.tri;
      s.barycentric = Vec3(b0, b1, b2);
      samples->push_back(s);
    }
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Exact k-NN over a uniform grid

KnnIndex::KnnIndex(const std::vector<Vec3>& points) : points_(points) {
  if (points.empty()) throw std::runtime_error("empty cloud");
  Vec3 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  origin_ = lo;
  const Vec3 span = hi - lo;
  const double volume = std::max(span.x() * span.y() * span.z(), 1e-12);
  // Aim for a handful of points per cell; the span floor keeps the grid
  // bounded for flat or collinear clouds where the volume degenerates.
  cell_ = std::max({std::cbrt(volume * 4.0 / static_cast<double>(points.size())),
                    span.maxCoeff() / 64.0, 1e-6});
  nx_ = std::max(1, static_cast<int>(span.x() / cell_) + 1);
  ny_ = std::max(1, static_cast<int>(span.y() / cell_) + 1);
  nz_ = std::max(1, static_cast<int>(span.z() / cell_) + 1);
  cells_.resize(static_cast<std::size_t>(nx_) * ny_ * nz_);
  for (int i = 0; i < static_cast<int>(points.size()); ++i)
    cells_[static_cast<std::size_t>(cell_of(points[static_cast<std::size_t>(i)]))].push_back(i);
}

int KnnIndex::cell_of(const Vec3& p) const {
  const auto clampi = [](int v, int n) { return std::min(std::max(v, 0), n - 1); };
  const int ix = clampi(static_cast<int>((p.x() - origin_.x()) / cell_), nx_);
  const int iy = clampi(static_cast<int>((p.y() - origin_.y()) / cell_), ny_);
  const int iz = clampi(static_cast<int>((p.z() - origin_.z()) / cell_), nz_);
  return (iz * ny_ + iy) * nx_ + ix;
}

std::vector<int> KnnIndex::neighbors(int query, int k) const {
  const Vec3& q = points_[static_cast<std::size_t>(query)];
  using Entry = std::pair<double, int>;  // (squared distance, index)
  std::priority_queue<Entry> best;       // max-heap of current k best

  const auto clampi = [](int v, int n) { return std::min(std::max(v, 0), n - 1); };
  const int cxq = clampi(static_cast<int>((q.x() - origin_.x()) / cell_), nx_);
  const int cyq = clampi(static_cast<int>((q.y() - origin_.y()) / cell_), ny_);
  const int czq = clampi(static_cast<int>((q.z() - origin_.z()) / cell_), nz_);

  const auto scan_cell = [&](int ix, int iy, int iz) {
    for (int i : cells_[static_cast<std::size_t>((iz * ny_ + iy) * nx_ + ix)]) {
      if (i == query) continue;
      const double d2 = (points_[static_cast<std::size_t>(i)] - q).squaredNorm();
      const Entry e{d2, i};
      if (static_cast<int>(best.size()) < k) {
        best.push(e);
      } else if (e < best.top()) {
        best.pop();
        best.push(e);
      }
    }
  };

  const int max_ring =
      std::max({cxq, nx_ - 1 - cxq, cyq, ny_ - 1 - cyq, czq, nz_ - 1 - czq});
  for (int ring = 0; ring <= max_ring; ++ring) {
    // Once k found, stop when the closest possible point in this ring cannot
    // beat the current worst.
    if (static_cast<int>(best.size()) >= k) {
      const double min_ring_dist = (ring - 1) * cell_;
      if (min_ring_dist > 0.0 && min_ring_dist * min_ring_dist > best.top().first) break;
    }
    // Enumerate only the shell of the ring cube, clamped to the grid, so
    // per-ring cost tracks the number of live cells rather than ring^3.
    const int x0 = std::max(cxq - ring, 0), x1 = std::min(cxq + ring, nx_ - 1);
    const int y0 = std::max(cyq - ring, 0), y1 = std::min(cyq + ring, ny_ - 1);
    const int z0 = std::max(czq - ring, 0), z1 = std::min(czq + ring, nz_ - 1);
    if (ring == 0) {
      scan_cell(cxq, cyq, czq);
      continue;
    }
    for (int iz : {czq - ring, czq + ring}) {  // top/bottom faces
      if (iz < 0 || iz >= nz_) continue;
      for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) scan_cell(ix, iy, iz);
    }
    for (int iy : {cyq - ring, cyq + ring}) {  // front/back faces, minus rims
      if (iy < 0 || iy >= ny_) continue;
      for (int iz = std::max(z0, czq - ring + 1); iz <= std::min(z1, czq + ring - 1); ++iz)
        for (int ix = x0; ix <= x1; ++ix) scan_cell(ix, iy, iz);
    }
    for (int ix : {cxq - ring, cxq + ring}) {  // left/right faces, minus rims
      if (ix < 0 || ix >= nx_) continue;
      for (int iz = std::max(z0, czq - ring + 1); iz <= std::min(z1, czq + ring - 1); ++iz)
        for (int iy = std::max(y0, cyq - ring + 1); iy <= std::min(y1, cyq + ring - 1); ++iy)
          scan_cell(ix, iy, iz);
    }
  }
  std::vector<int> out;
  out.reserve(best.size());
  std::vector<Entry> sorted;
  while (!best.empty()) {
    sorted.push_back(best.top());
    best.pop();
  }
  std::sort(sorted.begin(), sorted.end());
  for (const auto& e : sorted) out.push_back(e.second);
  return out;
}

std::vector<int> KnnIndex::radius_search(const Vec3& position, double radius) const {
  std::vector<int> out;
  const auto clampi = [](int v, int n) { return std::min(std::max(v, 0), n - 1); };
  const int x0 = clampi(static_cast<int>((position.x() - radius - origin_.x()) / cell_), nx_);
  const int x1 = clampi(static_cast<int>((position.x() + radius - origin_.x()) / cell_), nx_);
  const int y0 = clampi(static_cast<int>((position.y() - radius - origin_.y()) / cell_), ny_);
  const int y1 = clampi(static_cast<int>((position.y() + radius - origin_.y()) / cell_), ny_);
  const int z0 = clampi(static_cast<int>((position.z() - radius - origin_.z()) / cell_), nz_);
  const int z1 = clampi(static_cast<int>((position.z() + radius - origin_.z()) / cell_), nz_);
  const double r2 = radius * radius;
  for (int iz = z0; iz <= z1; ++iz)
    for (int iy = y0; iy <= y1; ++iy)
      for (int ix = x0; ix <= x1; ++ix)
        for (int i : cells_[static_cast<std::size_t>((iz * ny_ + iy) * nx_ + ix)])
          if ((points_[static_cast<std::size_t>(i)] - position).squaredNorm() <= r2)
            out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Normals / curvature / edges

namespace {

struct LocalFrame {
  Vec3 normal;        // smallest-eigenvector direction
  Vec3 t1, t2;        // tangent basis (largest, middle eigenvectors)
  Vec3 eigenvalues;   // descending
  bool degenerate = false;
};

LocalFrame neighborhood_frame(const PointCloud& cloud, int i, const std::vector<int>& nbrs) {
  LocalFrame frame;
  Vec3 mean = cloud.points[static_cast<std::size_t>(i)];
  for (int j : nbrs) mean += cloud.points[static_cast<std::size_t>(j)];
  mean /= static_cast<double>(nbrs.size() + 1);
  Mat3 cov = Mat3::Zero();
  auto accumulate = [&](const Vec3& p) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  };
  accumulate(cloud.points[static_cast<std::size_t>(i)]);
  for (int j : nbrs) accumulate(cloud.points[static_cast<std::size_t>(j)]);
  cov /= static_cast<double>(nbrs.size() + 1);

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Vec3 evals = solver.eigenvalues();  // ascending
  frame.eigenvalues = Vec3(evals[2], evals[1], evals[0]);
  frame.normal = solver.eigenvectors().col(0);
  frame.t1 = solver.eigenvectors().col(2);
  frame.t2 = solver.eigenvectors().col(1);
  // Rank < 2 (coincident or collinear neighborhood): no well-defined normal.
  frame.degenerate = evals[2] < 1e-18 || evals[1] <= 1e-9 * evals[2];
  return frame;
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, int k, const Vec3& view_point) {
  const int n = static_cast<int>(cloud.size());
  if (n <= k || k < 3) throw std::runtime_error("estimate_normals requires N > k >= 3");
  PointCloud out = cloud;
  out.normals.assign(cloud.size(), Vec3::Zero());
  out.normal_valid.assign(cloud.size(), 0);
  KnnIndex index(cloud.points);
  for (int i = 0; i < n; ++i) {
    const auto nbrs = index.neighbors(i, k);
    const LocalFrame frame = neighborhood_frame(cloud, i, nbrs);
    if (frame.degenerate) continue;
    Vec3 normal = frame.normal.normalized();
    if (normal.dot(view_point - cloud.points[static_cast<std::size_t>(i)]) < 0.0) normal = -normal;
    out.normals[static_cast<std::size_t>(i)] = normal;
    out.normal_valid[static_cast<std::size_t>(i)] = 1;
  }
  return out;
}

std::vector<double> estimate_gaussian_curvature(const PointCloud& cloud, int k) {
  const int n = static_cast<int>(cloud.size());
  if (n <= k || k < 6) throw std::runtime_error("curvature requires N > k >= 6");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> out(cloud.size(), inf);
  KnnIndex index(cloud.points);
  for (int i = 0; i < n; ++i) {
    const auto nbrs = index.neighbors(i, k);
    const LocalFrame frame = neighborhood_frame(cloud, i, nbrs);
    if (frame.degenerate) continue;
    // Quadric fit z = a u^2 + b uv + c v^2 + d u + e v + f in the tangent
    // frame centered at the point.
    const Vec3& p0 = cloud.points[static_cast<std::size_t>(i)];
    Eigen::MatrixXd A(nbrs.size() + 1, 6);
    Eigen::VectorXd z(nbrs.size() + 1);
    auto fill_row = [&](Eigen::Index row, const Vec3& p) {
      const Vec3 d = p - p0;
      const double u = d.dot(frame.t1), v = d.dot(frame.t2), w = d.dot(frame.normal);
      A(row, 0) = u * u;
      A(row, 1) = u * v;
      A(row, 2) = v * v;
      A(row, 3) = u;
      A(row, 4) = v;
      A(row, 5) = 1.0;
      z(row) = w;
    };
    fill_row(0, p0);
    for (std::size_t j = 0; j < nbrs.size(); ++j)
      fill_row(static_cast<Eigen::Index>(j + 1), cloud.points[static_cast<std::size_t>(nbrs[j])]);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.rank() < 6) continue;  // stays +inf
    const Eigen::VectorXd coeff = svd.solve(z);
    const double a = coeff(0), b = coeff(1), c = coeff(2), d = coeff(3), e = coeff(4);
    const double denom = 1.0 + d * d + e * e;
    out[static_cast<std::size_t>(i)] = (4.0 * a * c - b * b) / (denom * denom);
  }
  return out;
}

std::vector<std::uint8_t> detect_edges(const PointCloud& cloud, int k, double angle_gap_threshold) {
  const int n = static_cast<int>(cloud.size());
  if (n <= k || k < 6) throw std::runtime_error("detect_edges requires N > k >= 6");
  std::vector<std::uint8_t> out(cloud.size(), 0);
  KnnIndex index(cloud.points);
  for (int i = 0; i < n; ++i) {
    const auto nbrs = index.neighbors(i, k);
    const LocalFrame frame = neighborhood_frame(cloud, i, nbrs);
    if (frame.degenerate) {
      out[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    // Crease criterion: strongly anisotropic tangent spread.
    if (frame.eigenvalues[0] > 10.0 * frame.eigenvalues[1]) {
      out[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    // Boundary criterion: largest angular gap of projected neighbors.
    std::vector<double> angles;
    angles.reserve(nbrs.size());
    const Vec3& p0 = cloud.points[static_cast<std::size_t>(i)];
    for (int j : nbrs) {
      const Vec3 d = cloud.points[static_cast<std::size_t>(j)] - p0;
      const double u = d.dot(frame.t1), v = d.dot(frame.t2);
      if (u * u + v * v < 1e-24) continue;
      angles.push_back(std::atan2(v, u));
    }
    if (angles.size() < 2) {
      out[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    std::sort(angles.begin(), angles.end());
    double max_gap = angles.front() + 2.0 * M_PI - angles.back();
    for (std::size_t j = 1; j < angles.size(); ++j)
      max_gap = std::max(max_gap, angles[j] - angles[j - 1]);
    if (max_gap > angle_gap_threshold) out[static_cast<std::size_t>(i)] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'A', 'F', 'P', 'C', 'B', '1', '\n', '\0'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated cloud file");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_pod<std::uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("truncated cloud file");
  return s;
}

void write_vec3_column(std::ostream& out, const std::vector<Vec3>& col) {
  for (const auto& v : col) {
    write_pod<double>(out, v.x());
    write_pod<double>(out, v.y());
    write_pod<double>(out, v.z());
  }
}

std::vector<Vec3> read_vec3_column(std::istream& in, std::size_t n) {
  std::vector<Vec3> col(n);
  for (auto& v : col) {
    v.x() = read_pod<double>(in);
    v.y() = read_pod<double>(in);
    v.z() = read_pod<double>(in);
  }
  return col;
}

}  // namespace

void save_cloud(const PointCloud& cloud, std::ostream& out, const std::vector<Vec3>* flow) {
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint64_t>(out, cloud.size());
  std::uint8_t flags = 0;
  if (cloud.has_labels()) flags |= 1;
  if (cloud.has_mask()) flags |= 2;
  if (cloud.has_normals()) flags |= 4;
  if (flow) flags |= 8;
  write_pod(out, flags);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(cloud.label_names.size()));
  for (const auto& name : cloud.label_names) write_string(out, name);
  write_vec3_column(out, cloud.points);
  if (cloud.has_labels())
    for (auto l : cloud.link_labels) write_pod<std::int32_t>(out, l);
  if (cloud.has_mask())
    for (auto m : cloud.part_mask) write_pod<std::uint8_t>(out, m);
  if (cloud.has_normals()) {
    write_vec3_column(out, cloud.normals);
    for (auto v : cloud.normal_valid) write_pod<std::uint8_t>(out, v);
  }
  if (flow) {
    if (flow->size() != cloud.size()) throw std::runtime_error("flow column length mismatch");
    write_vec3_column(out, *flow);
  }
}

PointCloud load_cloud(std::istream& in, std::vector<Vec3>* flow) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad cloud file magic");
  const auto n = read_pod<std::uint64_t>(in);
  const auto flags = read_pod<std::uint8_t>(in);
  PointCloud cloud;
  const auto name_count = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < name_count; ++i) cloud.label_names.push_back(read_string(in));
  cloud.points = read_vec3_column(in, n);
  if (flags & 1) {
    cloud.link_labels.resize(n);
    for (auto& l : cloud.link_labels) l = read_pod<std::int32_t>(in);
  }
  if (flags & 2) {
    cloud.part_mask.resize(n);
    for (auto& m : cloud.part_mask) m = read_pod<std::uint8_t>(in);
  }
  if (flags & 4) {
    cloud.normals = read_vec3_column(in, n);
    cloud.normal_valid.resize(n);
    for (auto& v : cloud.normal_valid) v = read_pod<std::uint8_t>(in);
  }
  if (flags & 8) {
    auto f = read_vec3_column(in, n);
    if (flow) *flow = std::move(f);
  }
  return cloud;
}

void save_cloud_file(const PointCloud& cloud, const std::string& path,
                     const std::vector<Vec3>* flow) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cloud file: " + path);
  save_cloud(cloud, out, flow);
}

PointCloud load_cloud_file(const std::string& path, std::vector<Vec3>* flow) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cloud file: " + path);
  return load_cloud(in, flow);
}

void save_cloud_csv(const PointCloud& cloud, std::ostream& out, const std::vector<Vec3>* flow) {
  out.precision(17);
  out << "x,y,z";
  if (cloud.has_labels()) out << ",label";
  if (cloud.has_mask()) out << ",mask";
  if (cloud.has_normals()) out << ",nx,ny,nz";
  if (flow) out << ",fx,fy,fz";
  out << '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << p.x() << ',' << p.y() << ',' << p.z();
    if (cloud.has_labels()) {
      const int l = cloud.link_labels[i];
      out << ',' << (l >= 0 ? cloud.label_names[static_cast<std::size_t>(l)] : std::string());
    }
    if (cloud.has_mask()) out << ',' << static_cast<int>(cloud.part_mask[i]);
    if (cloud.has_normals()) {
      const Vec3& nv = cloud.normals[i];
      out << ',' << nv.x() << ',' << nv.y() << ',' << nv.z();
    }
    if (flow) {
      const Vec3& f = (*flow)[i];
      out << ',' << f.x() << ',' << f.y() << ',' << f.z();
    }
    out << '\n';
  }
}

}  // namespace artflow

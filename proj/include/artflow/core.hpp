#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace artflow {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid transform stored as unit quaternion + translation.
struct Pose {
  Quat rotation{1.0, 0.0, 0.0, 0.0};
  Vec3 translation{0.0, 0.0, 0.0};

  static Pose identity() { return {}; }

  static Pose from(const Quat& q, const Vec3& t) {
    Pose p;
    p.rotation = q.normalized();
    p.translation = t;
    return p;
  }

  static Pose rotate(const Quat& q) { return from(q, Vec3::Zero()); }
  static Pose translate(const Vec3& t) { return {Quat::Identity(), t}; }

  Pose operator*(const Pose& other) const {
    Pose out;
    out.rotation = (rotation * other.rotation).normalized();
    out.translation = translation + rotation * other.translation;
    return out;
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

/// Deterministic RNG. All scalar draws go through fixed bit-level scaling so
/// streams are reproducible across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  Vec3 unit_vector() {
    while (true) {
      Vec3 v(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      const double n = v.norm();
      if (n > 1e-6 && n <= 1.0) return v / n;
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// Stable seed derivation for per-item streams (splitmix64 over a running hash).
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  std::uint64_t z = h + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) h = hash_combine(h, static_cast<std::uint64_t>(c));
  return hash_combine(h, static_cast<std::uint64_t>(s.size()));
}

struct ParseError : std::runtime_error {
  int line = 0;
  ParseError(int line_, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace artflow

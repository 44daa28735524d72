#include "deepdetect/homography.hpp"

#include "deepdetect/errors.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>

namespace deepdetect {

namespace {

Eigen::Matrix3d normalized(const Eigen::Matrix3d& m) {
  if (std::abs(m(2, 2)) > 1e-12) return m / m(2, 2);
  return m / m.norm();
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw InvalidArgument("homography has non-finite entries");
  const double scale = m.norm();
  if (!(scale > 0.0) || std::abs((m / scale).determinant()) <= 1e-12) {
    throw InvalidArgument("homography is singular");
  }
  m_ = normalized(m);
}

Homography Homography::from_row_major(const std::array<double, 9>& v) {
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return Homography(m);
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = m_(r, c);
  return out;
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Eigen::Vector2d project_point(const Homography& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h.matrix() * p.homogeneous();
  if (std::abs(q.z()) < 1e-12) throw PointAtInfinity("point projects to infinity");
  return q.hnormalized();
}

Homography compose(const Homography& second, const Homography& first) {
  return Homography(second.matrix() * first.matrix());
}

}  // namespace deepdetect

#pragma once

#include <Eigen/Core>

#include <array>

namespace deepdetect {

// Projective map of the plane. Stored normalized so that m(2,2) == 1 whenever
// |m(2,2)| is not negligible, otherwise to unit Frobenius norm.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  // Throws InvalidArgument when |det| <= 1e-12.
  explicit Homography(const Eigen::Matrix3d& m);
  static Homography from_row_major(const std::array<double, 9>& values);
  static Homography translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const { return m_; }
  std::array<double, 9> row_major() const;
  Homography inverse() const;

 private:
  Eigen::Matrix3d m_;
};

// (x', y', w') = H (x, y, 1); returns (x'/w', y'/w'). Throws PointAtInfinity when |w'| < 1e-12.
Eigen::Vector2d project_point(const Homography& h, const Eigen::Vector2d& p);

// Composition: apply `second` after `first`.
Homography compose(const Homography& second, const Homography& first);

}  // namespace deepdetect

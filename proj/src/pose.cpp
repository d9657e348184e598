#include "lmsynth/pose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "lmsynth/error.hpp"

namespace lmsynth {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct CoefficientRange {
  double lo;
  double hi;
};

// Scaled-orthographic fit of centered 3D points to centered 2D points: the
// affine least-squares map projected onto the nearest pair of orthonormal rows.
struct RigidFit {
  double scale;
  Eigen::Matrix<double, 2, 3> rows;
};

RigidFit fit_weak_perspective(const Points3& shape_c, const Points2& frame_c) {
  const Eigen::Matrix3d gram = shape_c.transpose() * shape_c;
  const Eigen::Matrix<double, 2, 3> cross = frame_c.transpose() * shape_c;
  const Eigen::Matrix<double, 2, 3> affine = gram.ldlt().solve(cross.transpose()).transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(affine, Eigen::ComputeFullU | Eigen::ComputeFullV);
  RigidFit fit;
  fit.scale = 0.5 * (svd.singularValues()(0) + svd.singularValues()(1));
  fit.rows = svd.matrixU() * svd.matrixV().leftCols<2>().transpose();
  return fit;
}

Points3 centered(const Points3& p) { return p.rowwise() - p.colwise().mean(); }

}  // namespace

void PoseAngles::validate() const {
  for (double a : {yaw, pitch, roll}) {
    if (!std::isfinite(a) || a < -90.0 || a > 90.0) {
      fail(ErrorCode::InvalidArgument, "pose angle out of [-90, 90]: " + std::to_string(a));
    }
  }
}

Eigen::Matrix3d rotation_matrix(const PoseAngles& pose) {
  const double y = pose.yaw * kDeg, p = pose.pitch * kDeg, r = pose.roll * kDeg;
  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0, 0, std::cos(p), -std::sin(p), 0, std::sin(p), std::cos(p);
  ry << std::cos(y), 0, std::sin(y), 0, 1, 0, -std::sin(y), 0, std::cos(y);
  rz << std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r), 0, 0, 0, 1;
  return rz * ry * rx;
}

PoseAngles euler_from_rotation(const Eigen::Matrix3d& R) {
  PoseAngles pose;
  pose.yaw = std::asin(std::clamp(-R(2, 0), -1.0, 1.0)) / kDeg;
  pose.pitch = std::atan2(R(2, 1), R(2, 2)) / kDeg;
  pose.roll = std::atan2(R(1, 0), R(0, 0)) / kDeg;
  return pose;
}

PoseAngles estimate_pose(const LandmarkFrame& frame, const FaceTemplate3D& tmpl) {
  const Points2 frame_c = frame.coords().rowwise() - frame.coords().colwise().mean();
  if (!(frame_c.squaredNorm() > 1e-12)) {
    fail(ErrorCode::DegenerateFrame, "cannot estimate pose of a degenerate frame");
  }

  std::vector<Points3> bases;
  std::vector<CoefficientRange> ranges;
  for (const auto& b : tmpl.identity_basis) {
    bases.push_back(centered(b.offsets));
    ranges.push_back({-1.0, 1.0});
  }
  for (const auto& b : tmpl.expression_basis) {
    bases.push_back(centered(b.offsets));
    ranges.push_back(b.name == "eyeball_offset" ? CoefficientRange{-1.0, 1.0}
                                                : CoefficientRange{0.0, 1.0});
  }
  const int n = static_cast<int>(bases.size());
  const Points3 base_c = centered(tmpl.base);

  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(n);
  RigidFit fit{};
  constexpr int kIterations = 60;
  constexpr double kRidge = 1e-6;
  for (int iter = 0; iter < kIterations; ++iter) {
    Points3 shape = base_c;
    for (int j = 0; j < n; ++j) shape += coeff(j) * bases[j];
    fit = fit_weak_perspective(shape, frame_c);

    // Shape coefficients given the rigid part: linear least squares.
    Eigen::MatrixXd A(kFrameDim, n);
    for (int j = 0; j < n; ++j) {
      const Points2 proj = fit.scale * bases[j] * fit.rows.transpose();
      A.col(j) = Eigen::Map<const Eigen::VectorXd>(proj.data(), kFrameDim);
    }
    const Points2 residual = frame_c - fit.scale * base_c * fit.rows.transpose();
    const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(residual.data(), kFrameDim);
    Eigen::MatrixXd normal = A.transpose() * A;
    normal.diagonal().array() += kRidge;
    Eigen::VectorXd next = normal.ldlt().solve(A.transpose() * target);
    for (int j = 0; j < n; ++j) next(j) = std::clamp(next(j), ranges[j].lo, ranges[j].hi);
    const double change = (next - coeff).norm();
    coeff = next;
    if (change < 1e-12) break;
  }
  Points3 shape = base_c;
  for (int j = 0; j < n; ++j) shape += coeff(j) * bases[j];
  fit = fit_weak_perspective(shape, frame_c);

  Eigen::Matrix3d R;
  R.row(0) = fit.rows.row(0);
  R.row(1) = fit.rows.row(1);
  R.row(2) = fit.rows.row(0).cross(fit.rows.row(1));
  return euler_from_rotation(R);
}

}  // namespace lmsynth

#include "lmsynth/geometry.hpp"

#include <cmath>

#include "lmsynth/error.hpp"

namespace lmsynth {

Eigen::Matrix2d SimilarityTransform::linear() const {
  const double c = std::cos(rotation), s = std::sin(rotation);
  Eigen::Matrix2d m;
  m << c, -s, s, c;
  return scale * m;
}

Eigen::Vector2d SimilarityTransform::apply(const Eigen::Vector2d& p) const {
  return linear() * p + translation;
}

SimilarityTransform SimilarityTransform::inverse() const {
  if (!(scale > 0.0)) fail(ErrorCode::InvalidArgument, "similarity scale must be positive");
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = -rotation;
  inv.translation = -(inv.linear() * translation);
  return inv;
}

SimilarityTransform fit_similarity(const LandmarkFrame& src, const LandmarkFrame& dst) {
  const Eigen::RowVector2d mu_src = src.coords().colwise().mean();
  const Eigen::RowVector2d mu_dst = dst.coords().colwise().mean();
  const Points2 a = src.coords().rowwise() - mu_src;
  const Points2 b = dst.coords().rowwise() - mu_dst;

  const double var = a.squaredNorm();
  if (!(var > 1e-20)) fail(ErrorCode::DegenerateFrame, "source frame has zero spatial variance");

  // Optimal rotation angle from the summed dot and cross products.
  const double dot = (a.array() * b.array()).sum();
  const double cross = (a.col(0).array() * b.col(1).array() - a.col(1).array() * b.col(0).array()).sum();

  SimilarityTransform T;
  T.rotation = std::atan2(cross, dot);
  T.scale = std::hypot(dot, cross) / var;
  if (!(T.scale > 0.0)) fail(ErrorCode::DegenerateFrame, "frames are uncorrelated; scale is zero");
  T.translation = mu_dst.transpose() - T.linear() * mu_src.transpose();
  return T;
}

LandmarkFrame apply_transform(const LandmarkFrame& frame, const SimilarityTransform& T) {
  const Eigen::Matrix2d L = T.linear();
  Points2 p = frame.coords() * L.transpose();
  p.rowwise() += T.translation.transpose();
  return LandmarkFrame(p);
}

double alignment_residual(const LandmarkFrame& src, const LandmarkFrame& dst,
                          const SimilarityTransform& T) {
  return (apply_transform(src, T).coords() - dst.coords()).squaredNorm();
}

LandmarkFrame normalize_to_template(const LandmarkFrame& frame, const LandmarkFrame& canonical) {
  const LandmarkFrame aligned = apply_transform(frame, fit_similarity(frame, canonical));
  Points2 p = aligned.coords();
  p.rowwise() -= interocular_midpoint(aligned);
  return LandmarkFrame(p);
}

}  // namespace lmsynth

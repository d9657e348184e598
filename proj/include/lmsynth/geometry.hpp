#pragma once

#include <Eigen/Core>

#include "lmsynth/landmark.hpp"

namespace lmsynth {

/// p -> scale * R(rotation) * p + translation; rotation in radians.
struct SimilarityTransform {
  double scale = 1.0;
  double rotation = 0.0;
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();

  static SimilarityTransform identity() { return {}; }

  SimilarityTransform inverse() const;
  Eigen::Matrix2d linear() const;
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
};

/// Closed-form least-squares similarity mapping src onto dst.
SimilarityTransform fit_similarity(const LandmarkFrame& src, const LandmarkFrame& dst);

LandmarkFrame apply_transform(const LandmarkFrame& frame, const SimilarityTransform& T);

/// Sum of squared distances between T(src) and dst.
double alignment_residual(const LandmarkFrame& src, const LandmarkFrame& dst,
                          const SimilarityTransform& T);

/// Similarity-aligns a frame onto a canonical template and re-centers it on the
/// inter-ocular midpoint.
LandmarkFrame normalize_to_template(const LandmarkFrame& frame, const LandmarkFrame& canonical);

}  // namespace lmsynth

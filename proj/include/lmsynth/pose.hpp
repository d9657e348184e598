#pragma once

#include <Eigen/Core>

#include "lmsynth/face_template.hpp"
#include "lmsynth/landmark.hpp"

namespace lmsynth {

/// Head pose in degrees, each angle in [-90, 90].
///
/// The rotation is R = Rz(roll) * Ry(yaw) * Rx(pitch): roll is applied last,
/// in the image plane, so an in-plane rotation of a frame changes roll only.
struct PoseAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  void validate() const;
  bool operator==(const PoseAngles&) const = default;
};

Eigen::Matrix3d rotation_matrix(const PoseAngles& pose);
PoseAngles euler_from_rotation(const Eigen::Matrix3d& R);

/// Weak-perspective template fit. Alternates a scaled-orthographic fit of the
/// current 3D shape with a ridge-regularized solve for the template's shape
/// coefficients, then reads Euler angles off the recovered rotation.
PoseAngles estimate_pose(const LandmarkFrame& frame,
                         const FaceTemplate3D& tmpl = FaceTemplate3D::canonical());

}  // namespace lmsynth

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lmsynth/landmark.hpp"

namespace lmsynth {

using Points3 = Eigen::Matrix<double, kNumLandmarks, 3, Eigen::RowMajor>;

struct NamedBasis {
  std::string name;
  Points3 offsets;
};

/// Mean 3D face in WFLW order plus linear identity and expression offset bases.
/// x right, y down (image convention), z toward the camera; the inter-ocular
/// midpoint of the eye corners sits at the origin.
struct FaceTemplate3D {
  Points3 base;
  std::vector<NamedBasis> identity_basis;
  std::vector<NamedBasis> expression_basis;

  /// The shipped hand-authored template.
  static const FaceTemplate3D& canonical();

  /// Index into identity_basis, or -1.
  int identity_index(std::string_view name) const;
  /// Index into expression_basis, or -1.
  int expression_index(std::string_view name) const;

  /// Orthographic xy projection of the base shape.
  LandmarkFrame frontal_frame() const;
};

inline constexpr const char* kIdentityAttributes[] = {
    "face_width", "jaw_width",  "nose_width",    "nose_length",
    "eye_spacing", "eye_size", "lip_thickness", "brow_height",
};
inline constexpr int kNumIdentityAttributes = 8;

inline constexpr const char* kExpressionAttributes[] = {
    "mouth_open", "smile", "eye_closure", "eyeball_offset",
};
inline constexpr int kNumExpressionAttributes = 4;

}  // namespace lmsynth

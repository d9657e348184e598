#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lmsynth {

inline constexpr int kNumLandmarks = 98;
inline constexpr int kFrameDim = 2 * kNumLandmarks;

/// Half-open index range [begin, end) naming one facial part.
struct LandmarkGroup {
  std::string_view name;
  int begin;
  int end;

  int size() const { return end - begin; }
  bool contains(int i) const { return i >= begin && i < end; }
};

/// WFLW 98-point grouping. Swapping conventions means replacing this table
/// and the mirror permutation below.
class LandmarkTopology {
 public:
  static constexpr std::array<LandmarkGroup, 7> kGroups{{
      {"contour", 0, 33},
      {"brows", 33, 51},
      {"nose", 51, 60},
      {"eyes", 60, 76},
      {"outer_lip", 76, 88},
      {"inner_lip", 88, 96},
      {"pupils", 96, 98},
  }};

  static const LandmarkGroup& group(std::string_view name);
  static const LandmarkGroup& contour() { return kGroups[0]; }
  static const LandmarkGroup& brows() { return kGroups[1]; }
  static const LandmarkGroup& nose() { return kGroups[2]; }
  static const LandmarkGroup& eyes() { return kGroups[3]; }
  static const LandmarkGroup& outer_lip() { return kGroups[4]; }
  static const LandmarkGroup& inner_lip() { return kGroups[5]; }
  static const LandmarkGroup& pupils() { return kGroups[6]; }

  /// Index of the bilaterally mirrored landmark (left/right swap).
  static int mirror_index(int i);
  static const std::array<int, kNumLandmarks>& mirror_permutation();

  /// Throws if the groups do not partition {0..97} or the mirror map is not an involution.
  static void validate();
};

using Points2 = Eigen::Matrix<double, kNumLandmarks, 2, Eigen::RowMajor>;

/// 98 finite 2D points in normalized face coordinates.
class LandmarkFrame {
 public:
  LandmarkFrame() : coords_(Points2::Zero()) {}
  explicit LandmarkFrame(const Points2& coords);

  const Points2& coords() const { return coords_; }
  Eigen::RowVector2d point(int i) const { return coords_.row(i); }
  double x(int i) const { return coords_(i, 0); }
  double y(int i) const { return coords_(i, 1); }

  bool operator==(const LandmarkFrame& other) const { return coords_ == other.coords_; }

 private:
  Points2 coords_;
};

/// Ordered frames of one identity, length >= 2.
class LandmarkSequence {
 public:
  explicit LandmarkSequence(std::vector<LandmarkFrame> frames,
                            std::optional<int> identity_label = std::nullopt);

  const std::vector<LandmarkFrame>& frames() const { return frames_; }
  const LandmarkFrame& operator[](std::size_t k) const { return frames_[k]; }
  std::size_t size() const { return frames_.size(); }
  std::optional<int> identity_label() const { return identity_label_; }

 private:
  std::vector<LandmarkFrame> frames_;
  std::optional<int> identity_label_;
};

/// Frame k (0-based) = std::lerp(a, b, t) with t = k / (K - 1); endpoints are exact.
LandmarkSequence upsample_linear(const LandmarkFrame& a, const LandmarkFrame& b, int K);

/// Row-major (x0, y0, x1, y1, ...) interleaving.
std::array<double, kFrameDim> flatten(const LandmarkFrame& frame);
LandmarkFrame unflatten(std::span<const double> values);

/// I.i.d. Gaussian offsets with standard deviation sigma on every coordinate.
LandmarkFrame add_noise(const LandmarkFrame& frame, double sigma, std::uint64_t seed);

/// Horizontal flip x -> -x with left/right landmark relabeling.
LandmarkFrame mirror(const LandmarkFrame& frame);

/// Mean of the four eye corners (60, 64, 68, 72).
Eigen::RowVector2d interocular_midpoint(const LandmarkFrame& frame);

/// Per-point Euclidean distances between two frames.
std::array<double, kNumLandmarks> point_distances(const LandmarkFrame& a, const LandmarkFrame& b);

/// Root mean square over all 196 coordinates of a - b.
double rms_error(const LandmarkFrame& a, const LandmarkFrame& b);

}  // namespace lmsynth

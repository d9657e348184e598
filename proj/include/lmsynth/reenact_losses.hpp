#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lmsynth/landmark.hpp"

namespace lmsynth {

/// H x W x C, channel-fastest, values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  std::size_t size() const { return data_.size(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& o) const { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }
  /// Throws InvalidArgument for empty shapes, NonFinite or values outside [0, 1].
  void validate() const;

  bool operator==(const Image& o) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * w_ + x) * c_ + c;
  }
  int h_ = 0, w_ = 0, c_ = 0;
  std::vector<double> data_;
};

/// H x W attention weights in [0, 1], broadcast over channels.
using Mask = Image;

using EmbedFn = std::function<std::vector<double>(const Image&)>;
using LandmarkFn = std::function<LandmarkFrame(const Image&)>;
/// One discriminator: image -> grid of scores.
using Discriminator = std::function<std::vector<double>(const Image&)>;

/// Discriminator i sees the image halved i times.
struct MultiScaleD {
  std::vector<Discriminator> scales;
};

struct AdvLoss {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

/// Least-squares GAN terms summed over scales; each scale averages over its outputs.
AdvLoss adv_multiscale_loss(const Image& fake, const Image& real, const MultiScaleD& d);

/// 2x2 mean pooling. Throws OddDimension.
Image downsample_half(const Image& img);

/// 1 - cos(theta(gen), theta(src)). Throws ZeroEmbedding.
double identity_loss(const Image& gen, const Image& src, const EmbedFn& theta);

/// Mean over pixels and channels of |gen * M - real * M|.
double mask_loss(const Image& gen, const Image& real, const Mask& mask);

/// Contour indices 0..32.
std::vector<int> default_boundary_subset();

/// Mean smooth-L1 over both coordinates of the chosen landmarks of eta(gen) and eta(real).
double boundary_loss(const Image& gen, const Image& real, const LandmarkFn& eta,
                     std::span<const int> subset);
double boundary_loss(const Image& gen, const Image& real, const LandmarkFn& eta);

}  // namespace lmsynth

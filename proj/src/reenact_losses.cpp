#include "lmsynth/reenact_losses.hpp"

#include <cmath>
#include <numeric>

#include "lmsynth/ad/ops.hpp"
#include "lmsynth/error.hpp"

namespace lmsynth {

Image::Image(int height, int width, int channels, double fill) : h_(height), w_(width), c_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    fail(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

void Image::validate() const {
  if (h_ < 1 || w_ < 1 || c_ < 1) fail(ErrorCode::InvalidArgument, "empty image");
  for (double v : data_) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "non-finite pixel");
    if (v < 0.0 || v > 1.0) fail(ErrorCode::InvalidArgument, "pixel outside [0, 1]");
  }
}

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, std::string(what) + ": image shapes differ");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) fail(ErrorCode::ShapeMismatch, "discriminator returned no scores");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

Image downsample_half(const Image& img) {
  if (img.height() % 2 != 0 || img.width() % 2 != 0) {
    fail(ErrorCode::OddDimension, "cannot halve a " + std::to_string(img.height()) + "x" +
                                      std::to_string(img.width()) + " image");
  }
  Image out(img.height() / 2, img.width() / 2, img.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(y, x, c) = 0.25 * (img.at(2 * y, 2 * x, c) + img.at(2 * y, 2 * x + 1, c) +
                                  img.at(2 * y + 1, 2 * x, c) + img.at(2 * y + 1, 2 * x + 1, c));
      }
    }
  }
  return out;
}

AdvLoss adv_multiscale_loss(const Image& fake, const Image& real, const MultiScaleD& d) {
  require_same(fake, real, "adv_multiscale_loss");
  if (d.scales.empty()) fail(ErrorCode::InvalidArgument, "multi-scale discriminator has no scales");
  AdvLoss out;
  Image f = fake, r = real;
  for (std::size_t i = 0; i < d.scales.size(); ++i) {
    if (i > 0) {
      f = downsample_half(f);
      r = downsample_half(r);
    }
    std::vector<double> sr = d.scales[i](r);
    std::vector<double> sf = d.scales[i](f);
    for (double& v : sr) v = (v - 1.0) * (v - 1.0);
    std::vector<double> gf = sf;
    for (double& v : gf) v = (v - 1.0) * (v - 1.0);
    for (double& v : sf) v = v * v;
    out.d_loss += 0.5 * (mean_of(sr) + mean_of(sf));
    out.g_loss += 0.5 * mean_of(gf);
  }
  return out;
}

double identity_loss(const Image& gen, const Image& src, const EmbedFn& theta) {
  const std::vector<double> u = theta(gen);
  const std::vector<double> v = theta(src);
  if (u.size() != v.size()) fail(ErrorCode::DimensionMismatch, "embedding sizes differ");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) fail(ErrorCode::ZeroEmbedding, "zero embedding vector");
  return 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
}

double mask_loss(const Image& gen, const Image& real, const Mask& mask) {
  require_same(gen, real, "mask_loss");
  if (mask.height() != gen.height() || mask.width() != gen.width() || mask.channels() != 1) {
    fail(ErrorCode::ShapeMismatch, "mask_loss: mask must be H x W x 1 matching the images");
  }
  double total = 0.0;
  for (int y = 0; y < gen.height(); ++y) {
    for (int x = 0; x < gen.width(); ++x) {
      const double m = mask.at(y, x);
      for (int c = 0; c < gen.channels(); ++c) total += std::abs(gen.at(y, x, c) * m - real.at(y, x, c) * m);
    }
  }
  return total / static_cast<double>(gen.size());
}

std::vector<int> default_boundary_subset() {
  const auto& g = LandmarkTopology::group("contour");
  std::vector<int> idx(g.end - g.begin);
  std::iota(idx.begin(), idx.end(), g.begin);
  return idx;
}

double boundary_loss(const Image& gen, const Image& real, const LandmarkFn& eta, std::span<const int> subset) {
  if (subset.empty()) fail(ErrorCode::InvalidArgument, "boundary subset is empty");
  const LandmarkFrame a = eta(gen);
  const LandmarkFrame b = eta(real);
  double total = 0.0;
  for (int i : subset) {
    if (i < 0 || i >= kNumLandmarks) fail(ErrorCode::InvalidArgument, "landmark index out of range");
    total += ad::smooth_l1_value(a.x(i) - b.x(i)) + ad::smooth_l1_value(a.y(i) - b.y(i));
  }
  return total / (2.0 * static_cast<double>(subset.size()));
}

double boundary_loss(const Image& gen, const Image& real, const LandmarkFn& eta) {
  const auto subset = default_boundary_subset();
  return boundary_loss(gen, real, eta, subset);
}

}  // namespace lmsynth

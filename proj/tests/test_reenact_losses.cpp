#include <doctest.h>

#include <cmath>
#include <random>

#include "lmsynth/reenact_losses.hpp"
#include "support.hpp"

using namespace lmsynth;
using lmsynth::test::error_code;

namespace {

Image random_image(int h, int w, int c, std::mt19937_64& rng) {
  Image img(h, w, c);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

Discriminator constant_d(double v, int outputs = 4) {
  return [v, outputs](const Image&) { return std::vector<double>(outputs, v); };
}

/// Per-pixel scores: the first channel itself.
std::vector<double> pixel_d(const Image& img) {
  std::vector<double> out;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.push_back(img.at(y, x, 0));
  }
  return out;
}

std::vector<double> channel_means(const Image& img) {
  std::vector<double> m(img.channels(), 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) m[c] += img.at(y, x, c);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("image validation") {
  CHECK(error_code([] { Image(0, 4, 1); }) == ErrorCode::InvalidArgument);
  Image img(2, 2, 1, 0.5);
  CHECK_NOTHROW(img.validate());
  img.at(1, 1) = 1.5;
  CHECK(error_code([&] { img.validate(); }) == ErrorCode::InvalidArgument);
  img.at(1, 1) = std::nan("");
  CHECK(error_code([&] { img.validate(); }) == ErrorCode::NonFinite);
}

TEST_CASE("adv_multiscale_loss") {
  const Image fake(8, 8, 3, 0.2), real(8, 8, 3, 0.7);

  SUBCASE("perfect discriminator") {
    const MultiScaleD d{{[&](const Image& img) { return std::vector<double>(3, img == real ? 1.0 : 0.0); }}};
    const AdvLoss l = adv_multiscale_loss(fake, real, d);
    CHECK(l.d_loss == 0.0);
    CHECK(l.g_loss == 0.5);
  }
  SUBCASE("fooled discriminator gives zero generator loss") {
    const AdvLoss l = adv_multiscale_loss(fake, real, {{constant_d(1.0)}});
    CHECK(l.g_loss == 0.0);
    CHECK(l.d_loss == 0.5);
  }
  SUBCASE("sum over scales") {
    std::mt19937_64 rng(3);
    const Image f = random_image(8, 8, 2, rng), r = random_image(8, 8, 2, rng);
    const Discriminator d1 = pixel_d;
    const Discriminator d2 = [](const Image& img) {
      auto s = pixel_d(img);
      for (auto& v : s) v = 2 * v - 0.3;
      return s;
    };
    const AdvLoss both = adv_multiscale_loss(f, r, {{d1, d2}});
    const AdvLoss first = adv_multiscale_loss(f, r, {{d1}});
    const AdvLoss second = adv_multiscale_loss(downsample_half(f), downsample_half(r), {{d2}});
    CHECK(std::abs(both.d_loss - (first.d_loss + second.d_loss)) <= 1e-12);
    CHECK(std::abs(both.g_loss - (first.g_loss + second.g_loss)) <= 1e-12);

    // Direct formula for the first scale.
    const auto sr = pixel_d(r), sf = pixel_d(f);
    double dr = 0, df = 0, g = 0;
    for (std::size_t i = 0; i < sr.size(); ++i) {
      dr += (sr[i] - 1) * (sr[i] - 1);
      df += sf[i] * sf[i];
      g += (sf[i] - 1) * (sf[i] - 1);
    }
    const double n = static_cast<double>(sr.size());
    CHECK(std::abs(first.d_loss - 0.5 * (dr / n + df / n)) <= 1e-12);
    CHECK(std::abs(first.g_loss - 0.5 * g / n) <= 1e-12);
  }
  SUBCASE("errors") {
    CHECK(error_code([&] { adv_multiscale_loss(fake, Image(4, 4, 3), {{constant_d(0)}}); }) ==
          ErrorCode::ShapeMismatch);
    CHECK(error_code([&] { adv_multiscale_loss(fake, real, {}); }) == ErrorCode::InvalidArgument);
    CHECK(error_code([&] { adv_multiscale_loss(Image(6, 6, 1), Image(6, 6, 1), {{constant_d(0), constant_d(0), constant_d(0)}}); }) ==
          ErrorCode::OddDimension);
  }
}

TEST_CASE("downsample_half") {
  const Image c = downsample_half(Image(6, 4, 2, 0.3));
  CHECK(c.height() == 3);
  CHECK(c.width() == 2);
  for (double v : c.data()) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

  Image checker(4, 4, 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) checker.at(y, x) = (x + y) % 2;
  }
  const Image flat = downsample_half(checker);
  for (double v : flat.data()) CHECK(v == 0.5);

  // 4x4 ramp (4y + x) / 16: block means by hand.
  Image ramp(4, 4, 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) ramp.at(y, x) = (4 * y + x) / 16.0;
  }
  const Image d = downsample_half(ramp);
  CHECK(d.at(0, 0) == doctest::Approx(2.5 / 16));
  CHECK(d.at(0, 1) == doctest::Approx(4.5 / 16));
  CHECK(d.at(1, 0) == doctest::Approx(10.5 / 16));
  CHECK(d.at(1, 1) == doctest::Approx(12.5 / 16));

  CHECK(error_code([] { downsample_half(Image(5, 4, 1)); }) == ErrorCode::OddDimension);
}

TEST_CASE("identity_loss") {
  const Image a(2, 2, 2, 0.0), b(2, 2, 2, 1.0);
  auto fixed = [](std::vector<double> ga, std::vector<double> gb) {
    return [ga, gb](const Image& img) { return img.data()[0] == 0.0 ? ga : gb; };
  };
  CHECK(identity_loss(a, b, fixed({1, 2, 3}, {1, 2, 3})) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(identity_loss(a, b, fixed({1, 2, 3}, {-2, -4, -6})) - 2.0) <= 1e-12);
  CHECK(std::abs(identity_loss(a, b, fixed({1, 0}, {0, 5})) - 1.0) <= 1e-12);
  // Positive rescaling of either embedding does not matter.
  CHECK(identity_loss(a, b, fixed({1, 2}, {3, -1})) ==
        doctest::Approx(identity_loss(a, b, fixed({10, 20}, {0.3, -0.1}))).epsilon(1e-12));
  CHECK(error_code([&] { identity_loss(a, b, fixed({0, 0}, {1, 1})); }) == ErrorCode::ZeroEmbedding);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const double l = identity_loss(random_image(3, 3, 3, rng), random_image(3, 3, 3, rng), [](const Image& img) {
      auto m = channel_means(img);
      m[1] -= 4.0;
      return m;
    });
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
  }
}

TEST_CASE("mask_loss") {
  std::mt19937_64 rng(8);
  const Image g = random_image(5, 6, 3, rng), r = random_image(5, 6, 3, rng);
  double l1 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) l1 += std::abs(g.data()[i] - r.data()[i]);
  l1 /= static_cast<double>(g.size());
  CHECK(std::abs(mask_loss(g, r, Mask(5, 6, 1, 1.0)) - l1) <= 1e-12);
  CHECK(mask_loss(g, r, Mask(5, 6, 1, 0.0)) == 0.0);

  // Left-half mask, gen 0.8 and real 0.2 everywhere: 0.6 on half the pixels.
  Mask left(4, 4, 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 2; ++x) left.at(y, x) = 1.0;
  }
  CHECK(std::abs(mask_loss(Image(4, 4, 3, 0.8), Image(4, 4, 3, 0.2), left) - 0.3) <= 1e-12);

  SUBCASE("monotone in the mask") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
      Mask m(5, 6, 1), m2(5, 6, 1);
      for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = u(rng);
        m2.data()[i] = m.data()[i] + (1 - m.data()[i]) * u(rng);
      }
      CHECK(mask_loss(g, r, m2) >= mask_loss(g, r, m));
    }
  }
  CHECK(error_code([&] { mask_loss(g, r, Mask(5, 5, 1, 1.0)); }) == ErrorCode::ShapeMismatch);
  CHECK(error_code([&] { mask_loss(g, Image(5, 6, 1), Mask(5, 6, 1, 1.0)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("boundary_loss") {
  const Image gen(2, 2, 1, 0.0), real(2, 2, 1, 1.0);
  auto offset = [](double d) {
    return [d](const Image& img) {
      Points2 p = Points2::Zero();
      if (img.data()[0] == 0.0) p.array() += d;
      return LandmarkFrame(p);
    };
  };
  CHECK(boundary_loss(gen, real, offset(0.0)) == 0.0);
  CHECK(std::abs(boundary_loss(gen, real, offset(0.5)) - 0.125) <= 1e-12);
  CHECK(std::abs(boundary_loss(gen, real, offset(2.0)) - 1.5) <= 1e-12);
  CHECK(std::abs(boundary_loss(gen, real, offset(-2.0)) - 1.5) <= 1e-12);

  const auto subset = default_boundary_subset();
  CHECK(subset.size() == 33);
  CHECK(subset.front() == 0);
  CHECK(subset.back() == 32);

  // Only the subset counts.
  auto moves_nose = [](const Image& img) {
    Points2 p = Points2::Zero();
    if (img.data()[0] == 0.0) p.row(55).setConstant(3.0);
    return LandmarkFrame(p);
  };
  CHECK(boundary_loss(gen, real, moves_nose) == 0.0);
  std::vector<int> all(98);
  for (int i = 0; i < 98; ++i) all[i] = i;
  CHECK(std::abs(boundary_loss(gen, real, moves_nose, all) - 2.5 * 2 / 196) <= 1e-12);

  std::mt19937_64 rng(1);
  const LandmarkFn eta = [](const Image& img) {
    Points2 p = Points2::Zero();
    p.col(0).setConstant(img.data()[0]);
    return LandmarkFrame(p);
  };
  for (int trial = 0; trial < 10; ++trial) {
    const Image g = random_image(3, 3, 1, rng);
    CHECK(boundary_loss(g, g, eta) == 0.0);
  }
}

#include "lmsynth/face_template.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace lmsynth {

namespace {

// Points are authored for the image-left half and the midline; the right half
// is filled in through the mirror permutation.
class HalfFace {
 public:
  HalfFace() : pts_(Points3::Zero()) { defined_.fill(false); }

  void set(int i, double x, double y, double z) {
    pts_.row(i) << x, y, z;
    defined_[i] = true;
  }

  // Mirror-symmetric completion: right point = (-x, y, z) of its left partner.
  Points3 symmetric() const {
    const auto& perm = LandmarkTopology::mirror_permutation();
    Points3 out = pts_;
    for (int i = 0; i < kNumLandmarks; ++i) {
      const int m = perm[i];
      if (m == i) {
        out(i, 0) = 0.0;
      } else if (!defined_[i] && defined_[m]) {
        out.row(i) << -pts_(m, 0), pts_(m, 1), pts_(m, 2);
      }
    }
    return out;
  }

 private:
  Points3 pts_;
  std::array<bool, kNumLandmarks> defined_;
};

Points3 build_base() {
  HalfFace f;
  const double pi = std::numbers::pi;

  // Contour: ear (0) to chin (16); U-shaped jaw.
  for (int i = 0; i <= 16; ++i) {
    const double a = pi * i / 32.0;
    const double c = std::cos(a), s = std::sin(a);
    f.set(i, -0.82 * c * (1.0 - 0.12 * s * s), -0.12 + 1.02 * s, -0.55 * c * c);
  }
  // Left brow: upper edge outer -> inner (33..37), lower edge inner -> outer (38..41).
  for (int j = 0; j < 5; ++j) {
    const double u = j / 4.0;
    const double x = -0.62 + 0.48 * u;
    f.set(33 + j, x, -0.24 - 0.06 * std::sin(pi * (0.25 + 0.75 * u)), 0.32 - 0.35 * std::abs(x));
  }
  for (int j = 0; j < 4; ++j) {
    const double u = j / 3.0;
    const double x = -0.16 - 0.42 * u;
    f.set(38 + j, x, -0.20 - 0.04 * std::sin(pi * (1.0 - 0.75 * u)), 0.32 - 0.35 * std::abs(x));
  }
  // Nose bridge (51..54) on the midline, base (55..59).
  f.set(51, 0.0, -0.02, 0.35);
  f.set(52, 0.0, 0.09, 0.42);
  f.set(53, 0.0, 0.20, 0.50);
  f.set(54, 0.0, 0.31, 0.56);
  f.set(55, -0.13, 0.38, 0.33);
  f.set(56, -0.065, 0.40, 0.40);
  f.set(57, 0.0, 0.41, 0.44);
  // Left eye: outer corner 60, upper lid 61..63, inner corner 64, lower lid 65..67.
  f.set(60, -0.48, 0.0, 0.18);
  f.set(61, -0.445, -0.045, 0.21);
  f.set(62, -0.34, -0.06, 0.23);
  f.set(63, -0.235, -0.045, 0.24);
  f.set(64, -0.20, 0.0, 0.24);
  f.set(65, -0.235, 0.04, 0.235);
  f.set(66, -0.34, 0.05, 0.225);
  f.set(67, -0.445, 0.04, 0.205);
  // Outer lip: left corner 76, upper 77..81, right corner 82, lower 83..87.
  f.set(76, -0.25, 0.60, 0.28);
  f.set(77, -0.17, 0.54, 0.36);
  f.set(78, -0.07, 0.515, 0.41);
  f.set(79, 0.0, 0.525, 0.42);
  f.set(87, -0.17, 0.67, 0.35);
  f.set(86, -0.07, 0.70, 0.39);
  f.set(85, 0.0, 0.705, 0.40);
  // Inner lip: left corner 88, upper 89..91, right corner 92, lower 93..95.
  f.set(88, -0.20, 0.60, 0.30);
  f.set(89, -0.08, 0.575, 0.37);
  f.set(90, 0.0, 0.58, 0.38);
  f.set(95, -0.08, 0.625, 0.365);
  f.set(94, 0.0, 0.63, 0.375);
  // Pupils.
  f.set(96, -0.34, 0.0, 0.25);
  return f.symmetric();
}

// Symmetric offset basis from a per-point generator evaluated on left and
// midline points.
template <typename Fn>
Points3 symmetric_basis(const Points3& base, Fn&& offset_for) {
  HalfFace f;
  const auto& perm = LandmarkTopology::mirror_permutation();
  for (int i = 0; i < kNumLandmarks; ++i) {
    const bool left_or_mid = perm[i] == i || base(i, 0) < 0.0;
    if (!left_or_mid) continue;
    const Eigen::RowVector3d d = offset_for(i, base.row(i));
    f.set(i, d(0), d(1), d(2));
  }
  return f.symmetric();
}

int eye_of(int i) { return (i >= 60 && i < 68) || i == 96 ? 0 : 1; }

FaceTemplate3D build_template() {
  FaceTemplate3D t;
  t.base = build_base();
  const Points3& base = t.base;
  using V = Eigen::RowVector3d;
  const double pi = std::numbers::pi;

  const auto in = [](const LandmarkGroup& g, int i) { return g.contains(i); };
  const auto& contour = LandmarkTopology::contour();
  const auto& brows = LandmarkTopology::brows();
  const auto& nose = LandmarkTopology::nose();
  const auto& eyes = LandmarkTopology::eyes();
  const auto& outer_lip = LandmarkTopology::outer_lip();

  t.identity_basis.push_back({"face_width", symmetric_basis(base, [&](int i, const V& p) {
    return in(contour, i) ? V(0.12 * p(0), 0.0, 0.0) : V::Zero().eval();
  })});
  t.identity_basis.push_back({"jaw_width", symmetric_basis(base, [&](int i, const V& p) {
    if (!in(contour, i)) return V::Zero().eval();
    const double s = std::sin(pi * i / 32.0);
    return V(0.15 * p(0) * s * s, 0.0, 0.0);
  })});
  t.identity_basis.push_back({"nose_width", symmetric_basis(base, [&](int i, const V& p) {
    return in(nose, i) && i >= 55 ? V(0.5 * p(0), 0.0, 0.0) : V::Zero().eval();
  })});
  t.identity_basis.push_back({"nose_length", symmetric_basis(base, [&](int i, const V& p) {
    return in(nose, i) ? V(0.0, 0.25 * (p(1) + 0.02), 0.08 * (p(1) + 0.02)) : V::Zero().eval();
  })});
  t.identity_basis.push_back({"eye_spacing", symmetric_basis(base, [&](int i, const V&) {
    return in(eyes, i) || i == 96 ? V(-0.06, 0.0, 0.0) : V::Zero().eval();
  })});
  t.identity_basis.push_back({"eye_size", symmetric_basis(base, [&](int i, const V& p) {
    if (!in(eyes, i)) return V::Zero().eval();
    const V centre = base.row(eye_of(i) == 0 ? 96 : 97);
    return V(0.25 * (p(0) - centre(0)), 0.25 * (p(1) - centre(1)), 0.0);
  })});
  t.identity_basis.push_back({"lip_thickness", symmetric_basis(base, [&](int i, const V& p) {
    if (!in(outer_lip, i) || i == 76 || i == 82) return V::Zero().eval();
    const double w = 1.0 - std::abs(p(0)) / 0.25;
    return V(0.0, (p(1) < 0.6 ? -0.04 : 0.05) * (0.4 + 0.6 * w), 0.0);
  })});
  t.identity_basis.push_back({"brow_height", symmetric_basis(base, [&](int i, const V&) {
    return in(brows, i) ? V(0.0, -0.07, 0.0) : V::Zero().eval();
  })});

  t.expression_basis.push_back({"mouth_open", symmetric_basis(base, [&](int i, const V& p) {
    const double w = 1.0 - std::abs(p(0)) / 0.25;
    if (i == 76 || i == 88) return V(0.0, 0.03, 0.0);
    if (i >= 83 && i <= 87) return V(0.0, 0.12 * (0.3 + 0.7 * w), -0.02);
    if (i >= 93 && i <= 95) return V(0.0, 0.13 * (0.3 + 0.7 * w), -0.02);
    if (i >= 89 && i <= 91) return V(0.0, -0.02 * w, 0.0);
    return V::Zero().eval();
  })});
  t.expression_basis.push_back({"smile", symmetric_basis(base, [&](int i, const V& p) {
    if (i == 76 || i == 88) return V(-0.07, -0.05, -0.03);
    if (i == 77 || i == 87 || i == 89 || i == 95) return V(-0.03, -0.02 * (1.0 + p(0)), 0.0);
    return V::Zero().eval();
  })});
  t.expression_basis.push_back({"eye_closure", symmetric_basis(base, [&](int i, const V&) {
    if ((i >= 61 && i <= 63)) return V(0.0, 0.05, 0.0);
    if ((i >= 65 && i <= 67)) return V(0.0, -0.03, 0.0);
    return V::Zero().eval();
  })});
  {
    // Eyeballs move together, so this basis is antisymmetric in x.
    Points3 gaze = Points3::Zero();
    gaze.row(96) << 0.06, 0.0, 0.0;
    gaze.row(97) << 0.06, 0.0, 0.0;
    t.expression_basis.push_back({"eyeball_offset", gaze});
  }
  return t;
}

}  // namespace

const FaceTemplate3D& FaceTemplate3D::canonical() {
  static const FaceTemplate3D tmpl = build_template();
  return tmpl;
}

int FaceTemplate3D::identity_index(std::string_view name) const {
  for (std::size_t i = 0; i < identity_basis.size(); ++i) {
    if (identity_basis[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int FaceTemplate3D::expression_index(std::string_view name) const {
  for (std::size_t i = 0; i < expression_basis.size(); ++i) {
    if (expression_basis[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

LandmarkFrame FaceTemplate3D::frontal_frame() const {
  Points2 p = base.leftCols<2>();
  return LandmarkFrame(p);
}

}  // namespace lmsynth

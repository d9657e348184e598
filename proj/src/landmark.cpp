#include "lmsynth/landmark.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "lmsynth/error.hpp"

namespace lmsynth {

namespace {

constexpr std::pair<int, int> kMirrorPairs[] = {
    // brows
    {33, 46}, {34, 45}, {35, 44}, {36, 43}, {37, 42}, {38, 50}, {39, 49}, {40, 48}, {41, 47},
    // nose base
    {55, 59}, {56, 58},
    // eyes
    {60, 72}, {61, 71}, {62, 70}, {63, 69}, {64, 68}, {65, 75}, {66, 74}, {67, 73},
    // lips
    {76, 82}, {77, 81}, {78, 80}, {87, 83}, {86, 84}, {88, 92}, {89, 91}, {95, 93},
    // pupils
    {96, 97},
};

std::array<int, kNumLandmarks> build_mirror_permutation() {
  std::array<int, kNumLandmarks> perm{};
  for (int i = 0; i < kNumLandmarks; ++i) perm[i] = i;
  for (int i = 0; i <= 32; ++i) perm[i] = 32 - i;
  for (auto [a, b] : kMirrorPairs) {
    perm[a] = b;
    perm[b] = a;
  }
  return perm;
}

}  // namespace

const LandmarkGroup& LandmarkTopology::group(std::string_view name) {
  for (const auto& g : kGroups) {
    if (g.name == name) return g;
  }
  fail(ErrorCode::InvalidArgument, "unknown landmark group '" + std::string(name) + "'");
}

const std::array<int, kNumLandmarks>& LandmarkTopology::mirror_permutation() {
  static const std::array<int, kNumLandmarks> perm = build_mirror_permutation();
  return perm;
}

int LandmarkTopology::mirror_index(int i) { return mirror_permutation().at(i); }

void LandmarkTopology::validate() {
  std::array<int, kNumLandmarks> hits{};
  for (const auto& g : kGroups) {
    if (g.begin < 0 || g.end > kNumLandmarks || g.begin >= g.end) {
      fail(ErrorCode::InvalidArgument, "landmark group out of range: " + std::string(g.name));
    }
    for (int i = g.begin; i < g.end; ++i) ++hits[i];
  }
  for (int i = 0; i < kNumLandmarks; ++i) {
    if (hits[i] != 1) {
      fail(ErrorCode::InvalidArgument,
           "landmark groups do not partition index " + std::to_string(i));
    }
  }
  const auto& perm = mirror_permutation();
  for (int i = 0; i < kNumLandmarks; ++i) {
    if (perm[perm[i]] != i) fail(ErrorCode::InvalidArgument, "mirror map is not an involution");
  }
}

LandmarkFrame::LandmarkFrame(const Points2& coords) : coords_(coords) {
  if (!coords_.allFinite()) fail(ErrorCode::NonFinite, "landmark frame has non-finite coordinates");
}

LandmarkSequence::LandmarkSequence(std::vector<LandmarkFrame> frames,
                                   std::optional<int> identity_label)
    : frames_(std::move(frames)), identity_label_(identity_label) {
  if (frames_.size() < 2) {
    fail(ErrorCode::InvalidK, "landmark sequence needs at least 2 frames, got " +
                                  std::to_string(frames_.size()));
  }
}

LandmarkSequence upsample_linear(const LandmarkFrame& a, const LandmarkFrame& b, int K) {
  if (K < 2) fail(ErrorCode::InvalidK, "upsample_linear needs K >= 2, got " + std::to_string(K));
  std::vector<LandmarkFrame> frames;
  frames.reserve(K);
  for (int k = 0; k < K; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(K - 1);
    Points2 p;
    for (int i = 0; i < kNumLandmarks; ++i) {
      p(i, 0) = std::lerp(a.x(i), b.x(i), t);
      p(i, 1) = std::lerp(a.y(i), b.y(i), t);
    }
    frames.emplace_back(p);
  }
  return LandmarkSequence(std::move(frames));
}

std::array<double, kFrameDim> flatten(const LandmarkFrame& frame) {
  std::array<double, kFrameDim> out{};
  const double* src = frame.coords().data();
  std::copy(src, src + kFrameDim, out.begin());
  return out;
}

LandmarkFrame unflatten(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(kFrameDim)) {
    fail(ErrorCode::WrongLength,
         "expected " + std::to_string(kFrameDim) + " values, got " + std::to_string(values.size()));
  }
  Points2 p;
  std::copy(values.begin(), values.end(), p.data());
  return LandmarkFrame(p);
}

LandmarkFrame add_noise(const LandmarkFrame& frame, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  if (sigma == 0.0) return frame;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Points2 p = frame.coords();
  double* data = p.data();
  for (int i = 0; i < kFrameDim; ++i) data[i] += normal(rng);
  return LandmarkFrame(p);
}

LandmarkFrame mirror(const LandmarkFrame& frame) {
  const auto& perm = LandmarkTopology::mirror_permutation();
  Points2 p;
  for (int i = 0; i < kNumLandmarks; ++i) {
    p(i, 0) = -frame.x(perm[i]);
    p(i, 1) = frame.y(perm[i]);
  }
  return LandmarkFrame(p);
}

Eigen::RowVector2d interocular_midpoint(const LandmarkFrame& frame) {
  return 0.25 * (frame.point(60) + frame.point(64) + frame.point(68) + frame.point(72));
}

std::array<double, kNumLandmarks> point_distances(const LandmarkFrame& a, const LandmarkFrame& b) {
  std::array<double, kNumLandmarks> d{};
  for (int i = 0; i < kNumLandmarks; ++i) d[i] = (a.point(i) - b.point(i)).norm();
  return d;
}

double rms_error(const LandmarkFrame& a, const LandmarkFrame& b) {
  return std::sqrt((a.coords() - b.coords()).squaredNorm() / kFrameDim);
}

}  // namespace lmsynth

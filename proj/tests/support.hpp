#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include "lmsynth/ad/tape.hpp"
#include "lmsynth/error.hpp"
#include "lmsynth/landmark.hpp"

namespace lmsynth::test {

/// Face-sized random frame: points uniform in [-0.8, 0.8]^2.
inline LandmarkFrame random_frame(std::mt19937_64& rng, double extent = 0.8) {
  std::uniform_real_distribution<double> u(-extent, extent);
  Points2 p;
  for (int i = 0; i < kNumLandmarks; ++i) {
    p(i, 0) = u(rng);
    p(i, 1) = u(rng);
  }
  return LandmarkFrame(p);
}

inline ad::Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double scale = 1.0) {
  ad::Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : t.storage()) v = n(rng);
  return t;
}

/// Central-difference gradient of a scalar function of one tensor.
inline ad::Tensor numeric_gradient(const std::function<double(const ad::Tensor&)>& f, ad::Tensor x,
                                   double eps = 1e-5) {
  ad::Tensor g = ad::Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double fp = f(x);
    x[i] = orig - eps;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2 * eps);
  }
  return g;
}

inline double max_rel_error(const ad::Tensor& a, const ad::Tensor& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

/// Code of the lmsynth::Error thrown by f, or nullopt when f returns normally.
template <class F>
std::optional<ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace lmsynth::test

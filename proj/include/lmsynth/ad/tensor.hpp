#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lmsynth::ad {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

/// Dense row-major array of doubles. Rank-1 tensors act as a single row in
/// matrix contexts; scalars have shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor matrix(int rows, int cols, std::initializer_list<double> values);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_, 0.0); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return values_.size(); }
  int rows() const;
  int cols() const;

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols() + c]; }

  /// The single value of a one-element tensor.
  double item() const;

  MapRM mat() { return MapRM(values_.data(), rows(), cols()); }
  ConstMapRM mat() const { return ConstMapRM(values_.data(), rows(), cols()); }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

}  // namespace lmsynth::ad

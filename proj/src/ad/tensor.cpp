#include "lmsynth/ad/tensor.hpp"

#include <cmath>
#include <numeric>

#include "lmsynth/error.hpp"

namespace lmsynth::ad {

namespace {

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) fail(ErrorCode::ShapeMismatch, "tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty()) fail(ErrorCode::ShapeMismatch, "tensor shape must be non-empty");
  values_.assign(element_count(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.empty()) fail(ErrorCode::ShapeMismatch, "tensor shape must be non-empty");
  if (element_count(shape_) != values_.size()) {
    fail(ErrorCode::ShapeMismatch, "value count " + std::to_string(values_.size()) +
                                       " does not match shape " + shape_string());
  }
}

Tensor Tensor::matrix(int rows, int cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

int Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() == 2) return shape_[0];
  fail(ErrorCode::ShapeMismatch, "matrix view needs rank <= 2, got " + shape_string());
}

int Tensor::cols() const {
  if (rank() == 1) return shape_[0];
  if (rank() == 2) return shape_[1];
  fail(ErrorCode::ShapeMismatch, "matrix view needs rank <= 2, got " + shape_string());
}

double Tensor::item() const {
  if (values_.size() != 1) fail(ErrorCode::NonScalarLoss, "item() on tensor of shape " + shape_string());
  return values_[0];
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

}  // namespace lmsynth::ad

#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmsynth/ad/tensor.hpp"

namespace lmsynth::ad {

/// A trainable weight with its gradient accumulator and Adam moments.
struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
};

/// Named parameters of one network plus its optimizer step count.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  void zero_grad();
  std::size_t parameter_count() const;

  int step() const { return step_; }
  void set_step(int step) { step_ = step; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  std::map<std::string, Parameter> params_;
  int step_ = 0;
};

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Define-by-run record of primitive ops. Each node stores its value and a
/// closure that propagates the node's gradient to its inputs.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; reused if the same parameter is requested twice.
  Var param(Parameter& p);
  /// Constant leaf holding a parameter's value; cached like param().
  Var frozen(const Parameter& p);

  /// Records a new node. Throws NonFinite if the value contains NaN/Inf.
  Var push(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }
  Var push(Tensor value, std::span<const Var> inputs, Backward backward);
  /// Id the next pushed node will receive.
  int next_id() const { return static_cast<int>(nodes_.size()); }

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Adds g into the gradient of node id (no-op for constants).
  void accumulate(int id, const Tensor& g);
  /// Gradient accumulator of node id, zero-initialized on first use.
  Tensor& grad_buffer(int id);

  /// Reverse sweep from a scalar loss; parameter gradients are added to Parameter::grad.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  std::unordered_map<const Parameter*, int> frozen_nodes_;
};

/// Gradient-free copy of a node's value on the same tape.
Var detach(Var x);

}  // namespace lmsynth::ad

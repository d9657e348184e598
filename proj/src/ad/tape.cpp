#include "lmsynth/ad/tape.hpp"

#include "lmsynth/error.hpp"

namespace lmsynth::ad {

Parameter& ParamStore::add(const std::string& name, Tensor init) {
  if (params_.count(name)) fail(ErrorCode::InvalidArgument, "duplicate parameter '" + name + "'");
  Parameter p;
  p.grad = Tensor::zeros_like(init);
  p.m = Tensor::zeros_like(init);
  p.v = Tensor::zeros_like(init);
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::InvalidArgument, "unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::InvalidArgument, "unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) std::fill(p.grad.storage().begin(), p.grad.storage().end(), 0.0);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) fail(ErrorCode::NonFinite, "non-finite constant");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[&p] = id;
  return Var(this, id);
}

Var Tape::frozen(const Parameter& p) {
  if (auto it = frozen_nodes_.find(&p); it != frozen_nodes_.end()) return Var(this, it->second);
  const Var v = constant(p.value);
  frozen_nodes_[&p] = v.id();
  return v;
}

Var Tape::push(Tensor value, std::span<const Var> inputs, Backward backward) {
  if (!value.all_finite()) fail(ErrorCode::NonFinite, "non-finite value produced on tape");
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.valid() && &v.tape() != this) fail(ErrorCode::InvalidArgument, "operands on different tapes");
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(int id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& buf = grad_buffer(id);
  if (buf.size() != g.size()) {
    fail(ErrorCode::ShapeMismatch, "gradient shape " + g.shape_string() + " does not match value " +
                                       buf.shape_string());
  }
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) fail(ErrorCode::InvalidArgument, "loss is not on this tape");
  if (loss.value().size() != 1) {
    fail(ErrorCode::NonScalarLoss, "backward needs a scalar loss, got " + loss.value().shape_string());
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    // Closures only touch nodes with smaller ids, so n.grad stays put.
    n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || !n.has_grad) continue;
    double* dst = n.param->grad.data();
    const double* src = n.grad.data();
    for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
  }
}

Var detach(Var x) { return x.tape().constant(x.value()); }

}  // namespace lmsynth::ad

#include "lmsynth/ad/layers.hpp"

#include <cmath>

#include "lmsynth/error.hpp"

namespace lmsynth::ad {

InitScheme init_scheme_from_string(const std::string& s) {
  if (s == "glorot_uniform") return InitScheme::GlorotUniform;
  if (s == "normal_fan_in") return InitScheme::NormalFanIn;
  if (s == "zero") return InitScheme::Zero;
  fail(ErrorCode::ConfigError, "unknown init scheme '" + s + "'");
}

std::string to_string(InitScheme s) {
  switch (s) {
    case InitScheme::GlorotUniform: return "glorot_uniform";
    case InitScheme::NormalFanIn: return "normal_fan_in";
    case InitScheme::Zero: return "zero";
  }
  return "glorot_uniform";
}

Tensor init_weight(int fan_in, int fan_out, InitScheme scheme, std::mt19937_64& rng) {
  Tensor w({fan_in, fan_out});
  switch (scheme) {
    case InitScheme::GlorotUniform: {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> d(-limit, limit);
      for (auto& v : w.storage()) v = d(rng);
      break;
    }
    case InitScheme::NormalFanIn: {
      std::normal_distribution<double> d(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
      for (auto& v : w.storage()) v = d(rng);
      break;
    }
    case InitScheme::Zero:
      break;
  }
  return w;
}

Activation activation_from_string(const std::string& s) {
  if (s == "none") return Activation::None;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  if (s == "sigmoid") return Activation::Sigmoid;
  fail(ErrorCode::ConfigError, "unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "none";
}

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::None: return x;
    case Activation::Tanh: return tanh(x);
    case Activation::Relu: return relu(x);
    case Activation::LeakyRelu: return leaky_relu(x, 0.2);
    case Activation::Sigmoid: return sigmoid(x);
  }
  return x;
}

void Dense::init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const {
  store.add(name_ + ".W", init_weight(in_, out_, scheme, rng));
  store.add(name_ + ".b", Tensor({1, out_}));
}

Var Dense::operator()(Tape& tape, ParamStore& store, Var x) const {
  return linear(x, tape.param(store.at(name_ + ".W")), tape.param(store.at(name_ + ".b")));
}

Var Dense::operator()(Tape& tape, const ParamStore& store, Var x) const {
  return linear(x, tape.frozen(store.at(name_ + ".W")), tape.frozen(store.at(name_ + ".b")));
}

Mlp::Mlp(const std::string& name, std::vector<int> widths, Activation hidden) : hidden_(hidden) {
  if (widths.size() < 2) fail(ErrorCode::InvalidArgument, "mlp needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), widths[i], widths[i + 1]);
  }
}

void Mlp::init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const {
  for (const auto& l : layers_) l.init(store, rng, scheme);
}

template <class Store>
Var Mlp::hidden_stack(Tape& tape, Store& store, Var x) const {
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) x = activate(layers_[i](tape, store, x), hidden_);
  return x;
}

Var Mlp::penultimate(Tape& tape, ParamStore& store, Var x) const { return hidden_stack(tape, store, x); }
Var Mlp::penultimate(Tape& tape, const ParamStore& store, Var x) const { return hidden_stack(tape, store, x); }

Var Mlp::operator()(Tape& tape, ParamStore& store, Var x) const {
  return layers_.back()(tape, store, hidden_stack(tape, store, x));
}

Var Mlp::operator()(Tape& tape, const ParamStore& store, Var x) const {
  return layers_.back()(tape, store, hidden_stack(tape, store, x));
}

void LstmCell::init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const {
  store.add(name_ + ".W", init_weight(in_ + hidden_, 4 * hidden_, scheme, rng));
  Tensor b({1, 4 * hidden_});
  for (int j = hidden_; j < 2 * hidden_; ++j) b[j] = 1.0;
  store.add(name_ + ".b", std::move(b));
}

LstmState LstmCell::zero_state(Tape& tape, int batch) const {
  return {tape.constant(Tensor({batch, hidden_})), tape.constant(Tensor({batch, hidden_}))};
}

LstmState LstmCell::step(Tape& tape, ParamStore& store, Var x, const LstmState& state) const {
  return gates(x, state, tape.param(store.at(name_ + ".W")), tape.param(store.at(name_ + ".b")));
}

LstmState LstmCell::step(Tape& tape, const ParamStore& store, Var x, const LstmState& state) const {
  return gates(x, state, tape.frozen(store.at(name_ + ".W")), tape.frozen(store.at(name_ + ".b")));
}

LstmState LstmCell::gates(Var x, const LstmState& state, Var W, Var b) const {
  if (x.value().cols() != in_ || state.h.value().cols() != hidden_) {
    fail(ErrorCode::ShapeMismatch, "lstm step: input " + x.value().shape_string() + ", hidden " +
                                       state.h.value().shape_string());
  }
  const Var z = linear(concat({x, state.h}, 1), W, b);
  const int H = hidden_;
  const Var i = sigmoid(slice(z, 1, 0, H));
  const Var f = sigmoid(slice(z, 1, H, 2 * H));
  const Var g = tanh(slice(z, 1, 2 * H, 3 * H));
  const Var o = sigmoid(slice(z, 1, 3 * H, 4 * H));
  const Var c = add(mul(f, state.c), mul(i, g));
  const Var h = mul(o, tanh(c));
  return {h, c};
}

void BiLstm::init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const {
  forward_.init(store, rng, scheme);
  backward_.init(store, rng, scheme);
}

BiLstmOutput BiLstm::operator()(Tape& tape, ParamStore& store, const std::vector<Var>& sequence) const {
  return run(tape, store, sequence);
}

BiLstmOutput BiLstm::operator()(Tape& tape, const ParamStore& store, const std::vector<Var>& sequence) const {
  return run(tape, store, sequence);
}

template <class Store>
BiLstmOutput BiLstm::run(Tape& tape, Store& store, const std::vector<Var>& sequence) const {
  if (sequence.empty()) fail(ErrorCode::ShapeMismatch, "bilstm over an empty sequence");
  const int batch = sequence.front().value().rows();
  const std::size_t T = sequence.size();
  std::vector<Var> fwd(T), bwd(T);
  LstmState s = forward_.zero_state(tape, batch);
  for (std::size_t t = 0; t < T; ++t) {
    s = forward_.step(tape, store, sequence[t], s);
    fwd[t] = s.h;
  }
  LstmState r = backward_.zero_state(tape, batch);
  for (std::size_t t = T; t-- > 0;) {
    r = backward_.step(tape, store, sequence[t], r);
    bwd[t] = r.h;
  }
  BiLstmOutput out;
  for (std::size_t t = 0; t < T; ++t) out.outputs.push_back(concat({fwd[t], bwd[t]}, 1));
  out.final_forward = fwd[T - 1];
  out.final_backward = bwd[0];
  return out;
}

}  // namespace lmsynth::ad

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lmsynth/ad/ops.hpp"
#include "lmsynth/ad/tape.hpp"

namespace lmsynth::ad {

enum class InitScheme {
  GlorotUniform,  // U(-sqrt(6 / (fan_in + fan_out)), +...)
  NormalFanIn,    // N(0, 1 / fan_in)
  Zero,
};

InitScheme init_scheme_from_string(const std::string& s);
std::string to_string(InitScheme s);

Tensor init_weight(int fan_in, int fan_out, InitScheme scheme, std::mt19937_64& rng);

enum class Activation { None, Tanh, Relu, LeakyRelu, Sigmoid };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

Var activate(Var x, Activation act);

/// y = x W + b. Parameters are named `<name>.W` and `<name>.b` in the store.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, int in, int out) : name_(std::move(name)), in_(in), out_(out) {}

  void init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const;
  Var operator()(Tape& tape, ParamStore& store, Var x) const;
  /// Inference: weights enter the tape as constants.
  Var operator()(Tape& tape, const ParamStore& store, Var x) const;

  int in() const { return in_; }
  int out() const { return out_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int in_ = 0;
  int out_ = 0;
};

/// Stack of dense layers with a shared hidden activation; the last layer is linear.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::vector<int> widths, Activation hidden);

  void init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const;
  Var operator()(Tape& tape, ParamStore& store, Var x) const;
  Var operator()(Tape& tape, const ParamStore& store, Var x) const;
  /// Activations of the last hidden layer (input to the final dense layer).
  Var penultimate(Tape& tape, ParamStore& store, Var x) const;
  Var penultimate(Tape& tape, const ParamStore& store, Var x) const;

  int in() const { return layers_.front().in(); }
  int out() const { return layers_.back().out(); }

 private:
  template <class Store>
  Var hidden_stack(Tape& tape, Store& store, Var x) const;

  std::vector<Dense> layers_;
  Activation hidden_ = Activation::Tanh;
};

struct LstmState {
  Var h;
  Var c;
};

/// Gate order i, f, g, o over a fused [in + hidden, 4 hidden] weight.
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(std::string name, int in, int hidden) : name_(std::move(name)), in_(in), hidden_(hidden) {}

  /// Forget-gate bias starts at +1.
  void init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const;
  LstmState step(Tape& tape, ParamStore& store, Var x, const LstmState& state) const;
  LstmState step(Tape& tape, const ParamStore& store, Var x, const LstmState& state) const;
  LstmState zero_state(Tape& tape, int batch) const;

  int in() const { return in_; }
  int hidden() const { return hidden_; }

 private:
  LstmState gates(Var x, const LstmState& state, Var W, Var b) const;

  std::string name_;
  int in_ = 0;
  int hidden_ = 0;
};

struct BiLstmOutput {
  std::vector<Var> outputs;  // per step: [batch, 2 hidden] = [forward h_t, backward h_t]
  Var final_forward;         // forward h after the last step
  Var final_backward;        // backward h after processing step 0
};

class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, int in, int hidden)
      : forward_(name + ".fwd", in, hidden), backward_(name + ".bwd", in, hidden) {}

  void init(ParamStore& store, std::mt19937_64& rng, InitScheme scheme) const;
  BiLstmOutput operator()(Tape& tape, ParamStore& store, const std::vector<Var>& sequence) const;
  BiLstmOutput operator()(Tape& tape, const ParamStore& store, const std::vector<Var>& sequence) const;

  int hidden() const { return forward_.hidden(); }

 private:
  template <class Store>
  BiLstmOutput run(Tape& tape, Store& store, const std::vector<Var>& sequence) const;

  LstmCell forward_;
  LstmCell backward_;
};

}  // namespace lmsynth::ad

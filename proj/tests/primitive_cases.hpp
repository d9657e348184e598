#pragma once

// Finite-difference cases for every differentiable primitive.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lmsynth/ad/ops.hpp"
#include "support.hpp"

namespace lmsynth::test {

using namespace lmsynth::ad;

using Op = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Reduces a primitive's output to a scalar with fixed random weights.
inline Var reduce(Tape& tape, Var out, const Tensor& weights) {
  if (out.value().size() == 1) return out;
  return sum(mul(out, tape.constant(weights)));
}

/// Central-difference oracle per input against the tape's reverse sweep.
inline double primitive_error(const Op& op, const std::vector<Tensor>& inputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor weights;
  {
    Tape probe;
    std::vector<Var> vs;
    for (const auto& t : inputs) vs.push_back(probe.constant(t));
    weights = random_tensor(op(probe, vs).value().shape(), rng);
  }
  ParamStore store;
  for (std::size_t i = 0; i < inputs.size(); ++i) store.add("x" + std::to_string(i), inputs[i]);
  {
    Tape tape;
    std::vector<Var> vs;
    for (std::size_t i = 0; i < inputs.size(); ++i) vs.push_back(tape.param(store.at("x" + std::to_string(i))));
    tape.backward(reduce(tape, op(tape, vs), weights));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Tensor& xi) {
      Tape tape;
      std::vector<Var> vs;
      for (std::size_t j = 0; j < inputs.size(); ++j) vs.push_back(tape.constant(j == i ? xi : inputs[j]));
      return reduce(tape, op(tape, vs), weights).value().item();
    };
    const Tensor num = numeric_gradient(f, inputs[i]);
    worst = std::max(worst, max_rel_error(store.at("x" + std::to_string(i)).grad, num));
  }
  return worst;
}

/// Values kept at least `gap` away from zero so kinked primitives stay differentiable under FD.
inline Tensor away_from_zero(Tensor t, double gap = 0.05) {
  for (auto& v : t.storage()) {
    if (std::abs(v) < gap) v = v < 0 ? v - gap : v + gap;
  }
  return t;
}

struct PrimitiveCase {
  const char* name;
  Op op;
  std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
};

inline std::vector<PrimitiveCase> primitive_cases() {
  auto two = [](std::vector<int> sa, std::vector<int> sb) {
    return [sa, sb](std::mt19937_64& rng) { return std::vector<Tensor>{random_tensor(sa, rng), random_tensor(sb, rng)}; };
  };
  auto one = [](std::vector<int> s) {
    return [s](std::mt19937_64& rng) { return std::vector<Tensor>{random_tensor(s, rng)}; };
  };
  std::vector<PrimitiveCase> c;
  c.push_back({"add", [](Tape&, const std::vector<Var>& v) { return add(v[0], v[1]); }, two({3, 4}, {3, 4})});
  c.push_back({"add_row_broadcast", [](Tape&, const std::vector<Var>& v) { return add(v[0], v[1]); }, two({3, 4}, {1, 4})});
  c.push_back({"sub", [](Tape&, const std::vector<Var>& v) { return sub(v[0], v[1]); }, two({2, 5}, {2, 5})});
  c.push_back({"mul", [](Tape&, const std::vector<Var>& v) { return mul(v[0], v[1]); }, two({3, 4}, {3, 4})});
  c.push_back({"mul_row_broadcast", [](Tape&, const std::vector<Var>& v) { return mul(v[0], v[1]); }, two({3, 4}, {1, 4})});
  c.push_back({"scale", [](Tape&, const std::vector<Var>& v) { return scale(v[0], -1.7); }, one({3, 3})});
  c.push_back({"matmul", [](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); }, two({3, 4}, {4, 2})});
  c.push_back({"linear",
               [](Tape&, const std::vector<Var>& v) { return linear(v[0], v[1], v[2]); },
               [](std::mt19937_64& rng) {
                 return std::vector<Tensor>{random_tensor({3, 4}, rng), random_tensor({4, 5}, rng),
                                            random_tensor({1, 5}, rng)};
               }});
  c.push_back({"concat_rows", [](Tape&, const std::vector<Var>& v) { return concat({v[0], v[1]}, 0); }, two({2, 3}, {1, 3})});
  c.push_back({"concat_cols", [](Tape&, const std::vector<Var>& v) { return concat({v[0], v[1]}, 1); }, two({2, 3}, {2, 4})});
  c.push_back({"slice_rows", [](Tape&, const std::vector<Var>& v) { return slice(v[0], 0, 1, 3); }, one({4, 3})});
  c.push_back({"slice_cols", [](Tape&, const std::vector<Var>& v) { return slice(v[0], 1, 2, 5); }, one({2, 6})});
  c.push_back({"tanh", [](Tape&, const std::vector<Var>& v) { return tanh(v[0]); }, one({3, 4})});
  c.push_back({"sigmoid", [](Tape&, const std::vector<Var>& v) { return sigmoid(v[0]); }, one({3, 4})});
  c.push_back({"relu", [](Tape&, const std::vector<Var>& v) { return relu(v[0]); },
               [](std::mt19937_64& rng) { return std::vector<Tensor>{away_from_zero(random_tensor({3, 4}, rng))}; }});
  c.push_back({"leaky_relu", [](Tape&, const std::vector<Var>& v) { return leaky_relu(v[0], 0.2); },
               [](std::mt19937_64& rng) { return std::vector<Tensor>{away_from_zero(random_tensor({3, 4}, rng))}; }});
  c.push_back({"sum", [](Tape&, const std::vector<Var>& v) { return sum(v[0]); }, one({3, 4})});
  c.push_back({"mean", [](Tape&, const std::vector<Var>& v) { return mean(v[0]); }, one({3, 4})});
  c.push_back({"l1_mean",
               [](Tape&, const std::vector<Var>& v) { return l1_mean(v[0], v[1]); },
               [](std::mt19937_64& rng) {
                 const Tensor a = random_tensor({3, 4}, rng);
                 Tensor d = away_from_zero(random_tensor({3, 4}, rng));
                 for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - d[i];
                 return std::vector<Tensor>{a, d};
               }});
  c.push_back({"mse", [](Tape&, const std::vector<Var>& v) { return mse(v[0], v[1]); }, two({3, 4}, {3, 4})});
  c.push_back({"smooth_l1",
               [](Tape&, const std::vector<Var>& v) { return smooth_l1(v[0], v[1]); },
               [](std::mt19937_64& rng) {
                 return std::vector<Tensor>{random_tensor({4, 4}, rng, 1.5), random_tensor({4, 4}, rng, 1.5)};
               }});
  c.push_back({"cosine_distance", [](Tape&, const std::vector<Var>& v) { return cosine_distance(v[0], v[1]); },
               two({3, 5}, {3, 5})});
  c.push_back({"softmax_cross_entropy",
               [](Tape&, const std::vector<Var>& v) {
                 static const std::vector<int> labels{2, 0, 3};
                 return softmax_cross_entropy(v[0], labels);
               },
               one({3, 4})});
  c.push_back({"bce_with_logits",
               [](Tape&, const std::vector<Var>& v) {
                 static const std::vector<double> targets{1.0, 0.0, 0.3, 1.0};
                 return bce_with_logits(v[0], targets);
               },
               one({4, 1})});
  return c;
}

}  // namespace lmsynth::test

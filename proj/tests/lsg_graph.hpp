#pragma once

// Full LSG objective on a tiny model (K=4, hidden=8), for gradient checks.

#include <random>
#include <vector>

#include "lmsynth/ad/gradcheck.hpp"
#include "lmsynth/ad/ops.hpp"
#include "lmsynth/lsg.hpp"
#include "support.hpp"

namespace lmsynth::test {

struct LsgGraphCheck {
  ad::GradCheckReport generator;
  ad::GradCheckReport discriminators;
};

inline ad::Tensor random_batch(int rows, std::mt19937_64& rng) {
  ad::Tensor t({rows, kFrameDim});
  for (int r = 0; r < rows; ++r) {
    const auto f = flatten(random_frame(rng));
    for (int c = 0; c < kFrameDim; ++c) t.at(r, c) = f[c];
  }
  return t;
}

/// Generator-side total loss (every term plus reconstruction) and the discriminator
/// loss, each checked against central differences on its own parameter store.
inline LsgGraphCheck check_lsg_graph(std::uint64_t seed, double tolerance = 1e-3, double abs_floor = 1e-6) {
  LsgConfig c;
  c.K = 4;
  c.hidden_size = 8;
  c.d_hidden = 16;
  c.s_hidden = 8;
  c.lambda_rec = 0.5;
  c.seed = seed;
  LsgModel m(c, {0, 1, 2});
  std::mt19937_64 rng(seed * 7919 + 1);
  // Move the head off zero so every path carries gradient.
  std::normal_distribution<double> n(0.0, 0.05);
  for (auto& v : m.generator().at("G.head.W").value.values()) v = n(rng);
  const ad::Tensor a = random_batch(3, rng), b = random_batch(3, rng), real = random_batch(4, rng),
                   pos = random_batch(3, rng), neg = random_batch(3, rng), truth = random_batch(12, rng);
  const std::vector<int> ids{0, 1, 2}, neg_ids{1, 2, 0};

  auto gen_loss = [&](ad::Tape& tape, ad::ParamStore& g) {
    const LsgForward f = lsg_forward(tape, m, g, tape.constant(a), tape.constant(b), 4);
    LsgTerms t;
    t.d1 = adv_losses_d1(tape, m, tape.constant(real), ad::concat(f.frames, 0), false).g_loss;
    t.d2 = adv_losses_d2(tape, m, tape.constant(a), f.frames[2], tape.constant(pos), tape.constant(neg), ids, neg_ids,
                         false)
               .g_loss;
    t.s_hidden = loss_support_hidden(tape, m, f.hidden, ids);
    t.s_output = loss_support_output(tape, m, f.frames, ids);
    t.rec = ad::mse(ad::concat(f.frames, 0), tape.constant(truth));
    return total_lsg_loss(t, c);
  };
  auto d_loss = [&](ad::Tape& tape, ad::ParamStore&) {
    const LsgForward f = lsg_forward(tape, static_cast<const LsgModel&>(m), tape.constant(a), tape.constant(b), 4);
    const AdvTerms t1 = adv_losses_d1(tape, m, tape.constant(real), ad::concat(f.frames, 0), true);
    const AdvTerms t2 = adv_losses_d2(tape, m, tape.constant(a), f.frames[1], tape.constant(pos), tape.constant(neg),
                                      ids, neg_ids, true);
    return ad::add(t1.d_loss, t2.d_loss);
  };
  ad::GradCheckOptions opt;
  opt.eps = 1e-5;
  opt.tolerance = tolerance;
  opt.abs_floor = abs_floor;
  opt.max_coords_per_param = 12;
  opt.seed = seed;
  return {ad::gradient_check(m.generator(), gen_loss, opt), ad::gradient_check(m.discriminators(), d_loss, opt)};
}

}  // namespace lmsynth::test

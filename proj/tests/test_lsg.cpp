#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "lmsynth/ad/gradcheck.hpp"
#include "lmsynth/ad/ops.hpp"
#include "lmsynth/lsg.hpp"
#include "lsg_graph.hpp"
#include "support.hpp"

using namespace lmsynth;
using lmsynth::test::error_code;
using lmsynth::test::random_batch;
using lmsynth::test::random_frame;

namespace {

LsgConfig tiny_config() {
  LsgConfig c;
  c.K = 4;
  c.hidden_size = 8;
  c.d_hidden = 16;
  c.s_hidden = 8;
  c.batch_size = 4;
  return c;
}

void randomize(ad::ParamStore& store, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& [name, p] : store) {
    for (auto& v : p.value.values()) v = n(rng);
  }
}

void zero(ad::ParamStore& store, const std::string& prefix) {
  for (auto& [name, p] : store) {
    if (name.rfind(prefix, 0) == 0) {
      for (auto& v : p.value.values()) v = 0.0;
    }
  }
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double mean_bce(const ad::Tensor& logits, double target) {
  double s = 0;
  for (double l : logits.values()) s += target * softplus(-l) + (1 - target) * softplus(l);
  return s / static_cast<double>(logits.size());
}

Dataset train_set(int ids) {
  DatasetConfig c;
  c.n_ids = ids;
  c.seqs_per_id = 3;
  c.frames_per_seq = 6;
  c.heldout_seqs_per_id = 1;
  c.seed = 40;
  return generate_dataset(c).split(1).first;
}

}  // namespace

TEST_CASE("zero-initialized generator reproduces linear interpolation") {
  const LsgModel m(tiny_config(), {0, 1});
  std::mt19937_64 rng(1);
  for (int t = 0; t < 30; ++t) {
    const LandmarkFrame a = random_frame(rng), b = random_frame(rng);
    for (int K : {2, 4, 9}) {
      const LandmarkSequence out = lsg_forward(a, b, m, K);
      const LandmarkSequence li = upsample_linear(a, b, K);
      REQUIRE(out.size() == static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) CHECK((out[k].coords() - li[k].coords()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  CHECK(error_code([&] { lsg_forward(random_frame(rng), random_frame(rng), m, 1); }) == ErrorCode::InvalidK);
}

TEST_CASE("output is upsampled input plus shift") {
  LsgModel m(tiny_config(), {0, 1});
  std::mt19937_64 rng(2);
  randomize(m.generator(), rng, 0.1);
  ad::Tape tape;
  const LsgForward f = lsg_forward(tape, static_cast<const LsgModel&>(m), tape.constant(random_batch(3, rng)),
                                   tape.constant(random_batch(3, rng)), 5);
  REQUIRE(f.frames.size() == 5);
  CHECK(f.hidden.value().shape() == std::vector<int>{3, 16});
  double shift_mag = 0;
  for (int k = 0; k < 5; ++k) {
    const auto& o = f.frames[k].value();
    CHECK(o.shape() == std::vector<int>{3, kFrameDim});
    for (std::size_t i = 0; i < o.size(); ++i) {
      CHECK(o[i] == f.upsampled[k].value()[i] + f.shifts[k].value()[i]);
      shift_mag = std::max(shift_mag, std::abs(f.shifts[k].value()[i]));
    }
  }
  CHECK(shift_mag > 0.0);

  LsgConfig half = tiny_config();
  half.shift_scale = 0.5;
  LsgModel h(half, {0, 1});
  for (auto& [name, p] : h.generator()) p.value = m.generator().at(name).value;
  ad::Tape t2, t3;
  std::mt19937_64 r2(9), r3(9);
  const auto fa = lsg_forward(t2, static_cast<const LsgModel&>(m), t2.constant(random_batch(2, r2)), t2.constant(random_batch(2, r2)), 4);
  const auto fb = lsg_forward(t3, static_cast<const LsgModel&>(h), t3.constant(random_batch(2, r3)), t3.constant(random_batch(2, r3)), 4);
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < fa.shifts[k].value().size(); ++i) {
      CHECK(std::abs(fb.shifts[k].value()[i] - 0.5 * fa.shifts[k].value()[i]) <= 1e-15);
    }
  }
}

TEST_CASE("discriminator losses") {
  LsgModel m(tiny_config(), {3, 5, 8});
  std::mt19937_64 rng(4);
  const ad::Tensor real = random_batch(4, rng), fake = random_batch(6, rng), in = random_batch(2, rng), gen = random_batch(2, rng),
                   pos = random_batch(2, rng), neg = random_batch(2, rng);
  const std::vector<int> ids{3, 5}, neg_ids{8, 3};

  SUBCASE("zero discriminators give chance losses") {
    zero(m.discriminators(), "");
    ad::Tape tape;
    const AdvTerms t1 = adv_losses_d1(tape, m, tape.constant(real), tape.constant(fake), true);
    CHECK(std::abs(t1.d_loss.value().item() - 2 * std::log(2.0)) <= 1e-12);
    CHECK(std::abs(t1.g_loss.value().item() - std::log(2.0)) <= 1e-12);
    const AdvTerms t2 = adv_losses_d2(tape, m, tape.constant(in), tape.constant(gen), tape.constant(pos),
                                      tape.constant(neg), ids, neg_ids, true);
    CHECK(std::abs(t2.d_loss.value().item() - 3 * std::log(2.0)) <= 1e-12);
    CHECK(std::abs(t2.g_loss.value().item() - std::log(2.0)) <= 1e-12);
  }
  SUBCASE("match the closed-form cross entropy") {
    ad::Tape tape;
    const ad::ParamStore& d = m.discriminators();
    auto d1 = [&](const ad::Tensor& x) { return m.d1()(tape, d, m.standardize(tape, tape.constant(x))).value(); };
    auto d2 = [&](const ad::Tensor& x) {
      return m.d2()(tape, d, ad::concat({m.standardize(tape, tape.constant(in)), m.standardize(tape, tape.constant(x))}, 1))
          .value();
    };
    const ad::Tensor lr = d1(real), lf = d1(fake), lg = d2(gen), lp = d2(pos), ln = d2(neg);
    const AdvTerms t1 = adv_losses_d1(tape, m, tape.constant(real), tape.constant(fake), false);
    CHECK(std::abs(t1.d_loss.value().item() - (mean_bce(lr, 1) + mean_bce(lf, 0))) <= 1e-9);
    CHECK(std::abs(t1.g_loss.value().item() - mean_bce(lf, 1)) <= 1e-9);
    const AdvTerms t2 = adv_losses_d2(tape, m, tape.constant(in), tape.constant(gen), tape.constant(pos),
                                      tape.constant(neg), ids, neg_ids, false);
    CHECK(std::abs(t2.d_loss.value().item() - (mean_bce(lp, 1) + mean_bce(ln, 0) + mean_bce(lg, 0))) <= 1e-9);
    CHECK(std::abs(t2.g_loss.value().item() - mean_bce(lg, 1)) <= 1e-9);
  }
  SUBCASE("negatives must differ in identity") {
    ad::Tape tape;
    const std::vector<int> clash{3, 3};
    CHECK(error_code([&] {
            adv_losses_d2(tape, m, tape.constant(in), tape.constant(gen), tape.constant(pos), tape.constant(neg), ids,
                          clash, true);
          }) == ErrorCode::IdentityCollision);
  }
}

TEST_CASE("support losses") {
  LsgModel m(tiny_config(), {3, 5, 8});
  std::mt19937_64 rng(6);
  const std::vector<int> ids{3, 8, 5};
  const ad::Tensor f0 = random_batch(3, rng), f1 = random_batch(3, rng), hid = lmsynth::test::random_tensor({3, 16}, rng, 1.0);

  SUBCASE("uniform classifiers give ln C") {
    zero(m.generator(), "S_");
    ad::Tape tape;
    CHECK(std::abs(loss_support_output(tape, m, {tape.constant(f0), tape.constant(f1)}, ids).value().item() -
                   std::log(3.0)) <= 1e-12);
    CHECK(std::abs(loss_support_hidden(tape, m, tape.constant(hid), ids).value().item() - std::log(3.0)) <= 1e-12);
  }
  SUBCASE("confident correct classifier gives zero loss") {
    zero(m.generator(), "S_output.l1");
    m.generator().at("S_output.l1.b").value[0] = 60.0;
    ad::Tape tape;
    const std::vector<int> all_three{3, 3, 3};
    CHECK(loss_support_output(tape, m, {tape.constant(f0)}, all_three).value().item() <= 1e-20);
  }
  SUBCASE("closed-form cross entropy") {
    ad::Tape tape;
    const ad::ParamStore& g = m.generator();
    const ad::Tensor lo = m.s_output()(tape, g, m.standardize(tape, tape.constant(f0))).value();
    const ad::Tensor lh = m.s_hidden()(tape, g, tape.constant(hid)).value();
    auto ce = [&](const ad::Tensor& l) {
      double s = 0;
      for (int r = 0; r < 3; ++r) {
        double mx = -INFINITY;
        for (int c = 0; c < 3; ++c) mx = std::max(mx, l.at(r, c));
        double z = 0;
        for (int c = 0; c < 3; ++c) z += std::exp(l.at(r, c) - mx);
        s += mx + std::log(z) - l.at(r, m.class_of(ids[r]));
      }
      return s / 3;
    };
    CHECK(std::abs(loss_support_output(tape, m, {tape.constant(f0)}, ids).value().item() - ce(lo)) <= 1e-9);
    CHECK(std::abs(loss_support_hidden(tape, m, tape.constant(hid), ids).value().item() - ce(lh)) <= 1e-9);
  }
  ad::Tape tape;
  const std::vector<int> stranger{3, 4, 5};
  CHECK(error_code([&] { loss_support_hidden(tape, m, tape.constant(hid), stranger); }) == ErrorCode::UnknownClass);
  CHECK(error_code([&] { m.class_of(99); }) == ErrorCode::UnknownClass);
}

TEST_CASE("total_lsg_loss") {
  LsgConfig c;
  CHECK(total_lsg_loss(1, 2, 3, 4, c) == 10.0);
  c.lambda_d1 = 0;
  c.lambda_d2 = 0.5;
  c.lambda_s_hidden = 0;
  c.lambda_s_output = 0.25;
  CHECK(total_lsg_loss(1, 2, 3, 4, c) == 2.0);
  c.lambda_rec = 2;
  CHECK(total_lsg_loss(1, 2, 3, 4, c, 1.5) == 5.0);

  ad::Tape tape;
  LsgTerms t{tape.constant(ad::Tensor::scalar(1)), tape.constant(ad::Tensor::scalar(2)),
             tape.constant(ad::Tensor::scalar(3)), tape.constant(ad::Tensor::scalar(4)),
             tape.constant(ad::Tensor::scalar(1.5))};
  CHECK(total_lsg_loss(t, c).value().item() == 5.0);
  t.rec = {};
  CHECK(total_lsg_loss(t, c).value().item() == 2.0);

  // Gradient of the weighted sum with respect to each term is its weight.
  ad::ParamStore s;
  s.add("x", ad::Tensor({1, 4}, {0.3, -0.2, 0.7, 1.1}));
  const auto r = ad::gradient_check(s, [&](ad::Tape& tp, ad::ParamStore& st) {
    const ad::Var x = tp.param(st.at("x"));
    auto term = [&](int i) { return ad::mean(ad::mul(ad::slice(x, 1, i, i + 1), ad::slice(x, 1, i, i + 1))); };
    return total_lsg_loss(LsgTerms{term(0), term(1), term(2), term(3), {}}, c);
  });
  CHECK(r.passed);
}

TEST_CASE("full graph gradient check") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = lmsynth::test::check_lsg_graph(seed);
    CHECK_MESSAGE(r.generator.passed, r.generator.worst_param, " ", r.generator.max_rel_error);
    CHECK_MESSAGE(r.discriminators.passed, r.discriminators.worst_param, " ", r.discriminators.max_rel_error);
    CHECK(r.generator.checked > 100);
  }
}

TEST_CASE("training") {
  const Dataset train = train_set(2);
  LsgConfig c = tiny_config();
  c.epochs = 2;
  const TrainedLsg a = train_lsg(train, c);
  const TrainedLsg b = train_lsg(train, c);
  CHECK(a.history.epochs.size() == 2);
  CHECK(a.history.to_csv() == b.history.to_csv());
  CHECK(a.history.to_csv().rfind("epoch,L_D1,L_D2,L_S1,L_S2,total,D1_loss,D2_loss,L_rec\n1,", 0) == 0);
  for (const auto& [name, p] : a.model.generator()) CHECK(std::ranges::equal(p.value.values(), b.model.generator().at(name).value.values()));
  for (const auto& e : a.history.epochs) {
    CHECK(std::abs(e.total - total_lsg_loss(e.l_d1, e.l_d2, e.l_s1, e.l_s2, c)) <= 1e-9);
  }

  SUBCASE("epoch callback sees every epoch") {
    std::vector<int> seen;
    train_lsg(train, c, [&](const LsgEpoch& e, const LsgModel&) { seen.push_back(e.epoch); });
    CHECK(seen == std::vector<int>{1, 2});
  }
  SUBCASE("reconstruction alone reduces reconstruction error") {
    LsgConfig r = tiny_config();
    r.lambda_d1 = r.lambda_d2 = r.lambda_s_hidden = r.lambda_s_output = 0.0;
    r.lambda_rec = 1.0;
    // Full-length windows, no noise, one batch: plain full-batch descent.
    r.K = 6;
    r.noise_sigma = 0.0;
    r.lr = 1e-4;
    r.lr_constant_until = r.lr_zero_at = 100;
    r.beta1 = 0.9;
    r.epochs = 10;
    const auto h = train_lsg(train, r).history.epochs;
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i].rec < h[i - 1].rec);
    CHECK(h.back().rec < 0.9 * h.front().rec);
  }
  SUBCASE("errors") {
    CHECK(error_code([&] { train_lsg(train_set(1), c); }) == ErrorCode::DatasetTooSmall);
    LsgConfig longk = c;
    longk.K = 50;
    CHECK(error_code([&] { train_lsg(train, longk); }) == ErrorCode::DatasetTooSmall);
  }
}

TEST_CASE("config and checkpoints") {
  LsgConfig c = tiny_config();
  c.lambda_rec = 0.1;
  c.d_activation = "tanh";
  CHECK(LsgConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK(error_code([] { LsgConfig::from_json({{"hiden_size", 3}}); }) == ErrorCode::ConfigError);
  CHECK(error_code([] { LsgConfig::from_json({{"K", 1}}); }) == ErrorCode::InvalidK);
  CHECK(error_code([] { LsgConfig::from_json({{"lambda_d1", -1}}); }) == ErrorCode::ConfigError);

  LsgModel m(c, {2, 7});
  std::mt19937_64 rng(10);
  randomize(m.generator(), rng, 0.1);
  randomize(m.discriminators(), rng, 0.1);
  m.set_normalization(Eigen::RowVectorXd::Constant(kFrameDim, 0.1), Eigen::RowVectorXd::Constant(kFrameDim, 0.3));
  const auto path = std::filesystem::temp_directory_path() / "lmsynth_test_lsg.ck";
  m.save(path);
  const LsgModel back = LsgModel::load(path);
  CHECK(back.labels() == m.labels());
  CHECK(back.config().to_json() == m.config().to_json());
  const LandmarkFrame a = random_frame(rng), b = random_frame(rng);
  const auto s1 = synthesize(a, b, m, 6), s2 = synthesize(a, b, back, 6), s3 = lsg_forward(a, b, m, 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(s1[k] == s2[k]);
    CHECK(s1[k] == s3[k]);
  }
  for (const auto& [name, p] : m.discriminators()) CHECK(std::ranges::equal(p.value.values(), back.discriminators().at(name).value.values()));
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".manifest.json");
}

TEST_CASE("evaluate_d2") {
  const Dataset held = train_set(3);
  LsgModel m(tiny_config(), {0, 1, 2});
  zero(m.discriminators(), "");
  // A logit of exactly 0 is wrong for both kinds of pair.
  const D2Report r = evaluate_d2(m, held, 0.02, 1);
  CHECK(r.pairs == held.records.size());
  CHECK(r.positive_accuracy == 0.0);
  CHECK(r.negative_accuracy == 0.0);
  m.discriminators().at("D2.l1.b").value[0] = 1.0;
  const D2Report up = evaluate_d2(m, held, 0.02, 1);
  CHECK(up.positive_accuracy == 1.0);
  CHECK(up.negative_accuracy == 0.0);
  CHECK(up.accuracy == 0.5);
  CHECK(error_code([&] { evaluate_d2(m, train_set(1), 0.02, 1); }) == ErrorCode::DatasetTooSmall);
}

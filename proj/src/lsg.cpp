#include "lmsynth/lsg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lmsynth/ad/checkpoint.hpp"
#include "lmsynth/error.hpp"

namespace lmsynth {

using nlohmann::json;
using nlohmann::ordered_json;

void LsgConfig::validate() const {
  if (K < 2) fail(ErrorCode::InvalidK, "K must be >= 2");
  if (hidden_size < 1 || d_hidden < 1 || s_hidden < 1) fail(ErrorCode::ConfigError, "layer widths must be >= 1");
  for (double l : {lambda_d1, lambda_d2, lambda_s_hidden, lambda_s_output, lambda_rec}) {
    if (!(l >= 0.0) || !std::isfinite(l)) fail(ErrorCode::ConfigError, "loss weights must be finite and >= 0");
  }
  if (epochs < 0 || batch_size < 1 || d_steps < 1) fail(ErrorCode::ConfigError, "bad training schedule");
  if (!(noise_sigma >= 0.0)) fail(ErrorCode::ConfigError, "noise_sigma must be >= 0");
  if (!(lr > 0.0) || lr_zero_at < lr_constant_until) fail(ErrorCode::ConfigError, "bad learning-rate schedule");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail(ErrorCode::ConfigError, "bad Adam betas");
  if (!(shift_scale > 0.0)) fail(ErrorCode::ConfigError, "shift_scale must be > 0");
  ad::activation_from_string(d_activation);
  ad::init_scheme_from_string(init);
}

ordered_json LsgConfig::to_json() const {
  ordered_json j;
  j["K"] = K;
  j["hidden_size"] = hidden_size;
  j["lambda_d1"] = lambda_d1;
  j["lambda_d2"] = lambda_d2;
  j["lambda_s_hidden"] = lambda_s_hidden;
  j["lambda_s_output"] = lambda_s_output;
  j["lambda_rec"] = lambda_rec;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["noise_sigma"] = noise_sigma;
  j["lr"] = lr;
  j["lr_constant_until"] = lr_constant_until;
  j["lr_zero_at"] = lr_zero_at;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["d_hidden"] = d_hidden;
  j["s_hidden"] = s_hidden;
  j["d_activation"] = d_activation;
  j["d_steps"] = d_steps;
  j["shift_scale"] = shift_scale;
  j["init"] = init;
  return j;
}

LsgConfig LsgConfig::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "lsg config must be an object");
  LsgConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "K") c.K = v.get<int>();
      else if (key == "hidden_size") c.hidden_size = v.get<int>();
      else if (key == "lambda_d1") c.lambda_d1 = v.get<double>();
      else if (key == "lambda_d2") c.lambda_d2 = v.get<double>();
      else if (key == "lambda_s_hidden") c.lambda_s_hidden = v.get<double>();
      else if (key == "lambda_s_output") c.lambda_s_output = v.get<double>();
      else if (key == "lambda_rec") c.lambda_rec = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "noise_sigma") c.noise_sigma = v.get<double>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "lr_constant_until") c.lr_constant_until = v.get<int>();
      else if (key == "lr_zero_at") c.lr_zero_at = v.get<int>();
      else if (key == "beta1") c.beta1 = v.get<double>();
      else if (key == "beta2") c.beta2 = v.get<double>();
      else if (key == "d_hidden") c.d_hidden = v.get<int>();
      else if (key == "s_hidden") c.s_hidden = v.get<int>();
      else if (key == "d_activation") c.d_activation = v.get<std::string>();
      else if (key == "d_steps") c.d_steps = v.get<int>();
      else if (key == "shift_scale") c.shift_scale = v.get<double>();
      else if (key == "init") c.init = v.get<std::string>();
      else fail(ErrorCode::ConfigError, "unknown lsg key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("lsg: ") + e.what());
  }
  c.validate();
  return c;
}

LsgModel::LsgModel(const LsgConfig& cfg, std::vector<int> labels) : cfg_(cfg), labels_(std::move(labels)) {
  cfg_.validate();
  if (labels_.size() < 2) fail(ErrorCode::DatasetTooSmall, "the support classifiers need >= 2 identities");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!class_index_.emplace(labels_[i], static_cast<int>(i)).second) {
      fail(ErrorCode::InvalidArgument, "duplicate identity label " + std::to_string(labels_[i]));
    }
  }
  const int H = cfg_.hidden_size;
  const int C = num_classes();
  const auto act = ad::activation_from_string(cfg_.d_activation);
  lstm_ = ad::BiLstm("G.lstm", kFrameDim, H);
  head_ = ad::Dense("G.head", 2 * H + kFrameDim, kFrameDim);
  d1_ = ad::Mlp("D1", {kFrameDim, cfg_.d_hidden, cfg_.d_hidden, 1}, act);
  d2_ = ad::Mlp("D2", {2 * kFrameDim, cfg_.d_hidden, 1}, act);
  s_hidden_ = ad::Mlp("S_hidden", {2 * H, cfg_.s_hidden, C}, ad::Activation::Tanh);
  s_output_ = ad::Mlp("S_output", {kFrameDim, cfg_.s_hidden, C}, ad::Activation::Tanh);

  const auto scheme = ad::init_scheme_from_string(cfg_.init);
  std::mt19937_64 rng(derive_seed(cfg_.seed, 0x1a5e));
  lstm_.init(g_, rng, scheme);
  head_.init(g_, rng, ad::InitScheme::Zero);
  s_hidden_.init(g_, rng, scheme);
  s_output_.init(g_, rng, scheme);
  d1_.init(d_, rng, scheme);
  d2_.init(d_, rng, scheme);
  set_normalization(Eigen::RowVectorXd::Zero(kFrameDim), Eigen::RowVectorXd::Ones(kFrameDim));
}

int LsgModel::class_of(int identity) const {
  const auto it = class_index_.find(identity);
  if (it == class_index_.end()) fail(ErrorCode::UnknownClass, "identity " + std::to_string(identity) + " has no class");
  return it->second;
}

void LsgModel::set_normalization(const Eigen::RowVectorXd& mean, const Eigen::RowVectorXd& scale) {
  if (mean.size() != kFrameDim || scale.size() != kFrameDim) fail(ErrorCode::ShapeMismatch, "normalization size");
  if ((scale.array() <= 0.0).any()) fail(ErrorCode::InvalidArgument, "normalization scale must be positive");
  norm_neg_mean_ = ad::Tensor({1, kFrameDim});
  norm_inv_scale_ = ad::Tensor({1, kFrameDim});
  for (int i = 0; i < kFrameDim; ++i) {
    norm_neg_mean_[i] = -mean[i];
    norm_inv_scale_[i] = 1.0 / scale[i];
  }
}

ad::Var LsgModel::standardize(ad::Tape& tape, ad::Var frames) const {
  return ad::mul(ad::add(frames, tape.constant(norm_neg_mean_)), tape.constant(norm_inv_scale_));
}

void LsgModel::save(const std::filesystem::path& path, const ordered_json& extra) const {
  ad::ParamStore all;
  for (const auto& [name, p] : g_) all.add(name, p.value);
  for (const auto& [name, p] : d_) all.add(name, p.value);
  ad::Tensor mean({1, kFrameDim}), scale({1, kFrameDim});
  for (int i = 0; i < kFrameDim; ++i) {
    mean[i] = -norm_neg_mean_[i];
    scale[i] = 1.0 / norm_inv_scale_[i];
  }
  all.add("norm.mean", std::move(mean));
  all.add("norm.scale", std::move(scale));
  ordered_json m;
  m["kind"] = "lsg";
  m["labels"] = labels_;
  m["config"] = cfg_.to_json();
  if (!extra.is_null()) m["extra"] = extra;
  ad::save_checkpoint(path, all, m);
}

LsgModel LsgModel::load(const std::filesystem::path& path) {
  ad::Checkpoint ck = ad::load_checkpoint(path);
  if (ck.manifest.value("kind", "") != "lsg") fail(ErrorCode::FormatError, path.string() + " is not an LSG checkpoint");
  LsgModel model(LsgConfig::from_json(json::parse(ck.manifest.at("config").dump())),
                 ck.manifest.at("labels").get<std::vector<int>>());
  auto take = [&](ad::ParamStore& store) {
    for (auto& [name, p] : store) {
      if (!ck.params.contains(name)) fail(ErrorCode::FormatError, "checkpoint lacks '" + name + "'");
      const ad::Tensor& v = ck.params.at(name).value;
      if (!v.same_shape(p.value)) fail(ErrorCode::ShapeMismatch, "shape mismatch for '" + name + "'");
      p.value = v;
    }
  };
  take(model.g_);
  take(model.d_);
  const ad::Tensor& mean = ck.params.at("norm.mean").value;
  const ad::Tensor& scale = ck.params.at("norm.scale").value;
  model.set_normalization(mean.mat().row(0), scale.mat().row(0));
  if (ck.params.size() != model.g_.size() + model.d_.size() + 2) {
    fail(ErrorCode::FormatError, "checkpoint has unexpected tensors");
  }
  return model;
}

namespace {

ad::Tensor rows_tensor(const std::vector<std::array<double, kFrameDim>>& rows) {
  ad::Tensor t({static_cast<int>(rows.size()), kFrameDim});
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), t.data() + r * kFrameDim);
  return t;
}

// Exactly the arithmetic of upsample_linear, row by row.
ad::Tensor upsample_rows(const ad::Tensor& a, const ad::Tensor& b, int k, int K) {
  const double t = static_cast<double>(k) / static_cast<double>(K - 1);
  ad::Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::lerp(a[i], b[i], t);
  return out;
}

template <class Model, class Store>
LsgForward forward_impl(ad::Tape& tape, Model& model, Store& g, ad::Var p_first, ad::Var p_last, int K) {
  if (K < 2) fail(ErrorCode::InvalidK, "K must be >= 2, got " + std::to_string(K));
  // Copies: pushing constants below may reallocate the tape's node storage.
  const ad::Tensor a = p_first.value();
  const ad::Tensor b = p_last.value();
  if (a.rank() != 2 || a.cols() != kFrameDim || !a.same_shape(b)) {
    fail(ErrorCode::ShapeMismatch, "lsg_forward expects two [B, 196] inputs");
  }
  LsgForward out;
  std::vector<ad::Var> steps;
  for (int k = 0; k < K; ++k) {
    out.upsampled.push_back(tape.constant(upsample_rows(a, b, k, K)));
    steps.push_back(model.standardize(tape, out.upsampled.back()));
  }
  const ad::BiLstmOutput enc = model.lstm()(tape, g, steps);
  const double scale = model.config().shift_scale;
  for (int k = 0; k < K; ++k) {
    ad::Var shift = model.head()(tape, g, ad::concat({enc.outputs[k], steps[k]}, 1));
    if (scale != 1.0) shift = ad::scale(shift, scale);
    out.shifts.push_back(shift);
    out.frames.push_back(ad::add(out.upsampled[k], shift));
  }
  out.hidden = ad::concat({enc.final_forward, enc.final_backward}, 1);
  return out;
}

ad::Var d_logits(ad::Tape& tape, LsgModel& model, const ad::Mlp& net, ad::Var x, bool train_d) {
  if (train_d) return net(tape, model.discriminators(), x);
  const ad::ParamStore& frozen = model.discriminators();
  return net(tape, frozen, x);
}

ad::Var bce_const(ad::Var logits, double target) {
  const std::vector<double> t(logits.value().size(), target);
  return ad::bce_with_logits(logits, t);
}

std::vector<int> classes_of(const LsgModel& model, std::span<const int> ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(model.class_of(id));
  return out;
}

}  // namespace

LsgForward lsg_forward(ad::Tape& tape, LsgModel& model, ad::ParamStore& g, ad::Var p_first, ad::Var p_last, int K) {
  return forward_impl(tape, model, g, p_first, p_last, K);
}

LsgForward lsg_forward(ad::Tape& tape, const LsgModel& model, ad::Var p_first, ad::Var p_last, int K) {
  const ad::ParamStore& g = model.generator();
  return forward_impl(tape, model, g, p_first, p_last, K);
}

LandmarkSequence lsg_forward(const LandmarkFrame& a, const LandmarkFrame& b, const LsgModel& model, int K) {
  ad::Tape tape;
  const ad::Var va = tape.constant(rows_tensor({flatten(a)}));
  const ad::Var vb = tape.constant(rows_tensor({flatten(b)}));
  const LsgForward fwd = lsg_forward(tape, model, va, vb, K);
  std::vector<LandmarkFrame> frames;
  for (const auto& f : fwd.frames) frames.push_back(unflatten(f.value().values()));
  return LandmarkSequence(std::move(frames));
}

LandmarkSequence synthesize(const LandmarkFrame& a, const LandmarkFrame& b, const LsgModel& model, int K) {
  return lsg_forward(a, b, model, K);
}

AdvTerms adv_losses_d1(ad::Tape& tape, LsgModel& model, ad::Var real, ad::Var fake, bool train_d) {
  if (real.value().rows() < 1 || fake.value().rows() < 1) fail(ErrorCode::ShapeMismatch, "empty D1 batch");
  const ad::Var lr = d_logits(tape, model, model.d1(), model.standardize(tape, real), train_d);
  const ad::Var lf = d_logits(tape, model, model.d1(), model.standardize(tape, fake), train_d);
  return {ad::add(bce_const(lr, 1.0), bce_const(lf, 0.0)), bce_const(lf, 1.0)};
}

AdvTerms adv_losses_d2(ad::Tape& tape, LsgModel& model, ad::Var input, ad::Var generated, ad::Var positive,
                       ad::Var negative, std::span<const int> input_ids, std::span<const int> negative_ids,
                       bool train_d) {
  const int B = input.value().rows();
  if (static_cast<int>(input_ids.size()) != B || static_cast<int>(negative_ids.size()) != B) {
    fail(ErrorCode::ShapeMismatch, "D2 needs one identity label per row");
  }
  for (int i = 0; i < B; ++i) {
    if (input_ids[i] == negative_ids[i]) {
      fail(ErrorCode::IdentityCollision, "negative frame shares identity " + std::to_string(input_ids[i]));
    }
  }
  const ad::Var in = model.standardize(tape, input);
  auto score = [&](ad::Var other) {
    return d_logits(tape, model, model.d2(), ad::concat({in, model.standardize(tape, other)}, 1), train_d);
  };
  const ad::Var lg = score(generated);
  const ad::Var d = ad::add(ad::add(bce_const(score(positive), 1.0), bce_const(score(negative), 0.0)),
                            bce_const(lg, 0.0));
  return {d, bce_const(lg, 1.0)};
}

ad::Var loss_support_hidden(ad::Tape& tape, LsgModel& model, ad::Var hidden, std::span<const int> ids) {
  const std::vector<int> cls = classes_of(model, ids);
  return ad::softmax_cross_entropy(model.s_hidden()(tape, model.generator(), hidden), cls);
}

ad::Var loss_support_output(ad::Tape& tape, LsgModel& model, const std::vector<ad::Var>& frames,
                            std::span<const int> ids) {
  if (frames.empty()) fail(ErrorCode::ShapeMismatch, "no generated frames");
  const std::vector<int> cls = classes_of(model, ids);
  std::vector<int> all;
  for (std::size_t k = 0; k < frames.size(); ++k) all.insert(all.end(), cls.begin(), cls.end());
  const ad::Var x = model.standardize(tape, ad::concat(frames, 0));
  return ad::softmax_cross_entropy(model.s_output()(tape, model.generator(), x), all);
}

ad::Var total_lsg_loss(const LsgTerms& t, const LsgConfig& cfg) {
  ad::Var total = ad::add(ad::add(ad::scale(t.d1, cfg.lambda_d1), ad::scale(t.d2, cfg.lambda_d2)),
                          ad::add(ad::scale(t.s_hidden, cfg.lambda_s_hidden), ad::scale(t.s_output, cfg.lambda_s_output)));
  if (t.rec.valid() && cfg.lambda_rec > 0.0) total = ad::add(total, ad::scale(t.rec, cfg.lambda_rec));
  return total;
}

double total_lsg_loss(double d1, double d2, double s_hidden, double s_output, const LsgConfig& cfg, double rec) {
  double total = cfg.lambda_d1 * d1 + cfg.lambda_d2 * d2 + cfg.lambda_s_hidden * s_hidden +
                 cfg.lambda_s_output * s_output;
  if (cfg.lambda_rec > 0.0) total += cfg.lambda_rec * rec;
  return total;
}

std::string LsgHistory::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "epoch,L_D1,L_D2,L_S1,L_S2,total,D1_loss,D2_loss,L_rec\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.l_d1 << ',' << e.l_d2 << ',' << e.l_s1 << ',' << e.l_s2 << ',' << e.total << ','
       << e.d1_loss << ',' << e.d2_loss << ',' << e.rec << '\n';
  }
  return os.str();
}

namespace {

struct Window {
  int record;
  int start;
};

class PairSampler {
 public:
  PairSampler(const Dataset& ds) : ds_(ds) {
    for (std::size_t r = 0; r < ds.records.size(); ++r) by_id_[ds.records[r].id].push_back(static_cast<int>(r));
    for (const auto& [id, _] : by_id_) ids_.push_back(id);
  }

  const std::array<double, kFrameDim> frame_of(int id, std::mt19937_64& rng) const {
    const auto& recs = by_id_.at(id);
    const auto& rec = ds_.records[recs[rng() % recs.size()]];
    return flatten(rec.frames[rng() % rec.frames.size()]);
  }

  int other_id(int id, std::mt19937_64& rng) const {
    const auto pos = std::find(ids_.begin(), ids_.end(), id) - ids_.begin();
    const auto n = ids_.size();
    return ids_[(pos + 1 + rng() % (n - 1)) % n];
  }

 private:
  const Dataset& ds_;
  std::map<int, std::vector<int>> by_id_;
  std::vector<int> ids_;
};

}  // namespace

TrainedLsg train_lsg(const Dataset& train, const LsgConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const int K = config.K;
  std::vector<Window> windows;
  std::map<int, int> seqs_per_id;
  for (std::size_t r = 0; r < train.records.size(); ++r) {
    const int n = static_cast<int>(train.records[r].frames.size());
    if (n >= K) {
      windows.push_back({static_cast<int>(r), n - K});
      ++seqs_per_id[train.records[r].id];
    }
  }
  if (seqs_per_id.size() < 2) {
    fail(ErrorCode::DatasetTooSmall, "training needs >= 2 identities with sequences of >= " + std::to_string(K) +
                                         " frames");
  }
  std::vector<int> labels;
  for (const auto& [id, _] : seqs_per_id) labels.push_back(id);

  TrainedLsg out{LsgModel(config, labels), {}};
  LsgModel& model = out.model;
  {
    Eigen::MatrixXd all(static_cast<Eigen::Index>(train.frame_count()), kFrameDim);
    Eigen::Index row = 0;
    for (const auto& rec : train.records) {
      for (const auto& f : rec.frames) {
        const auto flat = flatten(f);
        for (int c = 0; c < kFrameDim; ++c) all(row, c) = flat[c];
        ++row;
      }
    }
    const Eigen::RowVectorXd mean = all.colwise().mean();
    const Eigen::RowVectorXd sd =
        ((all.rowwise() - mean).array().square().colwise().sum() / std::max<double>(1.0, row - 1.0)).sqrt() + 1e-3;
    model.set_normalization(mean, sd);
  }

  const PairSampler sampler(train);
  std::mt19937_64 rng(derive_seed(config.seed, 0x7a1));
  std::normal_distribution<double> noise(0.0, 1.0);
  const ad::AdamConfig adam = config.adam();
  const ad::LrSchedule sched = config.schedule();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = ad::lr_schedule(epoch, sched);
    std::shuffle(windows.begin(), windows.end(), rng);
    LsgEpoch acc;
    acc.epoch = epoch;
    int iters = 0;
    for (std::size_t start = 0; start < windows.size(); start += config.batch_size) {
      const std::size_t end = std::min(windows.size(), start + static_cast<std::size_t>(config.batch_size));
      const int B = static_cast<int>(end - start);
      std::vector<std::array<double, kFrameDim>> first, last, positive, negative, real_interior;
      std::vector<std::vector<std::array<double, kFrameDim>>> truth(K);
      std::vector<int> ids, neg_ids;
      for (std::size_t w = start; w < end; ++w) {
        const auto& rec = train.records[windows[w].record];
        const int s = windows[w].start == 0 ? 0 : static_cast<int>(rng() % (windows[w].start + 1));
        for (int k = 0; k < K; ++k) truth[k].push_back(flatten(rec.frames[s + k]));
        auto a = truth[0].back();
        auto b = truth[K - 1].back();
        for (int c = 0; c < kFrameDim; ++c) {
          a[c] += config.noise_sigma * noise(rng);
          b[c] += config.noise_sigma * noise(rng);
        }
        first.push_back(a);
        last.push_back(b);
        for (int k = 1; k + 1 < K; ++k) real_interior.push_back(truth[k].back());
        ids.push_back(rec.id);
        positive.push_back(sampler.frame_of(rec.id, rng));
        const int other = sampler.other_id(rec.id, rng);
        neg_ids.push_back(other);
        negative.push_back(sampler.frame_of(other, rng));
      }
      // D2 scores one generated frame per sample.
      std::vector<int> pick(B);
      for (int i = 0; i < B; ++i) pick[i] = static_cast<int>(rng() % K);

      const ad::Tensor first_t = rows_tensor(first), last_t = rows_tensor(last);
      const ad::Tensor pos_t = rows_tensor(positive), neg_t = rows_tensor(negative);

      // Discriminator step on frozen generator output.
      ad::Tensor gen_all, gen_pick({B, kFrameDim});
      {
        ad::Tape tape;
        const LsgModel& frozen = model;
        const LsgForward fwd = lsg_forward(tape, frozen, tape.constant(first_t), tape.constant(last_t), K);
        std::vector<ad::Var> frames = fwd.frames;
        gen_all = ad::concat(frames, 0).value();
        for (int i = 0; i < B; ++i) {
          const ad::Tensor& f = fwd.frames[pick[i]].value();
          std::copy(f.data() + i * kFrameDim, f.data() + (i + 1) * kFrameDim, gen_pick.data() + i * kFrameDim);
        }
      }
      const ad::Tensor real_t = rows_tensor(real_interior.empty() ? truth[0] : real_interior);
      for (int s = 0; s < config.d_steps; ++s) {
        ad::Tape tape;
        const AdvTerms t1 = adv_losses_d1(tape, model, tape.constant(real_t), tape.constant(gen_all), true);
        const AdvTerms t2 = adv_losses_d2(tape, model, tape.constant(first_t), tape.constant(gen_pick),
                                          tape.constant(pos_t), tape.constant(neg_t), ids, neg_ids, true);
        const ad::Var dl = ad::add(t1.d_loss, t2.d_loss);
        model.discriminators().zero_grad();
        tape.backward(dl);
        ad::adam_step(model.discriminators(), lr, adam);
        if (s == 0) {
          acc.d1_loss += t1.d_loss.value().item();
          acc.d2_loss += t2.d_loss.value().item();
        }
      }

      // Generator and support step against frozen discriminators.
      {
        ad::Tape tape;
        const LsgForward fwd =
            lsg_forward(tape, model, model.generator(), tape.constant(first_t), tape.constant(last_t), K);
        const ad::Var all_fake = ad::concat(fwd.frames, 0);
        std::vector<ad::Var> picked_rows;
        for (int i = 0; i < B; ++i) picked_rows.push_back(ad::slice(fwd.frames[pick[i]], 0, i, i + 1));
        const ad::Var gen_picked = ad::concat(picked_rows, 0);
        LsgTerms terms;
        terms.d1 = adv_losses_d1(tape, model, tape.constant(real_t), all_fake, false).g_loss;
        terms.d2 = adv_losses_d2(tape, model, tape.constant(first_t), gen_picked, tape.constant(pos_t),
                                 tape.constant(neg_t), ids, neg_ids, false)
                       .g_loss;
        terms.s_hidden = loss_support_hidden(tape, model, fwd.hidden, ids);
        terms.s_output = loss_support_output(tape, model, fwd.frames, ids);
        std::vector<std::array<double, kFrameDim>> truth_rows;
        for (int k = 0; k < K; ++k) truth_rows.insert(truth_rows.end(), truth[k].begin(), truth[k].end());
        terms.rec = ad::mse(all_fake, tape.constant(rows_tensor(truth_rows)));
        const ad::Var total = total_lsg_loss(terms, config);
        model.generator().zero_grad();
        tape.backward(total);
        ad::adam_step(model.generator(), lr, adam);
        acc.l_d1 += terms.d1.value().item();
        acc.l_d2 += terms.d2.value().item();
        acc.l_s1 += terms.s_hidden.value().item();
        acc.l_s2 += terms.s_output.value().item();
        acc.rec += terms.rec.value().item();
        acc.total += total.value().item();
      }
      ++iters;
    }
    const double n = std::max(1, iters);
    for (double* v : {&acc.l_d1, &acc.l_d2, &acc.l_s1, &acc.l_s2, &acc.total, &acc.d1_loss, &acc.d2_loss, &acc.rec}) {
      *v /= n;
    }
    out.history.epochs.push_back(acc);
    if (on_epoch) on_epoch(acc, model);
  }
  return out;
}

ordered_json D2Report::to_json() const {
  return {{"accuracy", accuracy},
          {"positive_accuracy", positive_accuracy},
          {"negative_accuracy", negative_accuracy},
          {"pairs", pairs}};
}

D2Report evaluate_d2(const LsgModel& model, const Dataset& heldout, double noise_sigma, std::uint64_t seed) {
  const std::vector<int> ids = heldout.identity_labels();
  if (ids.size() < 2) fail(ErrorCode::DatasetTooSmall, "D2 evaluation needs >= 2 identities");
  const PairSampler sampler(heldout);
  std::vector<std::array<double, kFrameDim>> input, pos, neg;
  for (std::size_t r = 0; r < heldout.records.size(); ++r) {
    const auto& rec = heldout.records[r];
    std::mt19937_64 rng(derive_seed(seed, r));
    std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
    auto a = flatten(rec.frames.front());
    if (noise_sigma > 0.0) {
      for (double& v : a) v += noise(rng);
    }
    input.push_back(a);
    pos.push_back(sampler.frame_of(rec.id, rng));
    neg.push_back(sampler.frame_of(sampler.other_id(rec.id, rng), rng));
  }
  ad::Tape tape;
  const ad::ParamStore& d = model.discriminators();
  const ad::Var in = model.standardize(tape, tape.constant(rows_tensor(input)));
  auto score = [&](const std::vector<std::array<double, kFrameDim>>& other) {
    const ad::Var x = ad::concat({in, model.standardize(tape, tape.constant(rows_tensor(other)))}, 1);
    return model.d2()(tape, d, x).value();
  };
  const ad::Tensor sp = score(pos), sn = score(neg);
  D2Report rep;
  rep.pairs = input.size();
  for (std::size_t i = 0; i < rep.pairs; ++i) {
    if (sp[i] > 0.0) rep.positive_accuracy += 1.0;
    if (sn[i] < 0.0) rep.negative_accuracy += 1.0;
  }
  rep.positive_accuracy /= rep.pairs;
  rep.negative_accuracy /= rep.pairs;
  rep.accuracy = 0.5 * (rep.positive_accuracy + rep.negative_accuracy);
  return rep;
}

}  // namespace lmsynth

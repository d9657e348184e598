#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmsynth/ad/layers.hpp"
#include "lmsynth/ad/optim.hpp"
#include "lmsynth/synth_face.hpp"

namespace lmsynth {

struct LsgConfig {
  int K = 8;
  int hidden_size = 64;
  double lambda_d1 = 1.0;
  double lambda_d2 = 1.0;
  double lambda_s_hidden = 1.0;
  double lambda_s_output = 1.0;
  double lambda_rec = 0.0;
  int epochs = 45;
  int batch_size = 8;
  std::uint64_t seed = 3;
  double noise_sigma = 0.02;

  double lr = 2e-4;
  int lr_constant_until = 30;
  int lr_zero_at = 45;
  double beta1 = 0.5;
  double beta2 = 0.999;

  int d_hidden = 128;
  int s_hidden = 64;
  std::string d_activation = "leaky_relu";
  int d_steps = 1;
  /// Multiplies the raw head output before it is added to the upsampled frames.
  double shift_scale = 1.0;
  std::string init = "glorot_uniform";

  void validate() const;
  ad::LrSchedule schedule() const { return {lr, lr_constant_until, lr_zero_at}; }
  ad::AdamConfig adam() const { return {beta1, beta2, 1e-8}; }
  nlohmann::ordered_json to_json() const;
  static LsgConfig from_json(const nlohmann::json& j);
};

/// Generator (Bi-LSTM + zero-initialized shift head), the two discriminators and
/// the two identity support classifiers. Frames enter every net standardized with
/// training-set statistics.
class LsgModel {
 public:
  LsgModel() = default;
  /// `labels` are the identity ids of the support classifiers' classes, in class order.
  LsgModel(const LsgConfig& cfg, std::vector<int> labels);

  const LsgConfig& config() const { return cfg_; }
  int num_classes() const { return static_cast<int>(labels_.size()); }
  const std::vector<int>& labels() const { return labels_; }
  /// Throws UnknownClass.
  int class_of(int identity) const;

  /// Generator and support nets (one optimizer).
  ad::ParamStore& generator() { return g_; }
  const ad::ParamStore& generator() const { return g_; }
  /// D1 and D2 (second optimizer).
  ad::ParamStore& discriminators() { return d_; }
  const ad::ParamStore& discriminators() const { return d_; }

  void set_normalization(const Eigen::RowVectorXd& mean, const Eigen::RowVectorXd& scale);
  ad::Var standardize(ad::Tape& tape, ad::Var frames) const;

  const ad::BiLstm& lstm() const { return lstm_; }
  const ad::Dense& head() const { return head_; }
  const ad::Mlp& d1() const { return d1_; }
  const ad::Mlp& d2() const { return d2_; }
  const ad::Mlp& s_hidden() const { return s_hidden_; }
  const ad::Mlp& s_output() const { return s_output_; }

  void save(const std::filesystem::path& path, const nlohmann::ordered_json& extra = {}) const;
  static LsgModel load(const std::filesystem::path& path);

 private:
  LsgConfig cfg_;
  std::vector<int> labels_;
  std::map<int, int> class_index_;
  ad::BiLstm lstm_;
  ad::Dense head_;
  ad::Mlp d1_, d2_, s_hidden_, s_output_;
  ad::ParamStore g_, d_;
  ad::Tensor norm_neg_mean_, norm_inv_scale_;
};

struct LsgForward {
  std::vector<ad::Var> frames;     // K tensors [B, 196]
  std::vector<ad::Var> upsampled;  // K constants [B, 196]
  std::vector<ad::Var> shifts;     // raw head outputs times shift_scale
  ad::Var hidden;                  // [B, 2 hidden]: final forward and backward states
};

/// Batched generator pass; `p_first` and `p_last` are [B, 196]. The non-const store
/// records gradients, the const one runs the generator frozen.
LsgForward lsg_forward(ad::Tape& tape, LsgModel& model, ad::ParamStore& g, ad::Var p_first, ad::Var p_last, int K);
LsgForward lsg_forward(ad::Tape& tape, const LsgModel& model, ad::Var p_first, ad::Var p_last, int K);

/// Single pair: output_k = upsample_linear(a, b, K)_k + shift_k.
LandmarkSequence lsg_forward(const LandmarkFrame& a, const LandmarkFrame& b, const LsgModel& model, int K);
LandmarkSequence synthesize(const LandmarkFrame& a, const LandmarkFrame& b, const LsgModel& model, int K);

struct AdvTerms {
  ad::Var d_loss;
  ad::Var g_loss;
};

/// d: BCE(D1(real), 1) + BCE(D1(fake), 0); g: BCE(D1(fake), 1). Means over frames.
AdvTerms adv_losses_d1(ad::Tape& tape, LsgModel& model, ad::Var real, ad::Var fake, bool train_d);
/// d: BCE(D2(in, positive), 1) + BCE(D2(in, negative), 0) + BCE(D2(in, generated), 0);
/// g: BCE(D2(in, generated), 1). Throws IdentityCollision when a negative shares the input's id.
AdvTerms adv_losses_d2(ad::Tape& tape, LsgModel& model, ad::Var input, ad::Var generated, ad::Var positive,
                       ad::Var negative, std::span<const int> input_ids, std::span<const int> negative_ids,
                       bool train_d);

/// CE of S_hidden on the generator's final hidden states.
ad::Var loss_support_hidden(ad::Tape& tape, LsgModel& model, ad::Var hidden, std::span<const int> ids);
/// Mean over generated frames of the CE of S_output.
ad::Var loss_support_output(ad::Tape& tape, LsgModel& model, const std::vector<ad::Var>& frames,
                            std::span<const int> ids);

struct LsgTerms {
  ad::Var d1, d2, s_hidden, s_output;
  ad::Var rec;  // optional
};

ad::Var total_lsg_loss(const LsgTerms& terms, const LsgConfig& cfg);
double total_lsg_loss(double d1, double d2, double s_hidden, double s_output, const LsgConfig& cfg,
                      double rec = 0.0);

struct LsgEpoch {
  int epoch = 0;
  double l_d1 = 0, l_d2 = 0, l_s1 = 0, l_s2 = 0, total = 0;  // generator-side terms of the objective
  double d1_loss = 0, d2_loss = 0, rec = 0;                  // discriminator losses, reconstruction MSE
};

struct LsgHistory {
  std::vector<LsgEpoch> epochs;
  std::string to_csv() const;
};

struct TrainedLsg {
  LsgModel model;
  LsgHistory history;
};

using EpochCallback = std::function<void(const LsgEpoch&, const LsgModel&)>;

/// Throws DatasetTooSmall unless there are >= 2 identities with sequences of >= K frames.
TrainedLsg train_lsg(const Dataset& train, const LsgConfig& config, const EpochCallback& on_epoch = {});

struct D2Report {
  double accuracy = 0.0;  // balanced over positive and negative pairs
  double positive_accuracy = 0.0;
  double negative_accuracy = 0.0;
  std::size_t pairs = 0;
  nlohmann::ordered_json to_json() const;
};

/// Scores (noisy first frame, real same-id frame) against (noisy first frame, other-id frame)
/// with D2 on frames not used for training. Threshold at logit 0.
D2Report evaluate_d2(const LsgModel& model, const Dataset& heldout, double noise_sigma, std::uint64_t seed);

}  // namespace lmsynth

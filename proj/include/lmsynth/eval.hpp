#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "lmsynth/lsg.hpp"
#include "lmsynth/metrics.hpp"

namespace lmsynth {

struct EvalConfig {
  double noise_sigma = 0.02;
  /// Endpoint pairs to score, one per held-out record in (id, seq) order; 0 means all.
  int pairs = 0;
  std::uint64_t seed = 17;
  int bins = 20;
  int workers = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j);
};

struct MethodReport {
  double mean_csim = 0.0;
  std::vector<double> frame_mean_csim;    // per output position k
  std::vector<double> frame_median_csim;  // per output position k
  /// Median over endpoint frames of the per-coordinate RMS distance to the clean frame.
  double endpoint_error = 0.0;
  /// Same statistic over interior frames against the real interior frames.
  double interior_error = 0.0;
  /// Mean point displacement between consecutive output frames.
  double smoothness = 0.0;
  std::vector<double> scores;  // every per-frame CSIM, pair-major
  Histogram histogram;

  nlohmann::ordered_json to_json() const;
};

struct IdentityEvalReport {
  MethodReport li;
  MethodReport lsg;
  std::size_t pairs = 0;
  int K = 0;
  EvalConfig config;

  double csim_gain() const { return lsg.mean_csim - li.mean_csim; }
  /// The JSON omits raw scores; see histogram_table().
  nlohmann::ordered_json to_json() const;
  std::string histogram_table() const;
  std::string histogram_chart() const;
};

/// Synthesizes every held-out endpoint pair (noise-perturbed at sigma) with linear
/// interpolation and with the model, and scores each output frame by CSIM against the
/// identity's mean clean embedding. Results do not depend on `workers`.
/// Throws DatasetTooSmall when no record has K frames.
IdentityEvalReport eval_identity_preservation(const Dataset& heldout, const LsgModel& model,
                                              const EmbeddingModel& embedder, const EvalConfig& config);

}  // namespace lmsynth

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lmsynth/ad/layers.hpp"
#include "lmsynth/reenact_losses.hpp"
#include "lmsynth/synth_face.hpp"

namespace lmsynth {

struct EmbedderConfig {
  std::vector<int> hidden{128, 64};
  int epochs = 30;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 11;
  /// Evaluation-only control: permute the training labels.
  bool shuffle_labels = false;

  nlohmann::ordered_json to_json() const;
  static EmbedderConfig from_json(const nlohmann::json& j);
};

/// Identity classifier over flattened frames. The embedding is the L2-normalized
/// last hidden layer; inputs are standardized with training-set statistics.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(const EmbedderConfig& cfg, int num_classes);

  std::vector<double> embed(const LandmarkFrame& frame) const;
  /// Rows of the result are unit embeddings of the rows of `frames` ([n, 196]).
  ad::MatrixRM embed_batch(const ad::MatrixRM& frames) const;
  int classify(const LandmarkFrame& frame) const;

  int num_classes() const { return num_classes_; }
  int embedding_dim() const { return cfg_.hidden.back(); }
  const EmbedderConfig& config() const { return cfg_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  /// Logits for a batch on a tape (training path).
  ad::Var logits(ad::Tape& tape, ad::Var frames);

  void save(const std::filesystem::path& path, const nlohmann::ordered_json& extra = {}) const;
  static EmbeddingModel load(const std::filesystem::path& path);

 private:
  ad::MatrixRM hidden_forward(const ad::MatrixRM& frames) const;

  EmbedderConfig cfg_;
  int num_classes_ = 0;
  ad::Mlp net_;
  ad::ParamStore params_;
};

struct EmbedderReport {
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;
  std::size_t train_frames = 0;
  std::size_t heldout_frames = 0;
  std::vector<double> epoch_loss;
  nlohmann::ordered_json to_json() const;
};

struct TrainedEmbedder {
  EmbeddingModel model;
  EmbedderReport report;
};

/// Trains on the non-held-out sequences and scores the held-out ones. Throws DatasetTooSmall.
TrainedEmbedder train_id_embedder(const Dataset& dataset, const EmbedderConfig& config, int heldout_seqs_per_id);

/// Cosine of the angle between a and b. Throws ZeroVector, DimensionMismatch.
double csim(std::span<const double> a, std::span<const double> b);

enum class RasterStyle { Polyline, Blob };

struct RasterOptions {
  RasterStyle style = RasterStyle::Polyline;
  double line_width = 1.0;   // pixels
  double blob_sigma = 1.0;   // pixels; below 0.5 each point lights only its own pixel
  /// Face-coordinate window mapped onto the image.
  double center_x = 0.0;
  double center_y = 0.3;
  double half_extent = 1.3;
};

/// Single-channel render in [0, 1]. Requires H, W >= 16.
Image rasterize_landmarks(const LandmarkFrame& frame, int height, int width, const RasterOptions& opt = {});

/// Index chains drawn for the polyline style; closed chains repeat their first index.
const std::vector<std::vector<int>>& landmark_polylines();

std::string frame_to_svg(const LandmarkFrame& frame, int size = 256, const RasterOptions& opt = {});
/// Plain PGM (P2), 8-bit.
std::string image_to_pgm(const Image& img);
Image image_from_pgm(const std::string& text);

/// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5), L = 1.
double ssim(const Image& a, const Image& b);

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  /// Unbiased covariance of the rows of `samples`.
  static GaussianStats from_samples(const Eigen::MatrixXd& samples);
};

double frechet_distance(const GaussianStats& a, const GaussianStats& b);

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  std::size_t total() const;
};

/// Uniform bins over [-1, 1]; the top edge belongs to the last bin.
Histogram csim_histogram(std::span<const double> scores, int bins);
std::string histogram_csv(const std::vector<std::string>& names, const std::vector<Histogram>& hists);
std::string histogram_svg(const std::vector<std::string>& names, const std::vector<Histogram>& hists);

}  // namespace lmsynth

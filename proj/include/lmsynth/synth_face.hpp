#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lmsynth/face_template.hpp"
#include "lmsynth/landmark.hpp"
#include "lmsynth/pose.hpp"
#include "lmsynth/record_io.hpp"

namespace lmsynth {

/// One coefficient in [-1, 1] per identity basis entry, in kIdentityAttributes order.
struct IdentityParams {
  std::array<double, kNumIdentityAttributes> coeff{};

  double& operator[](std::string_view attr);
  double operator[](std::string_view attr) const;
  void validate() const;
  bool operator==(const IdentityParams&) const = default;
};

struct ExpressionParams {
  double mouth_open = 0.0;      // [0, 1]
  double smile = 0.0;           // [0, 1]
  double eye_closure = 0.0;     // [0, 1]
  double eyeball_offset = 0.0;  // [-1, 1]

  std::array<double, kNumExpressionAttributes> as_array() const {
    return {mouth_open, smile, eye_closure, eyeball_offset};
  }
  void validate() const;
  bool operator==(const ExpressionParams&) const = default;
};

/// Project R(pose) * (base + identity + expression offsets) orthographically and
/// center the result on the inter-ocular midpoint.
LandmarkFrame synthesize_frame(const IdentityParams& id, const ExpressionParams& expr,
                               const PoseAngles& pose,
                               const FaceTemplate3D& tmpl = FaceTemplate3D::canonical());

struct DatasetConfig {
  int n_ids = 50;
  int seqs_per_id = 20;
  int frames_per_seq = 8;
  std::uint64_t seed = 7;
  /// Trailing sequences of each identity reserved for evaluation.
  int heldout_seqs_per_id = 4;
  /// Per-identity pose amplitudes are drawn uniformly from these ranges (degrees).
  double max_yaw = 40.0;
  double min_yaw = 5.0;
  double max_pitch = 25.0;
  double min_pitch = 3.0;
  double max_roll = 8.0;
  int keyframes = 4;

  nlohmann::ordered_json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
};

struct Dataset {
  std::vector<LandmarkRecord> records;
  std::map<int, IdentityParams> identities;
  nlohmann::ordered_json config;

  std::vector<int> identity_labels() const;
  std::size_t frame_count() const;
  /// Splits each identity's records by seq: seq >= seqs_per_id - heldout goes to the second half.
  std::pair<Dataset, Dataset> split(int heldout_seqs_per_id) const;
};

Dataset generate_dataset(const DatasetConfig& config);

/// Writes the record file and `<path>.meta.json` (identity params, config, format version).
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
/// Reads a record file; the sidecar is loaded when present.
Dataset read_dataset(const std::filesystem::path& path);

std::filesystem::path metadata_path(const std::filesystem::path& record_path);

/// Sweeps one identity or expression coefficient linearly over [-1, 1]
/// ([0, 1] for bounded expression attributes) in `steps` frames.
LandmarkSequence manipulate_attribute(const IdentityParams& id, const ExpressionParams& expr,
                                      const PoseAngles& pose, std::string_view attr, int steps);

/// Mixes a 64-bit seed with a stream index (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline constexpr int kFormatVersion = 1;

}  // namespace lmsynth

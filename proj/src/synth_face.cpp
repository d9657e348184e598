#include "lmsynth/synth_face.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "lmsynth/error.hpp"

namespace lmsynth {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

int identity_attr_index(std::string_view attr) {
  for (int i = 0; i < kNumIdentityAttributes; ++i) {
    if (attr == kIdentityAttributes[i]) return i;
  }
  return -1;
}

void check_range(double v, double lo, double hi, std::string_view what) {
  if (!std::isfinite(v) || v < lo || v > hi) {
    fail(ErrorCode::InvalidArgument, std::string(what) + " out of range: " + std::to_string(v));
  }
}

// Catmull-Rom through uniformly spaced keys, endpoints clamped; t in [0, 1].
double catmull_rom(const std::vector<double>& keys, double t) {
  const int n = static_cast<int>(keys.size());
  if (n == 1) return keys[0];
  const double u = t * (n - 1);
  const int i = std::min(static_cast<int>(u), n - 2);
  const double s = u - i;
  const auto key = [&](int k) { return keys[std::clamp(k, 0, n - 1)]; };
  const double p0 = key(i - 1), p1 = key(i), p2 = key(i + 1), p3 = key(i + 2);
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * s * s * s);
}

struct Channel {
  double lo;
  double hi;
  std::vector<double> keys;

  double at(double t) const { return std::clamp(catmull_rom(keys, t), lo, hi); }
};

}  // namespace

double& IdentityParams::operator[](std::string_view attr) {
  const int i = identity_attr_index(attr);
  if (i < 0) fail(ErrorCode::UnknownAttribute, "unknown identity attribute '" + std::string(attr) + "'");
  return coeff[i];
}

double IdentityParams::operator[](std::string_view attr) const {
  const int i = identity_attr_index(attr);
  if (i < 0) fail(ErrorCode::UnknownAttribute, "unknown identity attribute '" + std::string(attr) + "'");
  return coeff[i];
}

void IdentityParams::validate() const {
  for (int i = 0; i < kNumIdentityAttributes; ++i) check_range(coeff[i], -1.0, 1.0, kIdentityAttributes[i]);
}

void ExpressionParams::validate() const {
  check_range(mouth_open, 0.0, 1.0, "mouth_open");
  check_range(smile, 0.0, 1.0, "smile");
  check_range(eye_closure, 0.0, 1.0, "eye_closure");
  check_range(eyeball_offset, -1.0, 1.0, "eyeball_offset");
}

LandmarkFrame synthesize_frame(const IdentityParams& id, const ExpressionParams& expr,
                               const PoseAngles& pose, const FaceTemplate3D& tmpl) {
  id.validate();
  expr.validate();
  pose.validate();
  Points3 shape = tmpl.base;
  for (int i = 0; i < kNumIdentityAttributes; ++i) shape += id.coeff[i] * tmpl.identity_basis[i].offsets;
  const auto e = expr.as_array();
  for (int j = 0; j < kNumExpressionAttributes; ++j) shape += e[j] * tmpl.expression_basis[j].offsets;

  const Eigen::Matrix3d R = rotation_matrix(pose);
  const Points3 rotated = shape * R.transpose();
  const LandmarkFrame projected{Points2(rotated.leftCols<2>())};
  Points2 p = projected.coords();
  p.rowwise() -= interocular_midpoint(projected);
  return LandmarkFrame(p);
}

ordered_json DatasetConfig::to_json() const {
  return {{"n_ids", n_ids},
          {"seqs_per_id", seqs_per_id},
          {"frames_per_seq", frames_per_seq},
          {"seed", seed},
          {"heldout_seqs_per_id", heldout_seqs_per_id},
          {"max_yaw", max_yaw},
          {"min_yaw", min_yaw},
          {"max_pitch", max_pitch},
          {"min_pitch", min_pitch},
          {"max_roll", max_roll},
          {"keyframes", keyframes}};
}

DatasetConfig DatasetConfig::from_json(const json& j) {
  DatasetConfig c;
  const std::set<std::string> known{"n_ids",     "seqs_per_id", "frames_per_seq", "seed",
                                    "heldout_seqs_per_id", "max_yaw", "min_yaw", "max_pitch",
                                    "min_pitch", "max_roll",    "keyframes"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail(ErrorCode::ConfigError, "unknown dataset key '" + key + "'");
  }
  try {
    c.n_ids = j.value("n_ids", c.n_ids);
    c.seqs_per_id = j.value("seqs_per_id", c.seqs_per_id);
    c.frames_per_seq = j.value("frames_per_seq", c.frames_per_seq);
    c.seed = j.value("seed", c.seed);
    c.heldout_seqs_per_id = j.value("heldout_seqs_per_id", c.heldout_seqs_per_id);
    c.max_yaw = j.value("max_yaw", c.max_yaw);
    c.min_yaw = j.value("min_yaw", c.min_yaw);
    c.max_pitch = j.value("max_pitch", c.max_pitch);
    c.min_pitch = j.value("min_pitch", c.min_pitch);
    c.max_roll = j.value("max_roll", c.max_roll);
    c.keyframes = j.value("keyframes", c.keyframes);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("dataset config: ") + e.what());
  }
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<int> Dataset::identity_labels() const {
  std::set<int> ids;
  for (const auto& r : records) ids.insert(r.id);
  return {ids.begin(), ids.end()};
}

std::size_t Dataset::frame_count() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.frames.size();
  return n;
}

std::pair<Dataset, Dataset> Dataset::split(int heldout_seqs_per_id) const {
  std::map<int, int> seqs_per_id;
  for (const auto& r : records) seqs_per_id[r.id] = std::max(seqs_per_id[r.id], r.seq + 1);
  Dataset train, heldout;
  train.identities = heldout.identities = identities;
  train.config = heldout.config = config;
  for (const auto& r : records) {
    const bool held = r.seq >= seqs_per_id[r.id] - heldout_seqs_per_id;
    (held ? heldout : train).records.push_back(r);
  }
  return {std::move(train), std::move(heldout)};
}

Dataset generate_dataset(const DatasetConfig& config) {
  if (config.n_ids < 1 || config.seqs_per_id < 1 || config.frames_per_seq < 1) {
    fail(ErrorCode::ConfigError, "dataset counts must be >= 1");
  }
  if (config.keyframes < 1) fail(ErrorCode::ConfigError, "keyframes must be >= 1");
  Dataset ds;
  ds.config = config.to_json();
  for (int id = 0; id < config.n_ids; ++id) {
    const std::uint64_t id_seed = derive_seed(config.seed, static_cast<std::uint64_t>(id));
    std::mt19937_64 rng(id_seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    IdentityParams params;
    for (auto& c : params.coeff) c = unit(rng);
    std::uniform_real_distribution<double> yaw_amp(config.min_yaw, config.max_yaw);
    std::uniform_real_distribution<double> pitch_amp(config.min_pitch, config.max_pitch);
    std::uniform_real_distribution<double> roll_amp(0.0, config.max_roll);
    const double ya = yaw_amp(rng), pa = pitch_amp(rng), ra = roll_amp(rng);
    ds.identities[id] = params;

    for (int s = 0; s < config.seqs_per_id; ++s) {
      std::mt19937_64 srng(derive_seed(id_seed, static_cast<std::uint64_t>(s)));
      const auto draw = [&](double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        Channel ch{lo, hi, {}};
        for (int k = 0; k < config.keyframes; ++k) ch.keys.push_back(d(srng));
        return ch;
      };
      const Channel yaw = draw(-ya, ya), pitch = draw(-pa, pa), roll = draw(-ra, ra);
      const Channel mouth = draw(0.0, 1.0), smile = draw(0.0, 1.0), eyes = draw(0.0, 0.8),
                    gaze = draw(-1.0, 1.0);

      LandmarkRecord rec;
      rec.id = id;
      rec.seq = s;
      ordered_json expression = ordered_json::array();
      for (int f = 0; f < config.frames_per_seq; ++f) {
        const double t = config.frames_per_seq == 1 ? 0.0 : static_cast<double>(f) / (config.frames_per_seq - 1);
        const PoseAngles pose{yaw.at(t), pitch.at(t), roll.at(t)};
        const ExpressionParams expr{mouth.at(t), smile.at(t), eyes.at(t), gaze.at(t)};
        rec.frames.push_back(synthesize_frame(params, expr, pose));
        rec.pose.push_back(pose);
        expression.push_back({expr.mouth_open, expr.smile, expr.eye_closure, expr.eyeball_offset});
      }
      rec.attrs = {{"expression", std::move(expression)}};
      ds.records.push_back(std::move(rec));
    }
  }
  return ds;
}

std::filesystem::path metadata_path(const std::filesystem::path& record_path) {
  return std::filesystem::path(record_path.string() + ".meta.json");
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_records(path, dataset.records);
  ordered_json ids = ordered_json::object();
  for (const auto& [label, params] : dataset.identities) {
    ordered_json p;
    for (int i = 0; i < kNumIdentityAttributes; ++i) p[kIdentityAttributes[i]] = params.coeff[i];
    ids[std::to_string(label)] = std::move(p);
  }
  ordered_json meta = {{"format_version", kFormatVersion},
                       {"config", dataset.config},
                       {"identities", std::move(ids)}};
  write_json_file(metadata_path(path), meta);
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset ds;
  ds.records = read_records(path);
  const auto meta_path = metadata_path(path);
  if (std::filesystem::exists(meta_path)) {
    const json meta = read_json_file(meta_path);
    if (meta.value("format_version", 0) != kFormatVersion) {
      fail(ErrorCode::UnsupportedVersion, "unsupported dataset metadata version in " + meta_path.string());
    }
    if (meta.contains("config")) ds.config = meta["config"];
    if (meta.contains("identities")) {
      for (const auto& [label, p] : meta["identities"].items()) {
        IdentityParams params;
        for (int i = 0; i < kNumIdentityAttributes; ++i) params.coeff[i] = p.at(kIdentityAttributes[i]).get<double>();
        ds.identities[std::stoi(label)] = params;
      }
    }
  }
  return ds;
}

LandmarkSequence manipulate_attribute(const IdentityParams& id, const ExpressionParams& expr,
                                      const PoseAngles& pose, std::string_view attr, int steps) {
  if (steps < 2) fail(ErrorCode::InvalidK, "manipulate_attribute needs steps >= 2");
  const int id_index = identity_attr_index(attr);
  int expr_index = -1;
  for (int j = 0; j < kNumExpressionAttributes; ++j) {
    if (attr == kExpressionAttributes[j]) expr_index = j;
  }
  if (id_index < 0 && expr_index < 0) {
    fail(ErrorCode::UnknownAttribute, "unknown attribute '" + std::string(attr) + "'");
  }
  const bool unsigned_expr = expr_index >= 0 && attr != "eyeball_offset";
  const double lo = unsigned_expr ? 0.0 : -1.0;
  std::vector<LandmarkFrame> frames;
  for (int k = 0; k < steps; ++k) {
    const double v = lo + (1.0 - lo) * k / (steps - 1);
    IdentityParams i2 = id;
    ExpressionParams e2 = expr;
    if (id_index >= 0) {
      i2.coeff[id_index] = v;
    } else {
      switch (expr_index) {
        case 0: e2.mouth_open = v; break;
        case 1: e2.smile = v; break;
        case 2: e2.eye_closure = v; break;
        default: e2.eyeball_offset = v; break;
      }
    }
    frames.push_back(synthesize_frame(i2, e2, pose));
  }
  return LandmarkSequence(std::move(frames));
}

}  // namespace lmsynth

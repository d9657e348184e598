#include "lmsynth/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "lmsynth/error.hpp"

namespace lmsynth {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(CurriculumMode mode) { return mode == CurriculumMode::AtMost ? "at_most" : "at_least"; }

CurriculumMode curriculum_mode_from_string(const std::string& s) {
  if (s == "at_most") return CurriculumMode::AtMost;
  if (s == "at_least") return CurriculumMode::AtLeast;
  fail(ErrorCode::ConfigError, "unknown curriculum mode '" + s + "'");
}

void CurriculumSchedule::validate() const {
  if (epochs_per_step < 1) fail(ErrorCode::ConfigError, "epochs_per_step must be >= 1");
  if (!(increment >= 0.0)) fail(ErrorCode::ConfigError, "increment must be >= 0");
  if (!std::isfinite(initial_threshold)) fail(ErrorCode::ConfigError, "initial_threshold must be finite");
  if (pairs_per_identity < 1) fail(ErrorCode::ConfigError, "pairs_per_identity must be >= 1");
}

ordered_json CurriculumSchedule::to_json() const {
  return {{"initial_threshold", initial_threshold}, {"increment", increment},
          {"epochs_per_step", epochs_per_step},     {"mode", to_string(mode)},
          {"pairs_per_identity", pairs_per_identity}};
}

CurriculumSchedule CurriculumSchedule::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "curriculum schedule must be an object");
  CurriculumSchedule s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "initial_threshold") s.initial_threshold = v.get<double>();
      else if (key == "increment") s.increment = v.get<double>();
      else if (key == "epochs_per_step") s.epochs_per_step = v.get<int>();
      else if (key == "mode") s.mode = curriculum_mode_from_string(v.get<std::string>());
      else if (key == "pairs_per_identity") s.pairs_per_identity = v.get<int>();
      else fail(ErrorCode::ConfigError, "unknown curriculum key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("curriculum: ") + e.what());
  }
  s.validate();
  return s;
}

std::vector<IdentityPoseStats> compute_pose_stats(const Dataset& dataset) {
  struct Range {
    double ymin = INFINITY, ymax = -INFINITY, pmin = INFINITY, pmax = -INFINITY;
    std::size_t frames = 0;
  };
  std::map<int, Range> ranges;
  for (int id : dataset.identity_labels()) ranges[id];
  const FaceTemplate3D& tmpl = FaceTemplate3D::canonical();
  for (const auto& rec : dataset.records) {
    Range& r = ranges[rec.id];
    for (std::size_t f = 0; f < rec.frames.size(); ++f) {
      const PoseAngles p = f < rec.pose.size() ? rec.pose[f] : estimate_pose(rec.frames[f], tmpl);
      r.ymin = std::min(r.ymin, p.yaw);
      r.ymax = std::max(r.ymax, p.yaw);
      r.pmin = std::min(r.pmin, p.pitch);
      r.pmax = std::max(r.pmax, p.pitch);
      ++r.frames;
    }
  }
  std::vector<IdentityPoseStats> out;
  for (const auto& [id, r] : ranges) {
    if (r.frames == 0) fail(ErrorCode::EmptyIdentity, "identity " + std::to_string(id) + " has no frames");
    out.push_back({id, r.ymax - r.ymin, r.pmax - r.pmin});
  }
  return out;
}

double threshold_at(int epoch, const CurriculumSchedule& schedule) {
  if (epoch < 0) fail(ErrorCode::InvalidArgument, "epoch must be >= 0");
  return schedule.initial_threshold + schedule.increment * static_cast<double>(epoch / schedule.epochs_per_step);
}

bool eligible(const IdentityPoseStats& stats, double threshold, CurriculumMode mode) {
  return mode == CurriculumMode::AtMost ? stats.spread() <= threshold : stats.spread() >= threshold;
}

std::vector<int> eligible_ids(const std::vector<IdentityPoseStats>& stats, double threshold, CurriculumMode mode) {
  std::vector<int> ids;
  for (const auto& s : stats) {
    if (eligible(s, threshold, mode)) ids.push_back(s.id);
  }
  return ids;
}

std::vector<FramePair> sample_pairs(const Dataset& dataset, const std::vector<IdentityPoseStats>& stats,
                                    int epoch, const CurriculumSchedule& schedule, std::uint64_t seed) {
  schedule.validate();
  const std::vector<int> ids = eligible_ids(stats, threshold_at(epoch, schedule), schedule.mode);
  if (ids.empty()) {
    fail(ErrorCode::NoEligibleIdentity, "no identity is eligible at epoch " + std::to_string(epoch));
  }
  std::map<int, std::vector<int>> records_of;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    if (dataset.records[r].frames.size() >= 2) records_of[dataset.records[r].id].push_back(static_cast<int>(r));
  }
  std::vector<FramePair> pairs;
  for (int id : ids) {
    const auto it = records_of.find(id);
    if (it == records_of.end()) fail(ErrorCode::EmptyIdentity, "identity " + std::to_string(id) + " has no sequences");
    std::mt19937_64 rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(epoch)), static_cast<std::uint64_t>(id)));
    std::uniform_int_distribution<std::size_t> pick_rec(0, it->second.size() - 1);
    for (int k = 0; k < schedule.pairs_per_identity; ++k) {
      const int r = it->second[pick_rec(rng)];
      const int n = static_cast<int>(dataset.records[r].frames.size());
      std::uniform_int_distribution<int> pick_frame(0, n - 1);
      const int s = pick_frame(rng);
      int t = pick_frame(rng);
      if (t == s) t = (s + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1))) % n;
      pairs.push_back({id, {r, s}, {r, t}});
    }
  }
  return pairs;
}

std::vector<FramePair> sample_pairs(const Dataset& dataset, int epoch, const CurriculumSchedule& schedule,
                                    std::uint64_t seed) {
  return sample_pairs(dataset, compute_pose_stats(dataset), epoch, schedule, seed);
}

std::string pose_stats_csv(const std::vector<IdentityPoseStats>& stats) {
  std::ostringstream os;
  os.precision(10);
  os << "id,yaw_range,pitch_range\n";
  for (const auto& s : stats) os << s.id << ',' << s.yaw_range << ',' << s.pitch_range << '\n';
  return os.str();
}

std::string curriculum_table_csv(const std::vector<IdentityPoseStats>& stats, const CurriculumSchedule& schedule,
                                 int epochs) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,threshold,eligible_count,eligible_ids\n";
  for (int e = 0; e < epochs; ++e) {
    const double th = threshold_at(e, schedule);
    const auto ids = eligible_ids(stats, th, schedule.mode);
    os << e << ',' << th << ',' << ids.size() << ',';
    for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? " " : "") << ids[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace lmsynth

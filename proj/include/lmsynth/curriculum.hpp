#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmsynth/synth_face.hpp"

namespace lmsynth {

struct IdentityPoseStats {
  int id = 0;
  double yaw_range = 0.0;    // degrees, max - min over the identity's frames
  double pitch_range = 0.0;

  double spread() const { return yaw_range > pitch_range ? yaw_range : pitch_range; }
};

enum class CurriculumMode { AtMost, AtLeast };

struct CurriculumSchedule {
  double initial_threshold = 30.0;
  double increment = 12.0;
  int epochs_per_step = 10;
  CurriculumMode mode = CurriculumMode::AtMost;
  int pairs_per_identity = 10;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static CurriculumSchedule from_json(const nlohmann::json& j);
};

/// Uses the stored per-frame pose when present, otherwise estimates it. Throws EmptyIdentity.
std::vector<IdentityPoseStats> compute_pose_stats(const Dataset& dataset);

double threshold_at(int epoch, const CurriculumSchedule& schedule);

bool eligible(const IdentityPoseStats& stats, double threshold, CurriculumMode mode);
std::vector<int> eligible_ids(const std::vector<IdentityPoseStats>& stats, double threshold,
                              CurriculumMode mode);

struct FrameRef {
  int record = 0;  // index into Dataset::records
  int frame = 0;
};

struct FramePair {
  int id = 0;
  FrameRef source;
  FrameRef target;
};

/// pairs_per_identity same-sequence pairs for each eligible identity. Throws NoEligibleIdentity.
std::vector<FramePair> sample_pairs(const Dataset& dataset, const std::vector<IdentityPoseStats>& stats,
                                    int epoch, const CurriculumSchedule& schedule, std::uint64_t seed);
std::vector<FramePair> sample_pairs(const Dataset& dataset, int epoch, const CurriculumSchedule& schedule,
                                    std::uint64_t seed);

/// CSV: id,yaw_range,pitch_range
std::string pose_stats_csv(const std::vector<IdentityPoseStats>& stats);
/// CSV: epoch,threshold,eligible_count,eligible_ids (ids space-separated)
std::string curriculum_table_csv(const std::vector<IdentityPoseStats>& stats,
                                 const CurriculumSchedule& schedule, int epochs);

std::string to_string(CurriculumMode mode);
CurriculumMode curriculum_mode_from_string(const std::string& s);

}  // namespace lmsynth

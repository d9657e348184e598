#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "lmsynth/landmark.hpp"
#include "lmsynth/pose.hpp"

namespace lmsynth {

/// One line of a landmark record file.
struct LandmarkRecord {
  int id = 0;
  int seq = 0;
  std::vector<LandmarkFrame> frames;
  std::vector<PoseAngles> pose;  // empty when the record carries no pose
  nlohmann::ordered_json attrs;  // null when absent

  LandmarkSequence sequence() const { return LandmarkSequence(frames, id); }
};

nlohmann::ordered_json frame_to_json(const LandmarkFrame& frame);
LandmarkFrame frame_from_json(const nlohmann::json& j);

nlohmann::ordered_json record_to_json(const LandmarkRecord& record);
LandmarkRecord record_from_json(const nlohmann::json& j);

/// Line-delimited JSON, one record per line, fields id, seq, frames, pose?, attrs?.
void write_records(std::ostream& out, const std::vector<LandmarkRecord>& records);
void write_records(const std::filesystem::path& path, const std::vector<LandmarkRecord>& records);
std::vector<LandmarkRecord> read_records(std::istream& in);
std::vector<LandmarkRecord> read_records(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
nlohmann::ordered_json read_ordered_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lmsynth

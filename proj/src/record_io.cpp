#include "lmsynth/record_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "lmsynth/error.hpp"

namespace lmsynth {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json frame_to_json(const LandmarkFrame& frame) {
  ordered_json pts = ordered_json::array();
  for (int i = 0; i < kNumLandmarks; ++i) pts.push_back({frame.x(i), frame.y(i)});
  return pts;
}

LandmarkFrame frame_from_json(const json& j) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(kNumLandmarks)) {
    fail(ErrorCode::FormatError, "frame must be an array of 98 [x, y] pairs");
  }
  Points2 p;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const auto& pt = j[i];
    if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
      fail(ErrorCode::FormatError, "landmark " + std::to_string(i) + " is not an [x, y] pair");
    }
    p(i, 0) = pt[0].get<double>();
    p(i, 1) = pt[1].get<double>();
  }
  return LandmarkFrame(p);
}

ordered_json record_to_json(const LandmarkRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["seq"] = record.seq;
  ordered_json frames = ordered_json::array();
  for (const auto& f : record.frames) frames.push_back(frame_to_json(f));
  j["frames"] = std::move(frames);
  if (!record.pose.empty()) {
    ordered_json poses = ordered_json::array();
    for (const auto& p : record.pose) {
      poses.push_back({{"yaw", p.yaw}, {"pitch", p.pitch}, {"roll", p.roll}});
    }
    j["pose"] = std::move(poses);
  }
  if (!record.attrs.is_null()) j["attrs"] = record.attrs;
  return j;
}

LandmarkRecord record_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::FormatError, "record must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "seq" && key != "frames" && key != "pose" && key != "attrs") {
      fail(ErrorCode::FormatError, "unknown record field '" + key + "'");
    }
  }
  if (!j.contains("id") || !j["id"].is_number_integer() || !j.contains("seq") ||
      !j["seq"].is_number_integer() || !j.contains("frames") || !j["frames"].is_array()) {
    fail(ErrorCode::FormatError, "record requires integer id, integer seq and a frames array");
  }
  LandmarkRecord r;
  r.id = j["id"].get<int>();
  r.seq = j["seq"].get<int>();
  for (const auto& f : j["frames"]) r.frames.push_back(frame_from_json(f));
  if (j.contains("pose")) {
    const auto& poses = j["pose"];
    if (!poses.is_array() || poses.size() != r.frames.size()) {
      fail(ErrorCode::FormatError, "pose must have one entry per frame");
    }
    for (const auto& p : poses) {
      PoseAngles a;
      a.yaw = p.at("yaw").get<double>();
      a.pitch = p.at("pitch").get<double>();
      a.roll = p.at("roll").get<double>();
      r.pose.push_back(a);
    }
  }
  if (j.contains("attrs")) r.attrs = j["attrs"];
  return r;
}

void write_records(std::ostream& out, const std::vector<LandmarkRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void write_records(const std::filesystem::path& path, const std::vector<LandmarkRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_records(out, records);
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<LandmarkRecord> read_records(std::istream& in) {
  std::vector<LandmarkRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      records.push_back(record_from_json(j));
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<LandmarkRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return read_records(in);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

ordered_json read_ordered_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lmsynth

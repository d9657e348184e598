#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "lmsynth/curriculum.hpp"
#include "lmsynth/eval.hpp"
#include "lmsynth/lsg.hpp"
#include "lmsynth/metrics.hpp"
#include "lmsynth/synth_face.hpp"

namespace lmsynth {

/// Whole-pipeline configuration. Missing sections take their defaults; unknown keys
/// at any level are a ConfigError.
struct RunConfig {
  DatasetConfig dataset;
  LsgConfig lsg;
  CurriculumSchedule curriculum;
  EmbedderConfig embedder;
  EvalConfig eval;
  /// Free-form named paths ("data", "model", "embedder", "out").
  std::map<std::string, std::string> paths;

  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace lmsynth

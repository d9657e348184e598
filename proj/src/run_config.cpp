#include "lmsynth/run_config.hpp"

#include <set>

#include "lmsynth/error.hpp"
#include "lmsynth/record_io.hpp"

namespace lmsynth {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["dataset"] = dataset.to_json();
  j["lsg"] = lsg.to_json();
  j["curriculum"] = curriculum.to_json();
  j["embedder"] = embedder.to_json();
  j["eval"] = eval.to_json();
  j["paths"] = ordered_json::object();
  for (const auto& [k, v] : paths) j["paths"][k] = v;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "run config must be a JSON object");
  static const std::set<std::string> kPathKeys{"data", "model", "embedder", "out"};
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "dataset") c.dataset = DatasetConfig::from_json(v);
    else if (key == "lsg") c.lsg = LsgConfig::from_json(v);
    else if (key == "curriculum") c.curriculum = CurriculumSchedule::from_json(v);
    else if (key == "embedder") c.embedder = EmbedderConfig::from_json(v);
    else if (key == "eval") c.eval = EvalConfig::from_json(v);
    else if (key == "paths") {
      if (!v.is_object()) fail(ErrorCode::ConfigError, "paths must be an object");
      for (const auto& [name, p] : v.items()) {
        if (!kPathKeys.count(name)) fail(ErrorCode::ConfigError, "unknown paths key '" + name + "'");
        if (!p.is_string()) fail(ErrorCode::ConfigError, "paths." + name + " must be a string");
        c.paths[name] = p.get<std::string>();
      }
    } else {
      fail(ErrorCode::ConfigError, "unknown run config section '" + key + "'");
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError || e.code() == ErrorCode::IoError) fail(ErrorCode::ConfigError, e.what());
    throw;
  }
}

}  // namespace lmsynth

#pragma once

#include <filesystem>

#include <json.hpp>

#include "lmsynth/ad/tape.hpp"

namespace lmsynth::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ParamStore params;
  nlohmann::ordered_json manifest;
};

/// Writes `path` (binary tensors) and `path.manifest.json`.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const nlohmann::ordered_json& manifest);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& path);

}  // namespace lmsynth::ad

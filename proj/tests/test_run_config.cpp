#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lmsynth/run_config.hpp"
#include "support.hpp"

using namespace lmsynth;
using lmsynth::test::error_code;

TEST_CASE("run config") {
  const RunConfig d;
  CHECK(RunConfig::from_json(nlohmann::json::object()).to_json() == d.to_json());

  RunConfig c;
  c.dataset.n_ids = 7;
  c.lsg.hidden_size = 12;
  c.curriculum.mode = CurriculumMode::AtLeast;
  c.embedder.hidden = {8};
  c.eval.pairs = 3;
  c.paths["data"] = "d.jsonl";
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.dataset.n_ids == 7);
  CHECK(back.paths.at("data") == "d.jsonl");
  // Defaults fill the rest of a partial section.
  CHECK(RunConfig::from_json({{"lsg", {{"K", 5}}}}).lsg.hidden_size == LsgConfig{}.hidden_size);

  CHECK(error_code([] { RunConfig::from_json({{"extras", {}}}); }) == ErrorCode::ConfigError);
  CHECK(error_code([] { RunConfig::from_json({{"paths", {{"weights", "x"}}}}); }) == ErrorCode::ConfigError);
  CHECK(error_code([] { RunConfig::from_json({{"eval", {{"bins", 0}}}}); }) == ErrorCode::ConfigError);
  CHECK(error_code([] { RunConfig::from_json({{"dataset", {{"n_idz", 2}}}}); }) == ErrorCode::ConfigError);

  const auto p = std::filesystem::temp_directory_path() / "lmsynth_run_config.json";
  {
    std::ofstream os(p);
    os << "{ not json";
  }
  CHECK(error_code([&] { RunConfig::load(p); }) == ErrorCode::ConfigError);
  std::filesystem::remove(p);
  CHECK(error_code([&] { RunConfig::load(p); }) == ErrorCode::ConfigError);
}

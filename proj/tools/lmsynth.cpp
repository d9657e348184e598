// lmsynth: dataset generation, training, synthesis, evaluation and rendering of
// 98-point landmark sequences.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmsynth/curriculum.hpp"
#include "lmsynth/error.hpp"
#include "lmsynth/eval.hpp"
#include "lmsynth/lsg.hpp"
#include "lmsynth/metrics.hpp"
#include "lmsynth/record_io.hpp"
#include "lmsynth/run_config.hpp"
#include "lmsynth/synth_face.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace lmsynth {
namespace {

RunConfig load_config(const std::string& path) { return path.empty() ? RunConfig{} : RunConfig::load(path); }

/// Sidecar `<artifact>.meta.json` carrying the format version and the config echo.
void write_meta(const fs::path& artifact, const std::string& kind, const ordered_json& config,
                const ordered_json& extra = {}) {
  ordered_json m;
  m["format_version"] = kFormatVersion;
  m["kind"] = kind;
  m["config"] = config;
  if (!extra.is_null()) {
    for (const auto& [k, v] : extra.items()) m[k] = v;
  }
  write_json_file(metadata_path(artifact), m);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

int heldout_count(const Dataset& data, const RunConfig& cfg) {
  if (data.config.is_object() && data.config.contains("heldout_seqs_per_id")) {
    return data.config["heldout_seqs_per_id"].get<int>();
  }
  return cfg.dataset.heldout_seqs_per_id;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorCode::InvalidArgument, "bad " + what + " '" + s + "'");
  return v;
}

struct FrameSource {
  LandmarkFrame frame;
  std::optional<int> identity;
};

/// `path:record:frame` into a record file, or a JSON file holding one 98x2 frame.
FrameSource parse_frame_arg(const std::string& arg) {
  const auto last = arg.rfind(':');
  if (last != std::string::npos && last > 0) {
    const auto mid = arg.rfind(':', last - 1);
    if (mid != std::string::npos && mid > 0) {
      const std::string path = arg.substr(0, mid);
      const int record = parse_int(arg.substr(mid + 1, last - mid - 1), "record index");
      const int frame = parse_int(arg.substr(last + 1), "frame index");
      const auto records = read_records(fs::path(path));
      if (record < 0 || record >= static_cast<int>(records.size())) {
        fail(ErrorCode::InvalidArgument, "record index " + std::to_string(record) + " out of range");
      }
      const auto& r = records[record];
      if (frame < 0 || frame >= static_cast<int>(r.frames.size())) {
        fail(ErrorCode::InvalidArgument, "frame index " + std::to_string(frame) + " out of range");
      }
      return {r.frames[frame], r.id};
    }
  }
  return {frame_from_json(read_json_file(arg)), std::nullopt};
}

std::pair<int, int> parse_raster(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) fail(ErrorCode::InvalidArgument, "raster size must be HxW, got '" + s + "'");
  return {parse_int(s.substr(0, x), "raster height"), parse_int(s.substr(x + 1), "raster width")};
}

void write_frame_svgs(const LandmarkSequence& seq, const fs::path& dir, const std::string& prefix) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "%s%03zu.svg", prefix.c_str(), k);
    write_text_file(dir / name, frame_to_svg(seq[k]));
  }
}

void check_finite(const LsgHistory& h) {
  for (const auto& e : h.epochs) {
    for (double v : {e.l_d1, e.l_d2, e.l_s1, e.l_s2, e.total, e.d1_loss, e.d2_loss, e.rec}) {
      if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "non-finite loss at epoch " + std::to_string(e.epoch));
    }
  }
}

// --- commands -------------------------------------------------------------

struct Options {
  std::string config, data, out, model, embedder, seq, schedule, history, svg_dir;
  std::string a, b, baseline, attr, raster, style = "polyline", stats_out;
  int k = 0, steps = 9, workers = 1, epochs = 45, id = -1, svg_size = 256;
  double yaw = 0.0, pitch = 0.0;
  bool quiet = false;
};

void cmd_gen_data(const Options& o) {
  const RunConfig cfg = load_config(o.config);
  const Dataset data = generate_dataset(cfg.dataset);
  ensure_parent(o.out);
  write_dataset(o.out, data);
}

void cmd_train_embedder(const Options& o) {
  const RunConfig cfg = load_config(o.config);
  const Dataset data = read_dataset(o.data);
  const TrainedEmbedder t = train_id_embedder(data, cfg.embedder, heldout_count(data, cfg));
  ensure_parent(o.out);
  t.model.save(o.out, {{"format_version", kFormatVersion}, {"run_config", cfg.to_json()}});
  ordered_json report = t.report.to_json();
  report["format_version"] = kFormatVersion;
  report["config"] = cfg.embedder.to_json();
  write_json_file(o.out + ".report.json", report);
  if (!o.quiet) {
    std::cerr << "embedder: train accuracy " << t.report.train_accuracy << ", held-out accuracy "
              << t.report.heldout_accuracy << "\n";
  }
}

void cmd_train_lsg(const Options& o) {
  const RunConfig cfg = load_config(o.config);
  const Dataset data = read_dataset(o.data);
  const Dataset train = data.split(heldout_count(data, cfg)).first;
  EpochCallback progress;
  if (!o.quiet) {
    progress = [](const LsgEpoch& e, const LsgModel&) {
      std::cerr << "epoch " << e.epoch << " total " << e.total << " D1 " << e.d1_loss << " D2 " << e.d2_loss << "\n";
    };
  }
  const TrainedLsg t = train_lsg(train, cfg.lsg, progress);
  check_finite(t.history);
  ensure_parent(o.out);
  t.model.save(o.out, {{"format_version", kFormatVersion}, {"run_config", cfg.to_json()}});
  const fs::path history = o.history.empty() ? fs::path(o.out + ".history.csv") : fs::path(o.history);
  write_text_file(history, t.history.to_csv());
  write_meta(history, "lsg_history", cfg.lsg.to_json());
}

void cmd_synth(const Options& o) {
  const FrameSource a = parse_frame_arg(o.a);
  const FrameSource b = parse_frame_arg(o.b);
  const bool li = o.baseline == "li";
  if (!o.baseline.empty() && !li) fail(ErrorCode::InvalidArgument, "unknown baseline '" + o.baseline + "'");
  if (!li && o.model.empty()) fail(ErrorCode::InvalidArgument, "synth needs --model unless --baseline li");

  std::optional<LsgModel> model;
  if (!o.model.empty()) model = LsgModel::load(o.model);
  const int K = o.k > 0 ? o.k : model ? model->config().K : 8;
  const LandmarkSequence seq = li ? upsample_linear(a.frame, b.frame, K) : synthesize(a.frame, b.frame, *model, K);

  LandmarkRecord rec;
  rec.id = a.identity.value_or(0);
  rec.seq = 0;
  rec.frames = seq.frames();
  ensure_parent(o.out);
  write_records(fs::path(o.out), {rec});
  ordered_json echo{{"a", o.a}, {"b", o.b}, {"K", K}, {"method", li ? "li" : "lsg"}};
  if (model) echo["lsg"] = model->config().to_json();
  write_meta(o.out, "sequence", echo);
  write_frame_svgs(seq, o.svg_dir.empty() ? fs::path(o.out + ".frames") : fs::path(o.svg_dir), "frame_");
}

void cmd_manipulate(const Options& o) {
  IdentityParams id;
  if (!o.data.empty()) {
    const Dataset data = read_dataset(o.data);
    const auto it = data.identities.find(o.id);
    if (it == data.identities.end()) fail(ErrorCode::InvalidArgument, "identity " + std::to_string(o.id) + " not in metadata");
    id = it->second;
  }
  const PoseAngles pose{o.yaw, o.pitch, 0.0};
  const LandmarkSequence seq = manipulate_attribute(id, ExpressionParams{}, pose, o.attr, o.steps);
  LandmarkRecord rec;
  rec.id = o.id < 0 ? 0 : o.id;
  rec.frames = seq.frames();
  rec.attrs = {{"attribute", o.attr}};
  ensure_parent(o.out);
  write_records(fs::path(o.out), {rec});
  write_meta(o.out, "attribute_sweep",
             {{"attr", o.attr}, {"steps", o.steps}, {"id", o.id}, {"yaw", o.yaw}, {"pitch", o.pitch}});
  if (!o.svg_dir.empty()) write_frame_svgs(seq, o.svg_dir, "frame_");
}

void cmd_eval(const Options& o) {
  RunConfig cfg = load_config(o.config);
  cfg.eval.workers = o.workers;
  const Dataset data = read_dataset(o.data);
  const Dataset heldout = data.split(heldout_count(data, cfg)).second;
  const LsgModel model = LsgModel::load(o.model);
  const EmbeddingModel embedder = EmbeddingModel::load(o.embedder);
  const IdentityEvalReport report = eval_identity_preservation(heldout, model, embedder, cfg.eval);
  const D2Report d2 = evaluate_d2(model, heldout, cfg.eval.noise_sigma, cfg.eval.seed);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  ordered_json j = report.to_json();
  j["d2"] = d2.to_json();
  j["lsg"] = model.config().to_json();
  write_json_file(dir / "report.json", j);
  write_text_file(dir / "csim_histogram.csv", report.histogram_table());
  write_meta(dir / "csim_histogram.csv", "csim_histogram", cfg.eval.to_json());
  write_text_file(dir / "csim_histogram.svg", report.histogram_chart());
  if (!o.quiet) {
    std::cerr << "CSIM LI " << report.li.mean_csim << ", LSG " << report.lsg.mean_csim << " over " << report.pairs
              << " pairs\n";
  }
}

void cmd_render(const Options& o) {
  const auto records = read_records(fs::path(o.seq));
  const fs::path dir(o.out);
  fs::create_directories(dir);
  RasterOptions ro;
  if (o.style == "blob") ro.style = RasterStyle::Blob;
  else if (o.style != "polyline") fail(ErrorCode::InvalidArgument, "unknown style '" + o.style + "'");
  std::optional<std::pair<int, int>> raster;
  if (!o.raster.empty()) raster = parse_raster(o.raster);
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t k = 0; k < records[r].frames.size(); ++k) {
      char stem[64];
      std::snprintf(stem, sizeof stem, "r%03zu_f%03zu", r, k);
      const LandmarkFrame& f = records[r].frames[k];
      write_text_file(dir / (std::string(stem) + ".svg"), frame_to_svg(f, o.svg_size, ro));
      if (raster) {
        write_text_file(dir / (std::string(stem) + ".pgm"),
                        image_to_pgm(rasterize_landmarks(f, raster->first, raster->second, ro)));
      }
    }
  }
  ordered_json echo{{"seq", o.seq}, {"style", o.style}, {"svg_size", o.svg_size}};
  if (raster) echo["raster"] = {raster->first, raster->second};
  ordered_json m{{"format_version", kFormatVersion}, {"kind", "render"}, {"config", echo}};
  write_json_file(dir / "render.meta.json", m);
}

void cmd_curriculum_stats(const Options& o) {
  const json doc = read_json_file(o.schedule);
  CurriculumSchedule schedule;
  try {
    bool run_config = false;
    for (const char* k : {"dataset", "lsg", "curriculum", "embedder", "eval", "paths"}) run_config |= doc.contains(k);
    schedule = run_config ? RunConfig::from_json(doc).curriculum : CurriculumSchedule::from_json(doc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) fail(ErrorCode::ConfigError, e.what());
    throw;
  }
  const Dataset data = read_dataset(o.data);
  const auto stats = compute_pose_stats(data);
  const std::string table = curriculum_table_csv(stats, schedule, o.epochs);
  if (o.out.empty()) {
    std::cout << table;
  } else {
    ensure_parent(o.out);
    write_text_file(o.out, table);
    write_meta(o.out, "curriculum_table", schedule.to_json(), {{"epochs", o.epochs}});
  }
  if (!o.stats_out.empty()) {
    write_text_file(o.stats_out, pose_stats_csv(stats));
    write_meta(o.stats_out, "pose_stats", schedule.to_json());
  }
}

void print_error(std::string_view code, const std::string& message) {
  std::cerr << ordered_json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace
}  // namespace lmsynth

int main(int argc, char** argv) {
  using namespace lmsynth;
  CLI::App app{"Landmark sequence synthesis toolkit"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic landmark dataset");
  gen->add_option("--config", o.config, "Run config JSON (dataset section)");
  gen->add_option("--out", o.out, "Record file to write")->required();

  auto* emb = app.add_subcommand("train-embedder", "Train the identity embedder");
  emb->add_option("--data", o.data, "Record file")->required();
  emb->add_option("--config", o.config, "Run config JSON (embedder section)");
  emb->add_option("--out", o.out, "Checkpoint to write")->required();
  emb->add_flag("--quiet", o.quiet);

  auto* lsg = app.add_subcommand("train-lsg", "Train the landmark sequence generator");
  lsg->add_option("--data", o.data, "Record file")->required();
  lsg->add_option("--config", o.config, "Run config JSON (lsg section)");
  lsg->add_option("--out", o.out, "Checkpoint to write")->required();
  lsg->add_option("--history", o.history, "Loss-history CSV (default <out>.history.csv)");
  lsg->add_flag("--quiet", o.quiet);

  auto* syn = app.add_subcommand("synth", "Synthesize a sequence between two frames");
  syn->add_option("--model", o.model, "LSG checkpoint");
  syn->add_option("--a", o.a, "First frame: path:record:frame or a frame JSON file")->required();
  syn->add_option("--b", o.b, "Last frame: path:record:frame or a frame JSON file")->required();
  syn->add_option("--k", o.k, "Output frame count (default: the model's K)");
  syn->add_option("--out", o.out, "Sequence record file to write")->required();
  syn->add_option("--baseline", o.baseline, "'li' for linear interpolation");
  syn->add_option("--svg-dir", o.svg_dir, "Per-frame SVG directory (default <out>.frames)");

  auto* man = app.add_subcommand("manipulate", "Sweep one identity or expression attribute");
  man->add_option("--attr", o.attr, "Attribute name, e.g. nose_width")->required();
  man->add_option("--steps", o.steps, "Frame count")->check(CLI::PositiveNumber);
  man->add_option("--out", o.out, "Sequence record file to write")->required();
  man->add_option("--data", o.data, "Dataset whose metadata supplies the identity");
  man->add_option("--id", o.id, "Identity id (with --data)");
  man->add_option("--yaw", o.yaw, "Yaw in degrees");
  man->add_option("--pitch", o.pitch, "Pitch in degrees");
  man->add_option("--svg-dir", o.svg_dir, "Also write per-frame SVGs here");

  auto* ev = app.add_subcommand("eval", "Identity-preservation report, LI vs LSG");
  ev->add_option("--data", o.data, "Record file (held-out sequences are scored)")->required();
  ev->add_option("--model", o.model, "LSG checkpoint")->required();
  ev->add_option("--embedder", o.embedder, "Embedder checkpoint")->required();
  ev->add_option("--config", o.config, "Run config JSON (eval section)");
  ev->add_option("--out", o.out, "Report directory")->required();
  ev->add_option("--workers", o.workers, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  ev->add_flag("--quiet", o.quiet);

  auto* ren = app.add_subcommand("render", "Render sequences as SVG wireframes and PGM rasters");
  ren->add_option("--seq", o.seq, "Record file")->required();
  ren->add_option("--out", o.out, "Output directory")->required();
  ren->add_option("--raster", o.raster, "Also write HxW PGM rasters");
  ren->add_option("--style", o.style, "polyline or blob");
  ren->add_option("--svg-size", o.svg_size, "SVG canvas size")->check(CLI::PositiveNumber);

  auto* cur = app.add_subcommand("curriculum-stats", "Per-epoch eligible identities under a schedule");
  cur->add_option("--data", o.data, "Record file")->required();
  cur->add_option("--schedule", o.schedule, "Schedule JSON (bare or a run config)")->required();
  cur->add_option("--epochs", o.epochs, "Epoch count")->check(CLI::NonNegativeNumber);
  cur->add_option("--out", o.out, "CSV to write (default stdout)");
  cur->add_option("--stats-out", o.stats_out, "Also write per-identity pose ranges");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(to_string(ErrorCode::ConfigError), e.what());
    return exit_code_for(ErrorCode::ConfigError);
  }

  try {
    if (*gen) cmd_gen_data(o);
    else if (*emb) cmd_train_embedder(o);
    else if (*lsg) cmd_train_lsg(o);
    else if (*syn) cmd_synth(o);
    else if (*man) cmd_manipulate(o);
    else if (*ev) cmd_eval(o);
    else if (*ren) cmd_render(o);
    else if (*cur) cmd_curriculum_stats(o);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(to_string(ErrorCode::IoError), e.what());
    return exit_code_for(ErrorCode::IoError);
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 0;
}

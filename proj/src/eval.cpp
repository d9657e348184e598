#include "lmsynth/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "lmsynth/error.hpp"

namespace lmsynth {

using nlohmann::json;
using nlohmann::ordered_json;

void EvalConfig::validate() const {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail(ErrorCode::ConfigError, "eval noise_sigma must be >= 0");
  if (pairs < 0) fail(ErrorCode::ConfigError, "eval pairs must be >= 0");
  if (bins < 1) fail(ErrorCode::ConfigError, "eval bins must be >= 1");
  if (workers < 1) fail(ErrorCode::ConfigError, "eval workers must be >= 1");
}

ordered_json EvalConfig::to_json() const {
  return {{"noise_sigma", noise_sigma}, {"pairs", pairs}, {"seed", seed}, {"bins", bins}};
}

EvalConfig EvalConfig::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "eval config must be an object");
  EvalConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "noise_sigma") c.noise_sigma = v.get<double>();
      else if (key == "pairs") c.pairs = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "bins") c.bins = v.get<int>();
      else if (key == "workers") c.workers = v.get<int>();
      else fail(ErrorCode::ConfigError, "unknown eval key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("eval: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mean_displacement(const LandmarkSequence& s) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const auto d = point_distances(s[k], s[k + 1]);
    sum += std::accumulate(d.begin(), d.end(), 0.0) / kNumLandmarks;
  }
  return sum / static_cast<double>(s.size() - 1);
}

struct PairResult {
  std::vector<double> csim;  // K values
  std::vector<double> endpoint_err, interior_err;
  double smoothness = 0.0;
};

struct PairOutcome {
  PairResult li, lsg;
};

PairResult score(const LandmarkSequence& out, const LandmarkRecord& rec, int K, const EmbeddingModel& embedder,
                 const std::vector<double>& reference) {
  PairResult r;
  ad::MatrixRM rows(K, kFrameDim);
  for (int k = 0; k < K; ++k) {
    const auto flat = flatten(out[k]);
    std::copy(flat.begin(), flat.end(), rows.row(k).data());
  }
  const ad::MatrixRM e = embedder.embed_batch(rows);
  for (int k = 0; k < K; ++k) {
    r.csim.push_back(csim(std::span<const double>(e.row(k).data(), e.cols()), reference));
    const double err = rms_error(out[k], rec.frames[k]);
    (k == 0 || k == K - 1 ? r.endpoint_err : r.interior_err).push_back(err);
  }
  r.smoothness = mean_displacement(out);
  return r;
}

MethodReport summarize(const std::vector<const PairResult*>& results, int K, int bins) {
  MethodReport m;
  std::vector<std::vector<double>> per_frame(K);
  std::vector<double> endpoint, interior, smooth;
  for (const PairResult* r : results) {
    for (int k = 0; k < K; ++k) {
      per_frame[k].push_back(r->csim[k]);
      m.scores.push_back(r->csim[k]);
    }
    endpoint.insert(endpoint.end(), r->endpoint_err.begin(), r->endpoint_err.end());
    interior.insert(interior.end(), r->interior_err.begin(), r->interior_err.end());
    smooth.push_back(r->smoothness);
  }
  m.mean_csim = mean(m.scores);
  for (int k = 0; k < K; ++k) {
    m.frame_mean_csim.push_back(mean(per_frame[k]));
    m.frame_median_csim.push_back(median(per_frame[k]));
  }
  m.endpoint_error = median(endpoint);
  m.interior_error = median(interior);
  m.smoothness = mean(smooth);
  m.histogram = csim_histogram(m.scores, bins);
  return m;
}

}  // namespace

ordered_json MethodReport::to_json() const {
  return {{"mean_csim", mean_csim},
          {"frame_mean_csim", frame_mean_csim},
          {"frame_median_csim", frame_median_csim},
          {"endpoint_error", endpoint_error},
          {"interior_error", interior_error},
          {"mean_displacement", smoothness},
          {"histogram", histogram.counts}};
}

ordered_json IdentityEvalReport::to_json() const {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "identity_preservation";
  j["metric"] = "landmark-embedder CSIM surrogate";
  j["pairs"] = pairs;
  j["frames_per_pair"] = K;
  j["scored_frames"] = pairs * static_cast<std::size_t>(K);
  j["csim_gain"] = csim_gain();
  j["endpoint_error_ratio"] = config.noise_sigma > 0 ? lsg.endpoint_error / config.noise_sigma : 0.0;
  j["LI"] = li.to_json();
  j["LSG"] = lsg.to_json();
  j["config"] = config.to_json();
  return j;
}

std::string IdentityEvalReport::histogram_table() const {
  return histogram_csv({"LI", "LSG"}, {li.histogram, lsg.histogram});
}

std::string IdentityEvalReport::histogram_chart() const {
  return histogram_svg({"LI", "LSG"}, {li.histogram, lsg.histogram});
}

IdentityEvalReport eval_identity_preservation(const Dataset& heldout, const LsgModel& model,
                                              const EmbeddingModel& embedder, const EvalConfig& config) {
  config.validate();
  const int K = model.config().K;

  std::vector<const LandmarkRecord*> records;
  for (const auto& r : heldout.records) {
    if (static_cast<int>(r.frames.size()) >= K) records.push_back(&r);
  }
  std::stable_sort(records.begin(), records.end(), [](const LandmarkRecord* a, const LandmarkRecord* b) {
    return a->id != b->id ? a->id < b->id : a->seq < b->seq;
  });
  if (records.empty()) fail(ErrorCode::DatasetTooSmall, "no held-out record has " + std::to_string(K) + " frames");
  if (config.pairs > 0) {
    if (static_cast<int>(records.size()) < config.pairs) {
      fail(ErrorCode::DatasetTooSmall, "requested " + std::to_string(config.pairs) + " pairs, have " +
                                           std::to_string(records.size()));
    }
    records.resize(config.pairs);
  }

  // Reference per identity: mean embedding over all of its clean held-out frames.
  std::map<int, std::vector<double>> reference;
  {
    std::map<int, std::vector<const LandmarkFrame*>> by_id;
    for (const auto& r : heldout.records) {
      for (const auto& f : r.frames) by_id[r.id].push_back(&f);
    }
    for (const auto& [id, frames] : by_id) {
      ad::MatrixRM rows(static_cast<Eigen::Index>(frames.size()), kFrameDim);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto flat = flatten(*frames[i]);
        std::copy(flat.begin(), flat.end(), rows.row(static_cast<Eigen::Index>(i)).data());
      }
      const Eigen::RowVectorXd m = embedder.embed_batch(rows).colwise().mean();
      reference[id] = std::vector<double>(m.data(), m.data() + m.size());
    }
  }

  std::vector<PairOutcome> outcomes(records.size());
  auto run = [&](std::size_t i) {
    const LandmarkRecord& rec = *records[i];
    const std::uint64_t s = derive_seed(config.seed, i);
    const LandmarkFrame a = add_noise(rec.frames.front(), config.noise_sigma, derive_seed(s, 0));
    const LandmarkFrame b = add_noise(rec.frames[K - 1], config.noise_sigma, derive_seed(s, 1));
    const auto& ref = reference.at(rec.id);
    outcomes[i].li = score(upsample_linear(a, b, K), rec, K, embedder, ref);
    outcomes[i].lsg = score(synthesize(a, b, model, K), rec, K, embedder, ref);
  };

  const std::size_t workers = std::min<std::size_t>(config.workers, records.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < records.size(); ++i) run(i);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < records.size(); i += workers) run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<const PairResult*> li, lsg;
  for (const auto& o : outcomes) {
    li.push_back(&o.li);
    lsg.push_back(&o.lsg);
  }
  IdentityEvalReport report;
  report.li = summarize(li, K, config.bins);
  report.lsg = summarize(lsg, K, config.bins);
  report.pairs = records.size();
  report.K = K;
  report.config = config;
  return report;
}

}  // namespace lmsynth

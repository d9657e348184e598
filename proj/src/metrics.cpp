#include "lmsynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lmsynth/ad/checkpoint.hpp"
#include "lmsynth/ad/optim.hpp"
#include "lmsynth/error.hpp"

namespace lmsynth {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json EmbedderConfig::to_json() const {
  return {{"hidden", hidden}, {"epochs", epochs}, {"batch_size", batch_size},
          {"lr", lr},         {"seed", seed},     {"shuffle_labels", shuffle_labels}};
}

EmbedderConfig EmbedderConfig::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "embedder config must be an object");
  EmbedderConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "hidden") c.hidden = v.get<std::vector<int>>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "shuffle_labels") c.shuffle_labels = v.get<bool>();
      else fail(ErrorCode::ConfigError, "unknown embedder key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("embedder: ") + e.what());
  }
  if (c.hidden.empty() || std::any_of(c.hidden.begin(), c.hidden.end(), [](int h) { return h < 1; })) {
    fail(ErrorCode::ConfigError, "embedder hidden widths must be positive");
  }
  if (c.epochs < 0 || c.batch_size < 1 || !(c.lr > 0.0)) fail(ErrorCode::ConfigError, "bad embedder schedule");
  return c;
}

EmbeddingModel::EmbeddingModel(const EmbedderConfig& cfg, int num_classes) : cfg_(cfg), num_classes_(num_classes) {
  std::vector<int> widths{kFrameDim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(num_classes);
  net_ = ad::Mlp("embed", widths, ad::Activation::Tanh);
  std::mt19937_64 rng(cfg.seed);
  net_.init(params_, rng, ad::InitScheme::GlorotUniform);
  params_.add("norm.mean", ad::Tensor({1, kFrameDim}));
  params_.add("norm.scale", ad::Tensor({1, kFrameDim}, 1.0));
}

namespace {

ad::Var standardize(ad::Tape& tape, ad::Var x, const ad::ParamStore& store) {
  const ad::Tensor& mu = store.at("norm.mean").value;
  const ad::Tensor& sc = store.at("norm.scale").value;
  ad::Tensor neg_mu = mu;
  for (auto& v : neg_mu.storage()) v = -v;
  ad::Tensor inv(sc.shape());
  for (std::size_t i = 0; i < sc.size(); ++i) inv[i] = 1.0 / sc[i];
  return ad::mul(ad::add(x, tape.constant(std::move(neg_mu))), tape.constant(std::move(inv)));
}

ad::Tensor frames_tensor(const ad::MatrixRM& frames) {
  ad::Tensor t({static_cast<int>(frames.rows()), static_cast<int>(frames.cols())});
  t.mat() = frames;
  return t;
}

ad::MatrixRM normalize_rows(ad::MatrixRM h) {
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    const double n = h.row(r).norm();
    if (n == 0.0) fail(ErrorCode::ZeroVector, "zero embedding");
    h.row(r) /= n;
  }
  return h;
}

}  // namespace

ad::Var EmbeddingModel::logits(ad::Tape& tape, ad::Var frames) {
  return net_(tape, params_, standardize(tape, frames, params_));
}

ad::MatrixRM EmbeddingModel::hidden_forward(const ad::MatrixRM& frames) const {
  ad::Tape tape;
  const ad::ParamStore& store = params_;
  const ad::Var x = standardize(tape, tape.constant(frames_tensor(frames)), store);
  return net_.penultimate(tape, store, x).value().mat();
}

ad::MatrixRM EmbeddingModel::embed_batch(const ad::MatrixRM& frames) const {
  if (frames.cols() != kFrameDim) fail(ErrorCode::ShapeMismatch, "embed_batch expects 196 columns");
  return normalize_rows(hidden_forward(frames));
}

std::vector<double> EmbeddingModel::embed(const LandmarkFrame& frame) const {
  const auto flat = flatten(frame);
  const ad::MatrixRM e = embed_batch(ad::ConstMapRM(flat.data(), 1, kFrameDim));
  return std::vector<double>(e.data(), e.data() + e.size());
}

int EmbeddingModel::classify(const LandmarkFrame& frame) const {
  const auto flat = flatten(frame);
  ad::Tape tape;
  const ad::ParamStore& store = params_;
  ad::Tensor t({1, kFrameDim}, std::vector<double>(flat.begin(), flat.end()));
  const ad::Var x = standardize(tape, tape.constant(std::move(t)), store);
  const ad::Tensor& out = net_(tape, store, x).value();
  return static_cast<int>(std::max_element(out.values().begin(), out.values().end()) - out.values().begin());
}

void EmbeddingModel::save(const std::filesystem::path& path, const ordered_json& extra) const {
  ordered_json m;
  m["kind"] = "embedder";
  m["num_classes"] = num_classes_;
  m["config"] = cfg_.to_json();
  if (!extra.is_null()) m["extra"] = extra;
  ad::save_checkpoint(path, params_, m);
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
  ad::Checkpoint ck = ad::load_checkpoint(path);
  if (ck.manifest.value("kind", "") != "embedder") fail(ErrorCode::FormatError, path.string() + " is not an embedder");
  EmbeddingModel model(EmbedderConfig::from_json(json::parse(ck.manifest.at("config").dump())),
                       ck.manifest.at("num_classes").get<int>());
  for (auto& [name, p] : model.params_) {
    if (!ck.params.contains(name)) fail(ErrorCode::FormatError, "checkpoint lacks '" + name + "'");
    const ad::Tensor& v = ck.params.at(name).value;
    if (!v.same_shape(p.value)) fail(ErrorCode::ShapeMismatch, "shape mismatch for '" + name + "'");
    p.value = v;
  }
  if (ck.params.size() != model.params_.size()) fail(ErrorCode::FormatError, "checkpoint has extra tensors");
  return model;
}

ordered_json EmbedderReport::to_json() const {
  return {{"train_accuracy", train_accuracy},
          {"heldout_accuracy", heldout_accuracy},
          {"train_frames", train_frames},
          {"heldout_frames", heldout_frames},
          {"epoch_loss", epoch_loss}};
}

namespace {

struct LabeledFrames {
  ad::MatrixRM x;
  std::vector<int> y;
};

LabeledFrames gather(const Dataset& ds, const std::map<int, int>& class_of) {
  LabeledFrames out;
  out.x.resize(static_cast<Eigen::Index>(ds.frame_count()), kFrameDim);
  Eigen::Index r = 0;
  for (const auto& rec : ds.records) {
    for (const auto& f : rec.frames) {
      const auto flat = flatten(f);
      for (int c = 0; c < kFrameDim; ++c) out.x(r, c) = flat[c];
      out.y.push_back(class_of.at(rec.id));
      ++r;
    }
  }
  return out;
}

double accuracy(const EmbeddingModel& model, const LabeledFrames& data) {
  if (data.y.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    if (model.classify(unflatten(std::span<const double>(data.x.row(static_cast<Eigen::Index>(i)).data(), kFrameDim))) ==
        data.y[i]) {
      ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(data.y.size());
}

}  // namespace

TrainedEmbedder train_id_embedder(const Dataset& dataset, const EmbedderConfig& config, int heldout_seqs_per_id) {
  const std::vector<int> labels = dataset.identity_labels();
  if (labels.size() < 2) fail(ErrorCode::DatasetTooSmall, "the embedder needs at least 2 identities");
  std::map<int, int> class_of;
  for (std::size_t i = 0; i < labels.size(); ++i) class_of[labels[i]] = static_cast<int>(i);
  auto [train_ds, held_ds] = dataset.split(heldout_seqs_per_id);
  LabeledFrames train = gather(train_ds, class_of);
  const LabeledFrames held = gather(held_ds, class_of);
  if (train.y.empty()) fail(ErrorCode::DatasetTooSmall, "no training frames for the embedder");

  std::mt19937_64 rng(config.seed);
  if (config.shuffle_labels) std::shuffle(train.y.begin(), train.y.end(), rng);

  TrainedEmbedder out{EmbeddingModel(config, static_cast<int>(labels.size())), {}};
  EmbeddingModel& model = out.model;
  const Eigen::RowVectorXd mu = train.x.colwise().mean();
  Eigen::RowVectorXd sd = ((train.x.rowwise() - mu).array().square().colwise().sum() /
                           std::max<double>(1.0, static_cast<double>(train.y.size()) - 1.0))
                              .sqrt();
  sd = sd.array() + 1e-3;
  model.params().at("norm.mean").value.mat() = mu;
  model.params().at("norm.scale").value.mat() = sd;

  const std::size_t n = train.y.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  ad::AdamConfig adam;
  adam.beta1 = 0.9;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      ad::Tensor xb({static_cast<int>(end - start), kFrameDim});
      std::vector<int> yb;
      for (std::size_t i = start; i < end; ++i) {
        xb.mat().row(static_cast<Eigen::Index>(i - start)) = train.x.row(static_cast<Eigen::Index>(order[i]));
        yb.push_back(train.y[order[i]]);
      }
      ad::Tape tape;
      const ad::Var loss = ad::softmax_cross_entropy(model.logits(tape, tape.constant(std::move(xb))), yb);
      tape.backward(loss);
      ad::adam_step(model.params(), config.lr, adam);
      total += loss.value().item();
      ++batches;
    }
    out.report.epoch_loss.push_back(total / std::max(1, batches));
  }
  out.report.train_frames = n;
  out.report.heldout_frames = held.y.size();
  out.report.train_accuracy = accuracy(model, train);
  out.report.heldout_accuracy = accuracy(model, held);
  return out;
}

double csim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "csim: vector sizes differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) fail(ErrorCode::ZeroVector, "csim of a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

const std::vector<std::vector<int>>& landmark_polylines() {
  static const std::vector<std::vector<int>> chains = [] {
    auto range = [](int b, int e, bool closed) {
      std::vector<int> v(e - b);
      std::iota(v.begin(), v.end(), b);
      if (closed) v.push_back(b);
      return v;
    };
    return std::vector<std::vector<int>>{
        range(0, 33, false),  range(33, 42, true),  range(42, 51, true),  range(51, 55, false),
        range(55, 60, false), range(60, 68, true),  range(68, 76, true),  range(76, 88, true),
        range(88, 96, true),
    };
  }();
  return chains;
}

namespace {

struct Viewport {
  double sx, sy, ox, oy;

  Viewport(int h, int w, const RasterOptions& o) {
    const double span = 2.0 * o.half_extent;
    sx = w / span;
    sy = h / span;
    ox = w / 2.0 - o.center_x * sx;
    oy = h / 2.0 - o.center_y * sy;
  }
  // Pixel centers sit at integer + 0.5.
  double px(double x) const { return x * sx + ox; }
  double py(double y) const { return y * sy + oy; }
};

double segment_distance(double x, double y, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((x - ax) * dx + (y - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(x - (ax + t * dx), y - (ay + t * dy));
}

}  // namespace

Image rasterize_landmarks(const LandmarkFrame& frame, int height, int width, const RasterOptions& opt) {
  if (height < 16 || width < 16) fail(ErrorCode::InvalidArgument, "raster must be at least 16x16");
  Image img(height, width, 1);
  const Viewport vp(height, width, opt);
  auto plot = [&](int y, int x, double v) {
    if (y < 0 || y >= height || x < 0 || x >= width) return;
    double& p = img.at(y, x);
    p = std::max(p, std::clamp(v, 0.0, 1.0));
  };

  auto blob = [&](double cx, double cy, double sigma) {
    if (sigma < 0.5) {
      plot(static_cast<int>(std::floor(cy)), static_cast<int>(std::floor(cx)), 1.0);
      return;
    }
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    const int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
    for (int y = y0 - r; y <= y0 + r; ++y) {
      for (int x = x0 - r; x <= x0 + r; ++x) {
        const double d2 = (x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy);
        plot(y, x, std::exp(-d2 / (2.0 * sigma * sigma)));
      }
    }
  };

  if (opt.style == RasterStyle::Blob) {
    for (int i = 0; i < kNumLandmarks; ++i) blob(vp.px(frame.x(i)), vp.py(frame.y(i)), opt.blob_sigma);
    return img;
  }

  const double half = 0.5 * opt.line_width;
  for (const auto& chain : landmark_polylines()) {
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      const double ax = vp.px(frame.x(chain[k])), ay = vp.py(frame.y(chain[k]));
      const double bx = vp.px(frame.x(chain[k + 1])), by = vp.py(frame.y(chain[k + 1]));
      const int xa = static_cast<int>(std::floor(std::min(ax, bx) - half - 1));
      const int xb = static_cast<int>(std::ceil(std::max(ax, bx) + half + 1));
      const int ya = static_cast<int>(std::floor(std::min(ay, by) - half - 1));
      const int yb = static_cast<int>(std::ceil(std::max(ay, by) + half + 1));
      for (int y = std::max(0, ya); y <= std::min(height - 1, yb); ++y) {
        for (int x = std::max(0, xa); x <= std::min(width - 1, xb); ++x) {
          const double d = segment_distance(x + 0.5, y + 0.5, ax, ay, bx, by);
          plot(y, x, half + 0.5 - d);  // one-pixel linear falloff at the stroke edge
        }
      }
    }
  }
  for (int i : {96, 97}) blob(vp.px(frame.x(i)), vp.py(frame.y(i)), std::max(0.75, opt.line_width));
  return img;
}

std::string frame_to_svg(const LandmarkFrame& frame, int size, const RasterOptions& opt) {
  const Viewport vp(size, size, opt);
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
     << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& chain : landmark_polylines()) {
    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
    for (std::size_t k = 0; k < chain.size(); ++k) {
      os << (k ? " " : "") << vp.px(frame.x(chain[k])) << ',' << vp.py(frame.y(chain[k]));
    }
    os << "\"/>\n";
  }
  for (int i = 0; i < kNumLandmarks; ++i) {
    const bool pupil = LandmarkTopology::pupils().contains(i);
    os << "<circle cx=\"" << vp.px(frame.x(i)) << "\" cy=\"" << vp.py(frame.y(i)) << "\" r=\""
       << (pupil ? 2.0 : 1.2) << "\" fill=\"" << (pupil ? "red" : "black") << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string image_to_pgm(const Image& img) {
  if (img.channels() != 1) fail(ErrorCode::InvalidArgument, "PGM needs a single-channel image");
  std::ostringstream os;
  os << "P2\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      os << (x ? " " : "") << static_cast<int>(std::lround(std::clamp(img.at(y, x), 0.0, 1.0) * 255.0));
    }
    os << '\n';
  }
  return os.str();
}

Image image_from_pgm(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  if (!(is >> magic >> w >> h >> maxv) || magic != "P2" || w < 1 || h < 1 || maxv < 1) {
    fail(ErrorCode::FormatError, "not a plain PGM");
  }
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int v = 0;
      if (!(is >> v) || v < 0 || v > maxv) fail(ErrorCode::FormatError, "bad PGM pixel");
      img.at(y, x) = static_cast<double>(v) / maxv;
    }
  }
  return img;
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, "ssim: image shapes differ");
  if (a.channels() != 1) fail(ErrorCode::ShapeMismatch, "ssim expects single-channel images");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  if (a.height() < kWin || a.width() < kWin) fail(ErrorCode::ShapeMismatch, "ssim needs images of at least 11x11");
  std::array<double, kWin> g{};
  double gs = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    gs += g[i];
  }
  for (double& v : g) v /= gs;

  double total = 0.0;
  int count = 0;
  for (int y = 0; y + kWin <= a.height(); ++y) {
    for (int x = 0; x + kWin <= a.width(); ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < kWin; ++i) {
        for (int j = 0; j < kWin; ++j) {
          const double w = g[i] * g[j];
          const double va = a.at(y + i, x + j), vb = b.at(y + i, x + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + C1) * (2 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
      ++count;
    }
  }
  return total / count;
}

GaussianStats GaussianStats::from_samples(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) fail(ErrorCode::DatasetTooSmall, "need at least 2 samples for a covariance");
  GaussianStats s;
  s.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd c = samples.rowwise() - s.mean.transpose();
  s.cov = (c.transpose() * c) / static_cast<double>(samples.rows() - 1);
  return s;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  const auto d = a.mean.size();
  if (b.mean.size() != d || a.cov.rows() != d || a.cov.cols() != d || b.cov.rows() != d || b.cov.cols() != d) {
    fail(ErrorCode::DimensionMismatch, "frechet_distance: dimensions differ");
  }
  // Tr((S1 S2)^1/2) = Tr((S1^1/2 S2 S1^1/2)^1/2), and the inner matrix is symmetric.
  const Eigen::MatrixXd r1 = psd_sqrt(a.cov);
  const Eigen::MatrixXd inner = r1 * b.cov * r1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double fd = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, fd);
}

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

Histogram csim_histogram(std::span<const double> scores, int bins) {
  if (bins < 1) fail(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::NonFinite, "non-finite score");
    const double t = (std::clamp(s, h.lo, h.hi) - h.lo) / (h.hi - h.lo);
    const int b = std::min(bins - 1, static_cast<int>(std::floor(t * bins)));
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

std::string histogram_csv(const std::vector<std::string>& names, const std::vector<Histogram>& hists) {
  if (names.size() != hists.size() || hists.empty()) fail(ErrorCode::InvalidArgument, "one name per histogram");
  std::ostringstream os;
  os.precision(10);
  os << "bin_lo,bin_hi";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  const std::size_t bins = hists.front().counts.size();
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = hists.front().lo + b * hists.front().bin_width();
    os << lo << ',' << lo + hists.front().bin_width();
    for (const auto& h : hists) os << ',' << h.counts.at(b);
    os << '\n';
  }
  return os.str();
}

std::string histogram_svg(const std::vector<std::string>& names, const std::vector<Histogram>& hists) {
  if (names.size() != hists.size() || hists.empty()) fail(ErrorCode::InvalidArgument, "one name per histogram");
  static const char* colors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44"};
  const int W = 640, H = 320, pad = 40;
  std::size_t peak = 1;
  for (const auto& h : hists) peak = std::max(peak, *std::max_element(h.counts.begin(), h.counts.end()));
  const std::size_t bins = hists.front().counts.size();
  const double bw = static_cast<double>(W - 2 * pad) / bins;
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < hists.size(); ++k) {
    const double sub = bw / hists.size();
    for (std::size_t b = 0; b < bins; ++b) {
      const double h = (H - 2 * pad) * static_cast<double>(hists[k].counts[b]) / peak;
      os << "<rect x=\"" << pad + b * bw + k * sub << "\" y=\"" << H - pad - h << "\" width=\"" << sub
         << "\" height=\"" << h << "\" fill=\"" << colors[k % 4] << "\"/>\n";
    }
    os << "<text x=\"" << pad + 10 << "\" y=\"" << pad / 2 + 14 * k << "\" font-size=\"12\" fill=\""
       << colors[k % 4] << "\">" << names[k] << "</text>\n";
  }
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"" << H - pad + 16 << "\" font-size=\"11\">-1</text>\n";
  os << "<text x=\"" << W - pad - 8 << "\" y=\"" << H - pad + 16 << "\" font-size=\"11\">1</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace lmsynth

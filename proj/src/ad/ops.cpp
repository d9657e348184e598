#include "lmsynth/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmsynth/error.hpp"

namespace lmsynth::ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    fail(ErrorCode::ShapeMismatch,
         std::string(op) + ": shapes " + a.shape_string() + " and " + b.shape_string() + " differ");
  }
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return !a.same_shape(b) && b.rows() == 1 && b.cols() == a.cols() && a.rank() <= 2 && b.rank() <= 2;
}

template <typename Fn>
Tensor map_values(const Tensor& a, Fn&& fn) {
  Tensor out = Tensor::zeros_like(a);
  const double* src = a.data();
  double* dst = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = fn(src[i]);
  return out;
}

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Column sums of a row-major matrix gradient, shaped like the broadcast row.
Tensor column_sums(const Tensor& g, const Tensor& like) {
  Tensor out = Tensor::zeros_like(like);
  const int r = g.rows(), c = g.cols();
  for (int i = 0; i < r; ++i) {
    const double* row = g.data() + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < c; ++j) out[j] += row[j];
  }
  return out;
}

}  // namespace

double smooth_l1_value(double d) {
  const double ad = std::abs(d);
  return ad < 1.0 ? 0.5 * d * d : ad - 0.5;
}

Var add(Var a, Var b) {
  Tape& t = a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.same_shape(bv)) {
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const int ia = a.id(), ib = b.id();
    return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
      tp.accumulate(ia, g);
      tp.accumulate(ib, g);
    });
  }
  if (!is_row_broadcast(av, bv)) {
    fail(ErrorCode::ShapeMismatch, "add: shapes " + av.shape_string() + " and " + bv.shape_string() +
                                       " are not compatible");
  }
  Tensor out = av;
  out.mat().rowwise() += bv.mat().row(0);
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, column_sums(g, tp.value(ib)));
  });
}

Var sub(Var a, Var b) {
  Tape& t = a.tape();
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, map_values(g, [](double x) { return -x; }));
  });
}

Var mul(Var a, Var b) {
  Tape& t = a.tape();
  const Tensor& av0 = a.value();
  const Tensor& bv0 = b.value();
  const int ia = a.id(), ib = b.id();
  if (!av0.same_shape(bv0)) {
    if (!is_row_broadcast(av0, bv0)) {
      fail(ErrorCode::ShapeMismatch, "mul: shapes " + av0.shape_string() + " and " + bv0.shape_string() +
                                         " are not compatible");
    }
    Tensor out = av0;
    out.mat().array().rowwise() *= bv0.mat().row(0).array();
    return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
      const Tensor& av = tp.value(ia);
      const Tensor& bv = tp.value(ib);
      if (tp.requires_grad(ia)) tp.grad_buffer(ia).mat().array() += g.mat().array().rowwise() * bv.mat().row(0).array();
      if (tp.requires_grad(ib)) {
        tp.grad_buffer(ib).mat().row(0).array() += (g.mat().array() * av.mat().array()).colwise().sum();
      }
    });
  }
  Tensor out = av0;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv0[i];
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    if (tp.requires_grad(ia)) {
      Tensor& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = map_values(a.value(), [s](double x) { return s * x; });
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, s](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    fail(ErrorCode::ShapeMismatch, "matmul: " + av.shape_string() + " x " + bv.shape_string());
  }
  Tensor out({av.rows(), bv.cols()});
  out.mat().noalias() = av.mat() * bv.mat();
  const int ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), {a, b}, [ia, ib](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ia)) tp.grad_buffer(ia).mat().noalias() += g.mat() * tp.value(ib).mat().transpose();
    if (tp.requires_grad(ib)) tp.grad_buffer(ib).mat().noalias() += tp.value(ia).mat().transpose() * g.mat();
  });
}

Var linear(Var x, Var W, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = W.value();
  const Tensor& bv = b.value();
  if (xv.rank() != 2 || wv.rank() != 2 || xv.cols() != wv.rows() || bv.rows() != 1 ||
      bv.cols() != wv.cols()) {
    fail(ErrorCode::ShapeMismatch, "linear: x " + xv.shape_string() + ", W " + wv.shape_string() +
                                       ", b " + bv.shape_string());
  }
  Tensor out({xv.rows(), wv.cols()});
  out.mat().noalias() = xv.mat() * wv.mat();
  out.mat().rowwise() += bv.mat().row(0);
  const int ix = x.id(), iw = W.id(), ib = b.id();
  return x.tape().push(std::move(out), {x, W, b}, [ix, iw, ib](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ix)) tp.grad_buffer(ix).mat().noalias() += g.mat() * tp.value(iw).mat().transpose();
    if (tp.requires_grad(iw)) tp.grad_buffer(iw).mat().noalias() += tp.value(ix).mat().transpose() * g.mat();
    if (tp.requires_grad(ib)) tp.grad_buffer(ib).mat().row(0) += g.mat().colwise().sum();
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat of nothing");
  if (axis != 0 && axis != 1) fail(ErrorCode::ShapeMismatch, "concat axis must be 0 or 1");
  Tape& t = parts.front().tape();
  const int r0 = parts.front().value().rows(), c0 = parts.front().value().cols();
  int total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != 2 || (axis == 0 ? v.cols() != c0 : v.rows() != r0)) {
      fail(ErrorCode::ShapeMismatch, "concat: incompatible part " + v.shape_string());
    }
    total += axis == 0 ? v.rows() : v.cols();
  }
  Tensor out(axis == 0 ? std::vector<int>{total, c0} : std::vector<int>{r0, total});
  std::vector<int> ids, offsets;
  int off = 0;
  auto om = out.mat();
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (axis == 0) {
      om.block(off, 0, v.rows(), c0) = v.mat();
    } else {
      om.block(0, off, r0, v.cols()) = v.mat();
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += axis == 0 ? v.rows() : v.cols();
  }
  Tape::Backward bw = [ids, offsets, axis](Tape& tp, const Tensor& g) {
    const auto gm = g.mat();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Tensor& gb = tp.grad_buffer(ids[k]);
      if (axis == 0) {
        gb.mat() += gm.block(offsets[k], 0, gb.rows(), gb.cols());
      } else {
        gb.mat() += gm.block(0, offsets[k], gb.rows(), gb.cols());
      }
    }
  };
  return t.push(std::move(out), std::span<const Var>(parts), std::move(bw));
}

Var slice(Var a, int axis, int begin, int end) {
  const Tensor& av = a.value();
  if (av.rank() != 2 || (axis != 0 && axis != 1)) fail(ErrorCode::ShapeMismatch, "slice needs a 2-D tensor");
  const int extent = axis == 0 ? av.rows() : av.cols();
  if (begin < 0 || end > extent || begin >= end) {
    fail(ErrorCode::ShapeMismatch, "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                       ") out of range for " + av.shape_string());
  }
  const int n = end - begin;
  Tensor out(axis == 0 ? std::vector<int>{n, av.cols()} : std::vector<int>{av.rows(), n});
  out.mat() = axis == 0 ? MatrixRM(av.mat().middleRows(begin, n)) : MatrixRM(av.mat().middleCols(begin, n));
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, axis, begin, n](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(ia);
    if (axis == 0) {
      ga.mat().middleRows(begin, n) += g.mat();
    } else {
      ga.mat().middleCols(begin, n) += g.mat();
    }
  });
}

Var tanh(Var a) {
  Tensor out = map_values(a.value(), [](double x) { return std::tanh(x); });
  const int ia = a.id();
  const int io = a.tape().next_id();
  return a.tape().push(std::move(out), {a}, [ia, io](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(io);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor out = map_values(a.value(), stable_sigmoid);
  const int ia = a.id();
  const int io = a.tape().next_id();
  return a.tape().push(std::move(out), {a}, [ia, io](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(io);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var relu(Var a) {
  Tensor out = map_values(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var leaky_relu(Var a, double slope) {
  Tensor out = map_values(a.value(), [slope](double x) { return x > 0.0 ? x : slope * x; });
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, slope](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > 0.0 ? g[i] : slope * g[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const int ia = a.id();
  return a.tape().push(Tensor::scalar(s), {a}, [ia](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var l1_mean(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "l1_mean");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const double n = static_cast<double>(av.size());
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  const int ia = a.id(), ib = b.id();
  return a.tape().push(Tensor::scalar(s / n), {a, b}, [ia, ib, n](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    for (int which : {ia, ib}) {
      if (!tp.requires_grad(which)) continue;
      const double sign_flip = which == ia ? 1.0 : -1.0;
      Tensor& gb = tp.grad_buffer(which);
      for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        const double sg = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        gb[i] += sign_flip * g[0] * sg / n;
      }
    }
  });
}

Var mse(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mse");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const double n = static_cast<double>(av.size());
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
  const int ia = a.id(), ib = b.id();
  return a.tape().push(Tensor::scalar(s / n), {a, b}, [ia, ib, n](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    for (int which : {ia, ib}) {
      if (!tp.requires_grad(which)) continue;
      const double sign_flip = which == ia ? 1.0 : -1.0;
      Tensor& gb = tp.grad_buffer(which);
      for (std::size_t i = 0; i < av.size(); ++i) gb[i] += sign_flip * g[0] * 2.0 * (av[i] - bv[i]) / n;
    }
  });
}

Var smooth_l1(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "smooth_l1");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const double n = static_cast<double>(av.size());
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += smooth_l1_value(av[i] - bv[i]);
  const int ia = a.id(), ib = b.id();
  return a.tape().push(Tensor::scalar(s / n), {a, b}, [ia, ib, n](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    for (int which : {ia, ib}) {
      if (!tp.requires_grad(which)) continue;
      const double sign_flip = which == ia ? 1.0 : -1.0;
      Tensor& gb = tp.grad_buffer(which);
      for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        const double dd = std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
        gb[i] += sign_flip * g[0] * dd / n;
      }
    }
  });
}

Var cosine_distance(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "cosine_distance");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const int rows = av.rows();
  const auto am = av.mat();
  const auto bm = bv.mat();
  double s = 0.0;
  for (int r = 0; r < rows; ++r) {
    const double na = am.row(r).norm(), nb = bm.row(r).norm();
    if (na == 0.0 || nb == 0.0) fail(ErrorCode::ZeroVector, "cosine_distance of a zero vector");
    s += 1.0 - am.row(r).dot(bm.row(r)) / (na * nb);
  }
  const int ia = a.id(), ib = b.id();
  return a.tape().push(Tensor::scalar(s / rows), {a, b}, [ia, ib, rows](Tape& tp, const Tensor& g) {
    const auto am = tp.value(ia).mat();
    const auto bm = tp.value(ib).mat();
    const double w = g[0] / rows;
    for (int r = 0; r < rows; ++r) {
      const double na = am.row(r).norm(), nb = bm.row(r).norm();
      const double c = am.row(r).dot(bm.row(r)) / (na * nb);
      if (tp.requires_grad(ia)) {
        tp.grad_buffer(ia).mat().row(r) -= w * (bm.row(r) / (na * nb) - c * am.row(r) / (na * na));
      }
      if (tp.requires_grad(ib)) {
        tp.grad_buffer(ib).mat().row(r) -= w * (am.row(r) / (na * nb) - c * bm.row(r) / (nb * nb));
      }
    }
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  const int rows = z.rows(), classes = z.cols();
  if (static_cast<int>(labels.size()) != rows) {
    fail(ErrorCode::ShapeMismatch, "softmax_cross_entropy: " + std::to_string(labels.size()) +
                                       " labels for " + std::to_string(rows) + " rows");
  }
  Tensor probs = Tensor::zeros_like(z);
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (labels[r] < 0 || labels[r] >= classes) {
      fail(ErrorCode::UnknownClass, "label " + std::to_string(labels[r]) + " outside [0, " +
                                        std::to_string(classes) + ")");
    }
    double mx = z.at(r, 0);
    for (int c = 1; c < classes; ++c) mx = std::max(mx, z.at(r, c));
    double se = 0.0;
    for (int c = 0; c < classes; ++c) se += std::exp(z.at(r, c) - mx);
    const double lse = mx + std::log(se);
    loss += lse - z.at(r, labels[r]);
    for (int c = 0; c < classes; ++c) probs.at(r, c) = std::exp(z.at(r, c) - lse);
  }
  std::vector<int> lab(labels.begin(), labels.end());
  const int il = logits.id();
  return logits.tape().push(
      Tensor::scalar(loss / rows), {logits},
      [il, probs = std::move(probs), lab = std::move(lab), rows](Tape& tp, const Tensor& g) {
        Tensor& gl = tp.grad_buffer(il);
        const int classes = probs.cols();
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < classes; ++c) {
            const double onehot = c == lab[r] ? 1.0 : 0.0;
            gl.at(r, c) += g[0] * (probs.at(r, c) - onehot) / rows;
          }
        }
      });
}

Var bce_with_logits(Var logits, std::span<const double> targets) {
  const Tensor& z = logits.value();
  if (targets.size() != z.size()) {
    fail(ErrorCode::ShapeMismatch, "bce_with_logits: " + std::to_string(targets.size()) +
                                       " targets for " + std::to_string(z.size()) + " logits");
  }
  const double n = static_cast<double>(z.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = z[i], t = targets[i];
    loss += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  std::vector<double> tg(targets.begin(), targets.end());
  const int il = logits.id();
  return logits.tape().push(Tensor::scalar(loss / n), {logits},
                            [il, tg = std::move(tg), n](Tape& tp, const Tensor& g) {
                              const Tensor& z = tp.value(il);
                              Tensor& gl = tp.grad_buffer(il);
                              for (std::size_t i = 0; i < z.size(); ++i) {
                                gl[i] += g[0] * (stable_sigmoid(z[i]) - tg[i]) / n;
                              }
                            });
}

}  // namespace lmsynth::ad

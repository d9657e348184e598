#include "lmsynth/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lmsynth::ad {

namespace {

double evaluate(ParamStore& store, const LossFn& loss) {
  Tape tape;
  return loss(tape, store).value().item();
}

}  // namespace

GradCheckReport gradient_check(ParamStore& store, const LossFn& loss, const GradCheckOptions& opt) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape, store));
  }
  if (opt.corrupt) opt.corrupt(store);

  GradCheckReport rep;
  std::mt19937_64 rng(opt.seed);
  for (auto& [name, p] : store) {
    std::vector<int> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (static_cast<int>(idx.size()) > opt.max_coords_per_param) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opt.max_coords_per_param);
    }
    for (int i : idx) {
      const double orig = p.value[i];
      p.value[i] = orig + opt.eps;
      const double up = evaluate(store, loss);
      p.value[i] = orig - opt.eps;
      const double down = evaluate(store, loss);
      p.value[i] = orig;
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double analytic = p.grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), opt.abs_floor});
      ++rep.checked;
      rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_param = name;
        rep.worst_index = i;
      }
    }
  }
  rep.passed = rep.max_rel_error <= opt.tolerance;
  store.zero_grad();
  return rep;
}

}  // namespace lmsynth::ad

#include "lmsynth/ad/optim.hpp"

#include <algorithm>
#include <cmath>

namespace lmsynth::ad {

void adam_step(ParamStore& store, double lr, const AdamConfig& cfg) {
  const int t = store.step() + 1;
  store.set_step(t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [_, p] : store) {
    double* w = p.value.data();
    double* g = p.grad.data();
    double* m = p.m.data();
    double* v = p.v.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
      g[i] = 0.0;
    }
  }
}

double lr_schedule(int epoch, const LrSchedule& s) {
  if (epoch <= s.constant_until) return s.base_lr;
  if (epoch >= s.zero_at) return 0.0;
  const double span = static_cast<double>(s.zero_at - s.constant_until);
  return s.base_lr * std::max(0.0, static_cast<double>(s.zero_at - epoch) / span);
}

}  // namespace lmsynth::ad

#pragma once

#include "lmsynth/ad/tape.hpp"

namespace lmsynth::ad {

struct AdamConfig {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of every parameter in the store, then zeroes the gradients.
void adam_step(ParamStore& store, double lr, const AdamConfig& cfg = {});

struct LrSchedule {
  double base_lr = 2e-4;
  int constant_until = 30;  // last epoch at base_lr
  int zero_at = 45;         // lr reaches 0 here
};

/// Epochs are 1-based. Constant through constant_until, then linear to 0 at zero_at.
double lr_schedule(int epoch, const LrSchedule& s);

}  // namespace lmsynth::ad

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "lmsynth/ad/tape.hpp"

namespace lmsynth::ad {

struct GradCheckOptions {
  double eps = 1e-4;
  double tolerance = 1e-3;  // relative
  double abs_floor = 1e-6;  // denominators never drop below this
  int max_coords_per_param = 64;
  std::uint64_t seed = 1;
  /// Runs between the analytic backward and the comparison; used for negative controls.
  std::function<void(ParamStore&)> corrupt;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  int checked = 0;
  bool passed = true;
};

using LossFn = std::function<Var(Tape&, ParamStore&)>;

/// Central differences on a random subsample of every parameter's coordinates.
/// rel error = |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport gradient_check(ParamStore& store, const LossFn& loss, const GradCheckOptions& opt = {});

}  // namespace lmsynth::ad

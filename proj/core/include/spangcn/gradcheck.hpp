#pragma once

#include <functional>
#include <random>
#include <string>

#include "spangcn/params.hpp"

namespace spangcn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  int checked = 0;
};

// Central-difference gradient oracle, independent of the tape. `f` must be
// deterministic (dropout off) and `analytic` must return the tape gradients
// at the current parameter values. Coordinates are sampled without
// replacement across the whole parameter set.
//
// Relative error: |a-b| / max(|a|, |b|, 1e-8). A coordinate with an
// absolute difference below 1e-8 counts as exact, so vanishing gradients
// are not judged on a round-off-dominated ratio.
GradCheckResult finite_diff_check(
    const std::function<double(const ModelParams&)>& f, ModelParams& params,
    const GradMap& analytic, double eps, int sample_count,
    std::mt19937_64& rng);

}  // namespace spangcn

#include "spangcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "spangcn/error.hpp"

namespace spangcn {

GradCheckResult finite_diff_check(
    const std::function<double(const ModelParams&)>& f, ModelParams& params,
    const GradMap& analytic, double eps, int sample_count,
    std::mt19937_64& rng) {
  if (eps < 1e-7 || eps > 1e-3)
    throw ValidationError("finite_diff_check: eps out of [1e-7, 1e-3]");

  // Flatten coordinates as (param name, index) pairs.
  std::vector<std::pair<std::string, int>> coords;
  for (const auto& [name, tensor] : params.t)
    for (int i = 0; i < tensor.size(); ++i) coords.emplace_back(name, i);
  std::shuffle(coords.begin(), coords.end(), rng);
  if (sample_count < static_cast<int>(coords.size()))
    coords.resize(sample_count);

  GradCheckResult res;
  for (const auto& [name, idx] : coords) {
    double& slot = params.get(name).at(idx);
    double saved = slot;
    slot = saved + eps;
    double fp = f(params);
    slot = saved - eps;
    double fm = f(params);
    slot = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_check: non-finite objective at '" +
                         name + "'");
    double numeric = (fp - fm) / (2.0 * eps);
    double a = 0.0;
    auto it = analytic.find(name);
    if (it != analytic.end()) a = it->second.at(idx);
    double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    double rel = std::fabs(a - numeric) / denom;
    // Near zero the relative measure is all round-off; fall back to the
    // absolute tolerance there.
    if (std::fabs(a - numeric) < 1e-8) rel = 0.0;
    ++res.checked;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_param = name;
      res.worst_index = idx;
    }
  }
  return res;
}

}  // namespace spangcn

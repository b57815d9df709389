#include "osda/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace osda::nn {

GradCheckResult gradient_check(const LossFn& loss_fn, ParamStore& params, double eps, int samples, uint64_t seed) {
  if (eps <= 0.0) throw std::invalid_argument("gradient_check: eps must be positive");
  auto grads = params.make_grad_buffer();
  double base = loss_fn(params, &grads);
  if (!std::isfinite(base)) throw std::domain_error("gradient_check: non-finite loss");

  // flat coordinate space over all parameters
  std::vector<std::pair<int, size_t>> coords;
  for (int p = 0; p < params.count(); ++p)
    for (size_t e = 0; e < params.value(p).size(); ++e) coords.emplace_back(p, e);
  RandomStream rng(seed);
  // partial Fisher-Yates for the first `samples` positions
  const int n = static_cast<int>(coords.size());
  const int take = std::min(samples, n);
  for (int i = 0; i < take; ++i) {
    int j = rng.uniform_int(i, n - 1);
    std::swap(coords[i], coords[j]);
  }

  // Central differences cannot resolve gradients below the rounding noise of
  // the loss itself (~|loss| * machine-eps / 2 eps); when both routes sit
  // under that floor they agree on "zero" and the coordinate is not scored.
  const double noise_guard = 32.0 * std::max(1.0, std::fabs(base)) * 2.220446049250313e-16 / (2.0 * eps);

  GradCheckResult res;
  for (int i = 0; i < take; ++i) {
    auto [p, e] = coords[i];
    double& slot = params.value(p).data[e];
    const double orig = slot;
    slot = orig + eps;
    double lp = loss_fn(params, nullptr);
    slot = orig - eps;
    double lm = loss_fn(params, nullptr);
    slot = orig;
    if (!std::isfinite(lp) || !std::isfinite(lm)) throw std::domain_error("gradient_check: non-finite loss");
    double numeric = (lp - lm) / (2.0 * eps);
    double analytic = grads[p].data[e];
    if (std::fabs(analytic) <= noise_guard && std::fabs(numeric) <= noise_guard) continue;
    double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    double rel = std::fabs(analytic - numeric) / denom;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_param = p;
      res.worst_element = e;
      res.analytic = analytic;
      res.numeric = numeric;
    }
  }
  return res;
}

}  // namespace osda::nn

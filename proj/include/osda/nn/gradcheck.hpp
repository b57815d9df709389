#pragma once

#include <functional>

#include "osda/nn/params.hpp"
#include "osda/rng.hpp"

namespace osda::nn {

// loss_fn(params, grads_or_null): returns the loss value; when the second
// argument is non-null it must also accumulate analytic gradients into it.
// Must be deterministic (dropout off).
using LossFn = std::function<double(const ParamStore&, std::vector<Matrix>*)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  int worst_param = -1;
  size_t worst_element = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences (f(p+eps)-f(p-eps))/(2 eps) on `samples` coordinates
// drawn without replacement when possible; relative error denominator is
// max(|analytic|, |numeric|, 1e-8).
GradCheckResult gradient_check(const LossFn& loss_fn, ParamStore& params, double eps, int samples, uint64_t seed);

}  // namespace osda::nn

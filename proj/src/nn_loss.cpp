#include "osda/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace osda::nn {

BinaryCeResult binary_cross_entropy_from_logits(double logit0, double logit1, int label) {
  if (!std::isfinite(logit0) || !std::isfinite(logit1))
    throw std::invalid_argument("binary_cross_entropy_from_logits: non-finite logit");
  if (label != 0 && label != 1) throw std::invalid_argument("binary_cross_entropy_from_logits: label must be 0 or 1");
  double mx = std::max(logit0, logit1);
  double e0 = std::exp(logit0 - mx), e1 = std::exp(logit1 - mx);
  double z = e0 + e1;
  BinaryCeResult r;
  r.loss = (mx + std::log(z)) - (label == 0 ? logit0 : logit1);
  r.grad[0] = e0 / z - (label == 0 ? 1.0 : 0.0);
  r.grad[1] = e1 / z - (label == 1 ? 1.0 : 0.0);
  return r;
}

std::array<double, 2> softmax2(double logit0, double logit1) {
  double mx = std::max(logit0, logit1);
  double e0 = std::exp(logit0 - mx), e1 = std::exp(logit1 - mx);
  double z = e0 + e1;
  return {e0 / z, e1 / z};
}

std::vector<double> masked_softmax(const std::vector<double>& logits, const std::vector<uint8_t>& allowed) {
  if (logits.size() != allowed.size()) throw std::invalid_argument("masked_softmax: length mismatch");
  constexpr double kMaskPenalty = -1e30;
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    double z = logits[i] + (allowed[i] ? 0.0 : kMaskPenalty);
    if (allowed[i]) any = true;
    out[i] = z;
    mx = std::max(mx, z);
  }
  if (!any) throw std::domain_error("empty attention row");
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace osda::nn

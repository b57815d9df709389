#pragma once

#include <array>
#include <vector>

#include "osda/matrix.hpp"

namespace osda::nn {

// Standalone 2-class cross-entropy from logits (log-sum-exp stabilized).
// loss = -log softmax(logits)[label]; grad = softmax(logits) - one_hot(label).
struct BinaryCeResult {
  double loss = 0.0;
  std::array<double, 2> grad{0.0, 0.0};
};
BinaryCeResult binary_cross_entropy_from_logits(double logit0, double logit1, int label);

// softmax over one masked row; masked positions are exactly zero.
// Throws std::domain_error("empty attention row") when nothing is allowed.
std::vector<double> masked_softmax(const std::vector<double>& logits, const std::vector<uint8_t>& allowed);

std::array<double, 2> softmax2(double logit0, double logit1);

}  // namespace osda::nn

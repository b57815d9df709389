#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace osda::metrics {

// Pooled per-frame scores and binary labels for one evaluation set.
struct ScoredFrames {
  std::vector<double> scores;
  std::vector<uint8_t> labels;

  void push(double score, int label) {
    scores.push_back(score);
    labels.push_back(label ? 1 : 0);
  }
  void append(const ScoredFrames& o) {
    scores.insert(scores.end(), o.scores.begin(), o.scores.end());
    labels.insert(labels.end(), o.labels.begin(), o.labels.end());
  }
  size_t size() const { return scores.size(); }
  int positives() const;
  int negatives() const;
};

// Calibrated average precision: precision reweighted by w = #neg/#pos so a
// random scorer lands near 0.5 regardless of class balance. Ranking ties are
// broken by original index. Throws std::domain_error on single-class input.
double frame_cap(const ScoredFrames& frames);

// Plain average precision over the same ranking.
double frame_ap(const ScoredFrames& frames);

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};
struct PrCurve {
  std::vector<PrPoint> points;  // recall non-decreasing
  double auc = 0.0;             // trapezoid over recall
};
PrCurve pr_curve(const ScoredFrames& frames);

// Mean frame_cap of `trials` uniform random score assignments on the labels.
double random_baseline_cap(const std::vector<uint8_t>& labels, int trials, uint64_t seed);

// Per-offset anticipation scoring. pooled[j] holds the (score, label) pairs
// for offset j+1 (prediction at frame T scored against label y[T+j+1]).
struct AnticipationCap {
  std::vector<std::optional<double>> per_offset;  // empty pool -> nullopt
  double average = 0.0;                           // unweighted mean of present offsets
  std::optional<double> pooled;                   // all offsets ranked together, when requested
};
AnticipationCap anticipation_cap(const std::vector<ScoredFrames>& per_offset_pools,
                                 const ScoredFrames& detection_pool, bool include_pooled = false);

}  // namespace osda::metrics

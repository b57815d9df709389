#include "osda/metrics/frame.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "osda/rng.hpp"

namespace osda::metrics {

int ScoredFrames::positives() const {
  int n = 0;
  for (uint8_t v : labels) n += v ? 1 : 0;
  return n;
}
int ScoredFrames::negatives() const { return static_cast<int>(labels.size()) - positives(); }

namespace {
// Indices sorted by score descending, original order on ties.
std::vector<size_t> ranking(const ScoredFrames& f) {
  std::vector<size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return f.scores[a] > f.scores[b]; });
  return idx;
}

void require_both_classes(const ScoredFrames& f, const char* what) {
  if (f.scores.size() != f.labels.size()) throw std::invalid_argument(std::string(what) + ": length mismatch");
  if (f.positives() == 0 || f.negatives() == 0)
    throw std::domain_error(std::string(what) + " undefined: needs both classes");
}
}  // namespace

double frame_cap(const ScoredFrames& frames) {
  require_both_classes(frames, "cAP");
  const double w = static_cast<double>(frames.negatives()) / frames.positives();
  auto idx = ranking(frames);
  double tp = 0.0, fp = 0.0, sum = 0.0;
  for (size_t i : idx) {
    if (frames.labels[i]) {
      tp += 1.0;
      sum += tp / (tp + fp / w);
    } else {
      fp += 1.0;
    }
  }
  return sum / frames.positives();
}

double frame_ap(const ScoredFrames& frames) {
  if (frames.positives() == 0) throw std::domain_error("AP undefined: no positives");
  auto idx = ranking(frames);
  double tp = 0.0, seen = 0.0, sum = 0.0;
  for (size_t i : idx) {
    seen += 1.0;
    if (frames.labels[i]) {
      tp += 1.0;
      sum += tp / seen;
    }
  }
  return sum / frames.positives();
}

PrCurve pr_curve(const ScoredFrames& frames) {
  require_both_classes(frames, "PR curve");
  auto idx = ranking(frames);
  const double n_pos = frames.positives();
  PrCurve out;
  double tp = 0.0, seen = 0.0;
  for (size_t i = 0; i < idx.size(); ++i) {
    seen += 1.0;
    if (frames.labels[idx[i]]) tp += 1.0;
    // emit a point after the last frame of each distinct threshold
    bool last_of_threshold = (i + 1 == idx.size()) || (frames.scores[idx[i + 1]] != frames.scores[idx[i]]);
    if (last_of_threshold) out.points.push_back({frames.scores[idx[i]], tp / seen, tp / n_pos});
  }
  double prev_r = 0.0, prev_p = out.points.empty() ? 1.0 : out.points.front().precision;
  double auc = 0.0;
  for (const auto& pt : out.points) {
    auc += (pt.recall - prev_r) * 0.5 * (pt.precision + prev_p);
    prev_r = pt.recall;
    prev_p = pt.precision;
  }
  out.auc = auc;
  return out;
}

double random_baseline_cap(const std::vector<uint8_t>& labels, int trials, uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("random_baseline_cap: trials must be >= 1");
  RandomStream rng(seed);
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    ScoredFrames f;
    f.labels = labels;
    f.scores.resize(labels.size());
    for (auto& s : f.scores) s = rng.u01();
    total += frame_cap(f);
  }
  return total / trials;
}

AnticipationCap anticipation_cap(const std::vector<ScoredFrames>& per_offset_pools,
                                 const ScoredFrames& detection_pool, bool include_pooled) {
  AnticipationCap out;
  if (per_offset_pools.empty()) {
    // delta = 0 reduces to detection
    out.average = frame_cap(detection_pool);
    return out;
  }
  double sum = 0.0;
  int present = 0;
  ScoredFrames pooled_frames;
  for (const auto& pool : per_offset_pools) {
    if (pool.size() == 0 || pool.positives() == 0 || pool.negatives() == 0) {
      out.per_offset.push_back(std::nullopt);
    } else {
      double c = frame_cap(pool);
      out.per_offset.push_back(c);
      sum += c;
      ++present;
    }
    if (include_pooled) pooled_frames.append(pool);
  }
  if (present == 0) throw std::domain_error("anticipation_cap: no scorable offset");
  out.average = sum / present;
  if (include_pooled && pooled_frames.positives() > 0 && pooled_frames.negatives() > 0)
    out.pooled = frame_cap(pooled_frames);
  return out;
}

}  // namespace osda::metrics

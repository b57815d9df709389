#include "osda/metrics/events.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace osda::metrics {

EventSet extract_events(const std::vector<uint8_t>& binary, const std::vector<double>* probs) {
  if (probs && probs->size() != binary.size()) throw std::invalid_argument("extract_events: probs length mismatch");
  EventSet out;
  const int n = static_cast<int>(binary.size());
  int i = 0;
  while (i < n) {
    if (!binary[i]) {
      ++i;
      continue;
    }
    int start = i;
    while (i < n && binary[i]) ++i;
    Event ev{start, i - 1, std::nullopt};
    if (probs) {
      double sum = 0.0;
      for (int k = start; k < i; ++k) sum += (*probs)[k];
      ev.confidence = sum / (i - start);
    }
    out.events.push_back(ev);
  }
  return out;
}

std::vector<uint8_t> events_to_labels(const EventSet& events, int n_frames) {
  std::vector<uint8_t> out(static_cast<size_t>(n_frames), 0);
  for (const auto& ev : events.events) {
    if (ev.start < 0 || ev.end >= n_frames || ev.start > ev.end)
      throw std::invalid_argument("events_to_labels: event out of range");
    for (int k = ev.start; k <= ev.end; ++k) out[k] = 1;
  }
  return out;
}

double event_iou(const Event& a, const Event& b) {
  int inter = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
  if (inter <= 0) return 0.0;
  int uni = std::max(a.end, b.end) - std::min(a.start, b.start) + 1;
  return static_cast<double>(inter) / uni;
}

std::vector<double> matched_ious(const EventSet& pred, const EventSet& truth) {
  struct Pair {
    double iou;
    int p, t;
  };
  std::vector<Pair> pairs;
  for (int p = 0; p < static_cast<int>(pred.size()); ++p)
    for (int t = 0; t < static_cast<int>(truth.size()); ++t) {
      double iou = event_iou(pred.events[p], truth.events[t]);
      if (iou > 0.0) pairs.push_back({iou, p, t});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.p != b.p) return a.p < b.p;
    return a.t < b.t;
  });
  std::vector<double> matched(pred.size(), 0.0);
  std::vector<uint8_t> pred_used(pred.size(), 0), truth_used(truth.size(), 0);
  for (const auto& pr : pairs) {
    if (pred_used[pr.p] || truth_used[pr.t]) continue;
    pred_used[pr.p] = truth_used[pr.t] = 1;
    matched[pr.p] = pr.iou;
  }
  return matched;
}

EventF1 event_f1(const EventSet& pred, const EventSet& truth, const std::vector<double>& taus) {
  EventF1 out;
  out.taus = taus;
  auto matched = matched_ious(pred, truth);
  for (double tau : taus) {
    double f1;
    if (pred.size() == 0 && truth.size() == 0) {
      f1 = 1.0;
    } else if (pred.size() == 0 || truth.size() == 0) {
      f1 = 0.0;
    } else {
      int tp = 0;
      for (double iou : matched) tp += (iou >= tau) ? 1 : 0;
      double precision = static_cast<double>(tp) / pred.size();
      double recall = static_cast<double>(tp) / truth.size();
      f1 = (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    out.f1.push_back(f1);
  }
  double sum = 0.0;
  for (double v : out.f1) sum += v;
  out.average = out.f1.empty() ? 0.0 : sum / out.f1.size();
  return out;
}

double binned_ece(const std::vector<double>& confidences, const std::vector<uint8_t>& correct, int bins) {
  // equal-width bins over [0.5, 1]; confidence 1.0 lands in the last bin
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (size_t i = 0; i < confidences.size(); ++i) {
    double c = confidences[i];
    int b = static_cast<int>((c - 0.5) / (0.5 / bins));
    b = std::clamp(b, 0, bins - 1);
    conf_sum[b] += c;
    acc_sum[b] += correct[i] ? 1.0 : 0.0;
    count[b] += 1;
  }
  const double n = static_cast<double>(confidences.size());
  double ece = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    double conf = conf_sum[b] / count[b];
    double acc = acc_sum[b] / count[b];
    ece += (count[b] / n) * std::fabs(acc - conf);
  }
  return ece;
}

double ece_frame(const std::vector<double>& probs, const std::vector<uint8_t>& labels, int bins) {
  if (probs.size() != labels.size()) throw std::invalid_argument("ece_frame: length mismatch");
  if (probs.empty()) return 0.0;
  std::vector<double> conf(probs.size());
  std::vector<uint8_t> correct(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    double p = probs[i];
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("ece_frame: probability out of [0,1]");
    int predicted = p > 0.5 ? 1 : 0;
    conf[i] = std::max(p, 1.0 - p);
    correct[i] = predicted == labels[i] ? 1 : 0;
  }
  return binned_ece(conf, correct, bins);
}

EventEce ece_event(const EventSet& pred, const EventSet& truth, double tau_match, int bins) {
  EventEce out;
  if (pred.size() == 0) {
    out.empty = true;
    return out;
  }
  auto matched = matched_ious(pred, truth);
  std::vector<double> conf(pred.size());
  std::vector<uint8_t> correct(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!pred.events[i].confidence) throw std::invalid_argument("ece_event: predicted event lacks confidence");
    conf[i] = *pred.events[i].confidence;
    correct[i] = matched[i] >= tau_match ? 1 : 0;
  }
  out.ece = binned_ece(conf, correct, bins);
  return out;
}

LeadTime lead_time(const std::vector<uint8_t>& anticipation_flags, const EventSet& truth, double fps) {
  if (fps <= 0.0) throw std::invalid_argument("lead_time: fps must be positive");
  auto runs = extract_events(anticipation_flags);
  LeadTime out;
  for (const auto& ev : truth.events) {
    const int s = ev.start;
    bool covered = false;
    for (const auto& run : runs.events) {
      if (run.start <= s && s <= run.end + 1) {
        out.per_onset_seconds.push_back((s - run.start) / fps);
        covered = true;
        break;
      }
    }
    if (!covered) out.misses += 1;
  }
  if (!out.per_onset_seconds.empty()) {
    double sum = 0.0;
    for (double v : out.per_onset_seconds) sum += v;
    out.mean_seconds = sum / out.per_onset_seconds.size();
  }
  return out;
}

DetectionDelay detection_delay(const std::vector<uint8_t>& detection_flags, const EventSet& truth, double fps) {
  if (fps <= 0.0) throw std::invalid_argument("detection_delay: fps must be positive");
  DetectionDelay out;
  const int n = static_cast<int>(detection_flags.size());
  for (const auto& ev : truth.events) {
    int found = -1;
    for (int k = std::max(0, ev.start); k <= std::min(n - 1, ev.end); ++k) {
      if (detection_flags[k]) {
        found = k;
        break;
      }
    }
    if (found < 0) {
      out.misses += 1;
    } else {
      out.per_event_seconds.push_back((found - ev.start) / fps);
    }
  }
  if (!out.per_event_seconds.empty()) {
    double sum = 0.0;
    for (double v : out.per_event_seconds) sum += v;
    out.mean_seconds = sum / out.per_event_seconds.size();
  }
  return out;
}

}  // namespace osda::metrics

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace osda::metrics {

struct Event {
  int start = 0;  // inclusive frame indices
  int end = 0;
  std::optional<double> confidence;  // mean frame probability over the run
};

struct EventSet {
  std::vector<Event> events;  // sorted, non-overlapping
  size_t size() const { return events.size(); }
};

// Maximal runs of 1s; confidences from `probs` when provided.
EventSet extract_events(const std::vector<uint8_t>& binary, const std::vector<double>* probs = nullptr);

std::vector<uint8_t> events_to_labels(const EventSet& events, int n_frames);

double event_iou(const Event& a, const Event& b);

// Greedy one-to-one matching in descending IoU order (ties by pred index,
// then truth index). Returns the matched IoU per prediction, 0 if unmatched.
std::vector<double> matched_ious(const EventSet& pred, const EventSet& truth);

// Shared binning: equal-width bins over [0.5, 1].
double binned_ece(const std::vector<double>& confidences, const std::vector<uint8_t>& correct, int bins);

struct EventF1 {
  std::vector<double> taus;
  std::vector<double> f1;  // per tau
  double average = 0.0;
};
// Greedy one-to-one matching in descending IoU order; a prediction is TP at
// threshold tau iff its match has IoU >= tau. F1 = 1 when both sets are
// empty, 0 when exactly one is.
EventF1 event_f1(const EventSet& pred, const EventSet& truth, const std::vector<double>& taus = {0.1, 0.3, 0.5});

// Binned expected calibration error over confidence = max(p, 1-p); ten
// equal-width bins over [0.5, 1].
double ece_frame(const std::vector<double>& probs, const std::vector<uint8_t>& labels, int bins = 10);

struct EventEce {
  double ece = 0.0;
  bool empty = false;  // no predicted events
};
EventEce ece_event(const EventSet& pred, const EventSet& truth, double tau_match = 0.3, int bins = 10);

struct LeadTime {
  std::vector<double> per_onset_seconds;  // covered onsets only
  std::optional<double> mean_seconds;
  int misses = 0;
};
// Per truth onset s: lead = (s - a)/fps where [a, b] is the flagged run with
// a <= s <= b+1 (the run persists into the onset); onsets with no such run
// are misses.
LeadTime lead_time(const std::vector<uint8_t>& anticipation_flags, const EventSet& truth, double fps);

struct DetectionDelay {
  std::vector<double> per_event_seconds;
  std::optional<double> mean_seconds;
  int misses = 0;
};
// Per truth event: delay from event start to the first flagged frame inside
// the event; events with none are misses.
DetectionDelay detection_delay(const std::vector<uint8_t>& detection_flags, const EventSet& truth, double fps);

}  // namespace osda::metrics

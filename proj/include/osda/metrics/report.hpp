#pragma once

#include <optional>
#include <string>
#include <vector>

#include "osda/matrix.hpp"
#include "osda/metrics/events.hpp"
#include "osda/metrics/frame.hpp"

namespace osda::metrics {

// One video's causal prediction track paired with its ground truth.
struct ScoredTrack {
  std::string video_id;
  double fps = 0.0;
  std::vector<double> detection;  // struggle probability per frame
  Matrix anticipation;            // N x delta, row T holds offsets 1..delta
  std::vector<uint8_t> labels;    // ground-truth binary labels, length N
};

struct MetricReport {
  double detection_cap = 0.0;
  double detection_ap = 0.0;
  std::vector<std::optional<double>> anticipation_cap_per_offset;
  std::optional<double> anticipation_cap_avg;
  std::optional<double> anticipation_cap_pooled;
  std::vector<double> event_f1_taus;
  std::vector<double> event_f1_per_tau;
  double event_f1_avg = 0.0;
  double frame_ece = 0.0;
  std::optional<double> event_ece;
  std::optional<double> mean_lead_time_s;
  int lead_misses = 0;
  std::optional<double> mean_detection_delay_s;
  int delay_misses = 0;
  int truth_event_count = 0;
  int pred_event_count = 0;
  PrCurve pr;
  std::optional<double> random_detection_cap;
  std::optional<double> random_anticipation_cap;
};

struct ReportOptions {
  std::vector<double> event_taus{0.1, 0.3, 0.5};
  double event_ece_tau = 0.3;
  int ece_bins = 10;
  bool pooled_anticipation = false;
  // random baseline over the pooled labels; 0 trials disables it
  int random_trials = 20;
  uint64_t random_seed = 7;
};

// Pools frames across tracks (in input order) for ranking metrics; event and
// latency metrics are computed per video and aggregated.
MetricReport compute_metric_report(const std::vector<ScoredTrack>& tracks, const ReportOptions& opt = {});

std::string metric_report_to_json(const MetricReport& r);
MetricReport metric_report_from_json(const std::string& text);

void write_metric_report(const MetricReport& r, const std::string& path);
MetricReport read_metric_report(const std::string& path);

}  // namespace osda::metrics

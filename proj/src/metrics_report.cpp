#include "osda/metrics/report.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace osda::metrics {

using json = nlohmann::ordered_json;

MetricReport compute_metric_report(const std::vector<ScoredTrack>& tracks, const ReportOptions& opt) {
  if (tracks.empty()) throw std::invalid_argument("compute_metric_report: no tracks");
  MetricReport rep;

  int delta = tracks.front().anticipation.cols;
  ScoredFrames det_pool;
  std::vector<ScoredFrames> ant_pools(static_cast<size_t>(delta));
  std::vector<uint8_t> pooled_labels;

  // event/latency aggregation
  std::vector<int> tp_per_tau(opt.event_taus.size(), 0);
  int total_pred = 0, total_truth = 0;
  std::vector<double> event_conf;
  std::vector<uint8_t> event_correct;
  std::vector<double> frame_probs_all;
  std::vector<uint8_t> frame_labels_all;
  std::vector<double> leads, delays;
  int lead_misses = 0, delay_misses = 0;

  for (const auto& tr : tracks) {
    const int n = static_cast<int>(tr.labels.size());
    if (static_cast<int>(tr.detection.size()) != n || tr.anticipation.rows != n)
      throw std::invalid_argument("compute_metric_report: track/label length mismatch for " + tr.video_id);
    if (tr.anticipation.cols != delta)
      throw std::invalid_argument("compute_metric_report: inconsistent anticipation width");

    for (int t = 0; t < n; ++t) {
      det_pool.push(tr.detection[t], tr.labels[t]);
      frame_probs_all.push_back(tr.detection[t]);
      frame_labels_all.push_back(tr.labels[t]);
      for (int j = 0; j < delta; ++j) {
        int target = t + j + 1;
        if (target < n) ant_pools[j].push(tr.anticipation.at(t, j), tr.labels[target]);
      }
    }
    pooled_labels.insert(pooled_labels.end(), tr.labels.begin(), tr.labels.end());

    // binarized views: struggle prob above background prob
    std::vector<uint8_t> det_flags(n, 0);
    for (int t = 0; t < n; ++t) det_flags[t] = tr.detection[t] > 0.5 ? 1 : 0;
    std::vector<uint8_t> ant_flags(n, 0);
    for (int t = 0; t < n; ++t) {
      for (int j = 0; j < delta; ++j) {
        if (tr.anticipation.at(t, j) > 0.5) {
          ant_flags[t] = 1;
          break;
        }
      }
    }

    EventSet truth = extract_events(tr.labels);
    EventSet pred = extract_events(det_flags, &tr.detection);
    total_truth += static_cast<int>(truth.size());
    total_pred += static_cast<int>(pred.size());
    auto ious = matched_ious(pred, truth);
    for (size_t i = 0; i < opt.event_taus.size(); ++i)
      for (double iou : ious) tp_per_tau[i] += (iou >= opt.event_taus[i]) ? 1 : 0;
    for (size_t i = 0; i < pred.size(); ++i) {
      event_conf.push_back(*pred.events[i].confidence);
      event_correct.push_back(ious[i] >= opt.event_ece_tau ? 1 : 0);
    }

    auto lt = lead_time(ant_flags, truth, tr.fps);
    leads.insert(leads.end(), lt.per_onset_seconds.begin(), lt.per_onset_seconds.end());
    lead_misses += lt.misses;
    auto dd = detection_delay(det_flags, truth, tr.fps);
    delays.insert(delays.end(), dd.per_event_seconds.begin(), dd.per_event_seconds.end());
    delay_misses += dd.misses;
  }

  rep.detection_cap = frame_cap(det_pool);
  rep.detection_ap = frame_ap(det_pool);
  rep.pr = pr_curve(det_pool);
  rep.frame_ece = ece_frame(frame_probs_all, frame_labels_all, opt.ece_bins);

  if (delta > 0) {
    auto ant = anticipation_cap(ant_pools, det_pool, opt.pooled_anticipation);
    rep.anticipation_cap_per_offset = ant.per_offset;
    rep.anticipation_cap_avg = ant.average;
    rep.anticipation_cap_pooled = ant.pooled;
  }

  rep.event_f1_taus = opt.event_taus;
  for (size_t i = 0; i < opt.event_taus.size(); ++i) {
    double f1;
    if (total_pred == 0 && total_truth == 0) {
      f1 = 1.0;
    } else if (total_pred == 0 || total_truth == 0) {
      f1 = 0.0;
    } else {
      double precision = static_cast<double>(tp_per_tau[i]) / total_pred;
      double recall = static_cast<double>(tp_per_tau[i]) / total_truth;
      f1 = (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    rep.event_f1_per_tau.push_back(f1);
  }
  {
    double sum = 0.0;
    for (double v : rep.event_f1_per_tau) sum += v;
    rep.event_f1_avg = rep.event_f1_per_tau.empty() ? 0.0 : sum / rep.event_f1_per_tau.size();
  }
  if (!event_conf.empty()) rep.event_ece = binned_ece(event_conf, event_correct, opt.ece_bins);

  if (!leads.empty()) {
    double sum = 0.0;
    for (double v : leads) sum += v;
    rep.mean_lead_time_s = sum / leads.size();
  }
  rep.lead_misses = lead_misses;
  if (!delays.empty()) {
    double sum = 0.0;
    for (double v : delays) sum += v;
    rep.mean_detection_delay_s = sum / delays.size();
  }
  rep.delay_misses = delay_misses;
  rep.truth_event_count = total_truth;
  rep.pred_event_count = total_pred;

  if (opt.random_trials > 0) {
    rep.random_detection_cap = random_baseline_cap(pooled_labels, opt.random_trials, opt.random_seed);
    if (delta > 0) {
      // same calibration property holds per offset; one pooled baseline is
      // representative and much cheaper than per-offset re-simulation
      std::vector<uint8_t> ant_labels;
      for (const auto& pool : ant_pools) ant_labels.insert(ant_labels.end(), pool.labels.begin(), pool.labels.end());
      if (!ant_labels.empty())
        rep.random_anticipation_cap = random_baseline_cap(ant_labels, opt.random_trials, opt.random_seed + 1);
    }
  }
  return rep;
}

namespace {
json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from_json(const json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}
}  // namespace

std::string metric_report_to_json(const MetricReport& r) {
  json j;
  j["detection_cap"] = r.detection_cap;
  j["detection_ap"] = r.detection_ap;
  json per_offset = json::array();
  for (const auto& v : r.anticipation_cap_per_offset) per_offset.push_back(opt_to_json(v));
  j["anticipation_cap_per_offset"] = per_offset;
  j["anticipation_cap_avg"] = opt_to_json(r.anticipation_cap_avg);
  j["anticipation_cap_pooled"] = opt_to_json(r.anticipation_cap_pooled);
  j["event_f1_taus"] = r.event_f1_taus;
  j["event_f1_per_tau"] = r.event_f1_per_tau;
  j["event_f1_avg"] = r.event_f1_avg;
  j["frame_ece"] = r.frame_ece;
  j["event_ece"] = opt_to_json(r.event_ece);
  j["mean_lead_time_s"] = opt_to_json(r.mean_lead_time_s);
  j["lead_misses"] = r.lead_misses;
  j["mean_detection_delay_s"] = opt_to_json(r.mean_detection_delay_s);
  j["delay_misses"] = r.delay_misses;
  j["truth_event_count"] = r.truth_event_count;
  j["pred_event_count"] = r.pred_event_count;
  j["pr_auc"] = r.pr.auc;
  json pts = json::array();
  for (const auto& p : r.pr.points) pts.push_back(json::array({p.threshold, p.precision, p.recall}));
  j["pr_points"] = pts;
  j["random_detection_cap"] = opt_to_json(r.random_detection_cap);
  j["random_anticipation_cap"] = opt_to_json(r.random_anticipation_cap);
  return j.dump(2) + "\n";
}

MetricReport metric_report_from_json(const std::string& text) {
  json j = json::parse(text);
  MetricReport r;
  r.detection_cap = j.at("detection_cap").get<double>();
  r.detection_ap = j.at("detection_ap").get<double>();
  for (const auto& v : j.at("anticipation_cap_per_offset")) r.anticipation_cap_per_offset.push_back(opt_from_json(v));
  r.anticipation_cap_avg = opt_from_json(j.at("anticipation_cap_avg"));
  r.anticipation_cap_pooled = opt_from_json(j.at("anticipation_cap_pooled"));
  r.event_f1_taus = j.at("event_f1_taus").get<std::vector<double>>();
  r.event_f1_per_tau = j.at("event_f1_per_tau").get<std::vector<double>>();
  r.event_f1_avg = j.at("event_f1_avg").get<double>();
  r.frame_ece = j.at("frame_ece").get<double>();
  r.event_ece = opt_from_json(j.at("event_ece"));
  r.mean_lead_time_s = opt_from_json(j.at("mean_lead_time_s"));
  r.lead_misses = j.at("lead_misses").get<int>();
  r.mean_detection_delay_s = opt_from_json(j.at("mean_detection_delay_s"));
  r.delay_misses = j.at("delay_misses").get<int>();
  r.truth_event_count = j.at("truth_event_count").get<int>();
  r.pred_event_count = j.at("pred_event_count").get<int>();
  r.pr.auc = j.at("pr_auc").get<double>();
  for (const auto& p : j.at("pr_points")) r.pr.points.push_back({p.at(0), p.at(1), p.at(2)});
  r.random_detection_cap = opt_from_json(j.at("random_detection_cap"));
  r.random_anticipation_cap = opt_from_json(j.at("random_anticipation_cap"));
  return r;
}

void write_metric_report(const MetricReport& r, const std::string& path) {
  {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << metric_report_to_json(r);
}

MetricReport read_metric_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string text{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  return metric_report_from_json(text);
}

}  // namespace osda::metrics

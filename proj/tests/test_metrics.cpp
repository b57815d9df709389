#include <cmath>

#include "doctest.h"
#include "osda/metrics/events.hpp"
#include "osda/metrics/frame.hpp"
#include "osda/metrics/report.hpp"
#include "osda/rng.hpp"

using namespace osda;
using namespace osda::metrics;

namespace {

// Brute-force cAP oracle: for every positive frame, count by direct pairwise
// comparison how many positives/negatives rank at or above it (score
// descending, index ascending on ties). No sorting, O(n^2).
double cap_bruteforce(const ScoredFrames& f) {
  const int n = static_cast<int>(f.size());
  int n_pos = f.positives(), n_neg = f.negatives();
  REQUIRE(n_pos > 0);
  REQUIRE(n_neg > 0);
  const double w = static_cast<double>(n_neg) / n_pos;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!f.labels[i]) continue;
    int tp = 0, fp = 0;
    for (int j = 0; j < n; ++j) {
      bool above = f.scores[j] > f.scores[i] || (f.scores[j] == f.scores[i] && j <= i);
      if (!above) continue;
      if (f.labels[j])
        ++tp;
      else
        ++fp;
    }
    sum += tp / (tp + fp / w);
  }
  return sum / n_pos;
}

ScoredFrames random_frames(RandomStream& rng, int n, double pos_prop) {
  ScoredFrames f;
  for (int i = 0; i < n; ++i) f.push(rng.u01(), rng.u01() < pos_prop ? 1 : 0);
  if (f.positives() == 0) f.labels[0] = 1;
  if (f.negatives() == 0) f.labels[0] = 0;
  return f;
}

}  // namespace

TEST_CASE("frame cAP: worked example and perfect ranking") {
  ScoredFrames f;
  f.push(0.9, 1);
  f.push(0.8, 0);
  f.push(0.7, 1);
  f.push(0.6, 0);
  CHECK(frame_cap(f) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));

  ScoredFrames perfect;
  for (int i = 0; i < 10; ++i) perfect.push(1.0 - i * 0.01, i < 4 ? 1 : 0);
  CHECK(frame_cap(perfect) == 1.0);
  CHECK(frame_ap(perfect) == 1.0);

  ScoredFrames single;
  single.push(0.3, 1);
  CHECK_THROWS_AS(frame_cap(single), std::domain_error);
}

TEST_CASE("frame cAP: brute-force enumeration oracle on random instances") {
  RandomStream rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    int n = rng.uniform_int(2, 50);
    ScoredFrames f = random_frames(rng, n, rng.uniform(0.15, 0.85));
    if (rng.u01() < 0.3) {
      // inject ties
      for (size_t i = 1; i < f.scores.size(); i += 2) f.scores[i] = f.scores[i - 1];
    }
    CHECK(std::fabs(frame_cap(f) - cap_bruteforce(f)) <= 1e-12);
  }
}

TEST_CASE("calibration: random scores give ~50% cAP while AP tracks the positive rate") {
  RandomStream rng(9);
  for (double prop : {0.25, 0.29, 0.42, 0.49}) {
    std::vector<uint8_t> labels(10000);
    for (auto& l : labels) l = rng.u01() < prop ? 1 : 0;
    double cap = random_baseline_cap(labels, 20, 42);
    CHECK(cap > 0.48);
    CHECK(cap < 0.52);

    ScoredFrames f;
    RandomStream srng(77);
    for (uint8_t l : labels) f.push(srng.u01(), l);
    CHECK(std::fabs(frame_ap(f) - prop) < 0.03);
  }
  // reproducibility
  std::vector<uint8_t> labels(500);
  RandomStream lr(3);
  for (auto& l : labels) l = lr.u01() < 0.3 ? 1 : 0;
  CHECK(random_baseline_cap(labels, 5, 11) == random_baseline_cap(labels, 5, 11));
}

TEST_CASE("cAP equals AP exactly on balanced labels; both are rank statistics") {
  RandomStream rng(15);
  ScoredFrames f;
  for (int i = 0; i < 400; ++i) f.push(rng.u01(), i % 2);
  CHECK(std::fabs(frame_cap(f) - frame_ap(f)) <= 1e-12);

  // strictly increasing transform leaves ranking metrics unchanged
  ScoredFrames g = f;
  for (auto& s : g.scores) s = std::tanh(3.0 * s) + 2.0;
  CHECK(frame_cap(g) == doctest::Approx(frame_cap(f)).epsilon(1e-14));
  CHECK(pr_curve(g).auc == doctest::Approx(pr_curve(f).auc).epsilon(1e-14));
}

TEST_CASE("anticipation scoring: realignment oracle and delta=0 reduction") {
  RandomStream rng(33);
  const int n = 60, delta = 4;
  ScoredTrack tr;
  tr.video_id = "v";
  tr.fps = 3.125;
  tr.detection.resize(n);
  tr.anticipation = Matrix(n, delta);
  tr.labels.resize(n);
  for (int t = 0; t < n; ++t) {
    tr.detection[t] = rng.u01();
    tr.labels[t] = rng.u01() < 0.4 ? 1 : 0;
    for (int j = 0; j < delta; ++j) tr.anticipation.at(t, j) = rng.u01();
  }

  // library route
  std::vector<ScoredFrames> pools(delta);
  ScoredFrames det;
  for (int t = 0; t < n; ++t) {
    det.push(tr.detection[t], tr.labels[t]);
    for (int j = 0; j < delta; ++j)
      if (t + j + 1 < n) pools[j].push(tr.anticipation.at(t, j), tr.labels[t + j + 1]);
  }
  auto ant = anticipation_cap(pools, det, true);

  // realignment oracle: shift the label track by j+1 and score directly
  for (int j = 0; j < delta; ++j) {
    ScoredFrames shifted;
    for (int t = 0; t + j + 1 < n; ++t) shifted.push(tr.anticipation.at(t, j), tr.labels[t + j + 1]);
    REQUIRE(ant.per_offset[j].has_value());
    CHECK(std::fabs(*ant.per_offset[j] - frame_cap(shifted)) <= 1e-12);
  }
  double mean = 0.0;
  for (int j = 0; j < delta; ++j) mean += *ant.per_offset[j];
  CHECK(ant.average == doctest::Approx(mean / delta).epsilon(1e-14));
  CHECK(ant.pooled.has_value());

  // delta = 0 reduces to detection cAP
  auto det_only = anticipation_cap({}, det, false);
  CHECK(det_only.average == doctest::Approx(frame_cap(det)).epsilon(1e-14));
}

TEST_CASE("anticipation scoring: offsets near stream end have fewer pairs but still score") {
  // struggle begins right at stream end so only long offsets see positives
  const int n = 20, delta = 3;
  std::vector<ScoredFrames> pools(delta);
  std::vector<uint8_t> labels(n, 0);
  labels[n - 1] = 1;
  RandomStream rng(4);
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < delta; ++j)
      if (t + j + 1 < n) pools[j].push(rng.u01(), labels[t + j + 1]);
  CHECK(pools[0].size() == static_cast<size_t>(n - 1));
  CHECK(pools[2].size() == static_cast<size_t>(n - 3));
  ScoredFrames dummy_det;
  dummy_det.push(0.5, 1);
  dummy_det.push(0.4, 0);
  auto ant = anticipation_cap(pools, dummy_det, false);
  for (int j = 0; j < delta; ++j) CHECK(ant.per_offset[j].has_value());
}

TEST_CASE("event extraction: examples and round-trip identity on random tracks") {
  CHECK(extract_events({}).size() == 0);
  CHECK(extract_events({0, 0, 0}).size() == 0);

  auto ev = extract_events({0, 1, 1, 0, 1});
  REQUIRE(ev.size() == 2);
  CHECK(ev.events[0].start == 1);
  CHECK(ev.events[0].end == 2);
  CHECK(ev.events[1].start == 4);
  CHECK(ev.events[1].end == 4);

  RandomStream rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = rng.uniform_int(1, 60);
    std::vector<uint8_t> track(n);
    for (auto& v : track) v = rng.u01() < 0.4 ? 1 : 0;
    auto events = extract_events(track);
    CHECK(events_to_labels(events, n) == track);
  }
}

TEST_CASE("event F1: hand IoU case, edge cases, swap symmetry") {
  EventSet a{{{0, 9, std::nullopt}}};
  EventSet b{{{5, 14, std::nullopt}}};
  CHECK(event_iou(a.events[0], b.events[0]) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  auto f1 = event_f1(a, b);
  CHECK(f1.f1[0] == 1.0);  // tau 0.1
  CHECK(f1.f1[1] == 1.0);  // tau 0.3
  CHECK(f1.f1[2] == 0.0);  // tau 0.5
  CHECK(f1.average == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  auto identical = event_f1(a, a);
  for (double v : identical.f1) CHECK(v == 1.0);

  EventSet empty;
  CHECK(event_f1(empty, b).average == 0.0);
  CHECK(event_f1(a, empty).average == 0.0);
  CHECK(event_f1(empty, empty).average == 1.0);

  // several events; swapping prediction and truth preserves F1
  RandomStream rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 80;
    std::vector<uint8_t> t1(n), t2(n);
    for (auto& v : t1) v = rng.u01() < 0.35 ? 1 : 0;
    for (auto& v : t2) v = rng.u01() < 0.35 ? 1 : 0;
    EventSet p = extract_events(t1), q = extract_events(t2);
    auto fwd = event_f1(p, q);
    auto rev = event_f1(q, p);
    for (size_t i = 0; i < fwd.f1.size(); ++i) CHECK(fwd.f1[i] == doctest::Approx(rev.f1[i]).epsilon(1e-12));
  }
}

TEST_CASE("frame ECE: degenerate and calibrated cases") {
  // confident and half wrong
  std::vector<double> probs(100, 1.0);
  std::vector<uint8_t> labels(100, 0);
  for (int i = 0; i < 50; ++i) labels[i] = 1;
  CHECK(ece_frame(probs, labels) == doctest::Approx(0.5).epsilon(1e-12));

  // labels drawn Bernoulli(p) from the emitted p
  RandomStream rng(55);
  const int n = 100000;
  std::vector<double> p(n);
  std::vector<uint8_t> l(n);
  for (int i = 0; i < n; ++i) {
    p[i] = rng.u01();
    l[i] = rng.u01() < p[i] ? 1 : 0;
  }
  CHECK(ece_frame(p, l) < 0.02);
}

TEST_CASE("event ECE: exact hand cases") {
  EventSet truth{{{0, 9, std::nullopt}, {20, 29, std::nullopt}}};
  EventSet all_correct{{{0, 9, 1.0}, {20, 29, 1.0}}};
  CHECK(ece_event(all_correct, truth).ece == doctest::Approx(0.0).epsilon(1e-12));

  EventSet all_wrong{{{40, 49, 1.0}, {60, 69, 1.0}}};
  CHECK(ece_event(all_wrong, truth).ece == doctest::Approx(1.0).epsilon(1e-12));

  // four events: two perfect matches at conf .95, two misses at conf .75
  EventSet four{{{0, 9, 0.95}, {20, 29, 0.95}, {40, 49, 0.75}, {60, 69, 0.75}}};
  // bins: [.75,.8) holds the two wrong (acc 0, conf .75), [.95,1] ... conf .95 in bin 9
  double want = 0.5 * std::fabs(0.0 - 0.75) + 0.5 * std::fabs(1.0 - 0.95);
  CHECK(ece_event(four, truth).ece == doctest::Approx(want).epsilon(1e-12));

  EventSet none;
  auto r = ece_event(none, truth);
  CHECK(r.empty);
  CHECK(r.ece == 0.0);
}

TEST_CASE("lead time: constructed tracks") {
  const double fps = 3.125;
  EventSet truth{{{10, 15, std::nullopt}}};

  std::vector<uint8_t> flags(30, 0);
  SUBCASE("run begins exactly at the onset") {
    for (int k = 10; k <= 15; ++k) flags[k] = 1;
    auto lt = lead_time(flags, truth, fps);
    REQUIRE(lt.mean_seconds.has_value());
    CHECK(*lt.mean_seconds == doctest::Approx(0.0));
    CHECK(lt.misses == 0);
  }
  SUBCASE("flagged continuously from 2 seconds before the onset") {
    // 2 s at 3.125 fps is 6.25 frames; flag from ceil: start so that lead is measured unclamped
    for (int k = 10 - 6; k <= 12; ++k) flags[k] = 1;
    auto lt = lead_time(flags, truth, fps);
    REQUIRE(lt.mean_seconds.has_value());
    CHECK(*lt.mean_seconds == doctest::Approx(6 / fps).epsilon(1e-12));
  }
  SUBCASE("run that ends just before the onset still counts") {
    for (int k = 5; k <= 9; ++k) flags[k] = 1;
    auto lt = lead_time(flags, truth, fps);
    REQUIRE(lt.mean_seconds.has_value());
    CHECK(*lt.mean_seconds == doctest::Approx(5 / fps).epsilon(1e-12));
  }
  SUBCASE("onset never flagged counts as a miss") {
    auto lt = lead_time(flags, truth, fps);
    CHECK(!lt.mean_seconds.has_value());
    CHECK(lt.misses == 1);
  }
}

TEST_CASE("detection delay: constructed tracks") {
  const double fps = 3.125;
  EventSet truth{{{10, 18, std::nullopt}, {25, 28, std::nullopt}}};
  std::vector<uint8_t> flags(40, 0);

  SUBCASE("detection exactly at every event start") {
    flags[10] = 1;
    flags[25] = 1;
    auto dd = detection_delay(flags, truth, fps);
    REQUIRE(dd.mean_seconds.has_value());
    CHECK(*dd.mean_seconds == doctest::Approx(0.0));
    CHECK(dd.misses == 0);
  }
  SUBCASE("three frames late") {
    flags[13] = 1;
    auto dd = detection_delay(flags, truth, fps);
    REQUIRE(dd.mean_seconds.has_value());
    CHECK(*dd.mean_seconds == doctest::Approx(3.0 / 3.125).epsilon(1e-12));
    CHECK(*dd.mean_seconds == doctest::Approx(0.96).epsilon(1e-12));
    CHECK(dd.misses == 1);
  }
  SUBCASE("no detections at all") {
    auto dd = detection_delay(flags, truth, fps);
    CHECK(!dd.mean_seconds.has_value());
    CHECK(dd.misses == 2);
  }
}

TEST_CASE("PR curve: perfect ranking and random balanced") {
  ScoredFrames perfect;
  for (int i = 0; i < 50; ++i) perfect.push(1.0 - i * 0.01, i < 20 ? 1 : 0);
  CHECK(pr_curve(perfect).auc == doctest::Approx(1.0).epsilon(1e-12));

  RandomStream rng(777);
  ScoredFrames f;
  for (int i = 0; i < 10000; ++i) f.push(rng.u01(), i % 2);
  CHECK(std::fabs(pr_curve(f).auc - 0.5) < 0.03);

  // recall is monotone along the curve
  auto curve = pr_curve(f);
  for (size_t i = 1; i < curve.points.size(); ++i) CHECK(curve.points[i].recall >= curve.points[i - 1].recall);
}

TEST_CASE("metric report aggregates tracks and serializes round-trip") {
  RandomStream rng(61);
  std::vector<ScoredTrack> tracks;
  for (int v = 0; v < 3; ++v) {
    ScoredTrack tr;
    tr.video_id = "v" + std::to_string(v);
    tr.fps = 3.125;
    const int n = 50;
    tr.detection.resize(n);
    tr.anticipation = Matrix(n, 2);
    tr.labels.resize(n);
    for (int t = 0; t < n; ++t) {
      tr.labels[t] = (t % 10) < 3 ? 1 : 0;
      tr.detection[t] = tr.labels[t] ? rng.uniform(0.4, 1.0) : rng.uniform(0.0, 0.6);
      for (int j = 0; j < 2; ++j) tr.anticipation.at(t, j) = rng.u01();
    }
    tracks.push_back(std::move(tr));
  }
  ReportOptions opt;
  opt.random_trials = 5;
  auto rep = compute_metric_report(tracks, opt);
  CHECK(rep.detection_cap > 0.5);
  CHECK(rep.anticipation_cap_avg.has_value());
  CHECK(rep.random_detection_cap.has_value());
  CHECK(*rep.random_detection_cap > 0.4);
  CHECK(*rep.random_detection_cap < 0.6);

  auto text = metric_report_to_json(rep);
  auto back = metric_report_from_json(text);
  CHECK(back.detection_cap == rep.detection_cap);
  CHECK(back.event_f1_avg == rep.event_f1_avg);
  CHECK(back.pr.points.size() == rep.pr.points.size());
  CHECK(metric_report_to_json(back) == text);
}

#include <cstdio>
#include <filesystem>
#include <set>
#include <unistd.h>

#include "doctest.h"
#include "osda/data/feature_io.hpp"
#include "osda/data/labels.hpp"
#include "osda/data/manifest.hpp"
#include "osda/data/split.hpp"
#include "osda/rng.hpp"

using namespace osda;
using namespace osda::data;

namespace {
std::string temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("osda_dm_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir.string();
}

// independent oracle: frame k positive iff a rounded boundary pair brackets it
bool oracle_positive(const std::vector<std::pair<double, double>>& eps, double fps, int k, int n) {
  for (auto [s, e] : eps) {
    int lo = std::clamp(static_cast<int>(std::round(s * fps)), 0, n - 1);
    int hi = std::clamp(static_cast<int>(std::round(e * fps)), 0, n - 1);
    if (lo <= k && k <= hi) return true;
  }
  return false;
}
}  // namespace

TEST_CASE("label conversion: examples") {
  StruggleIntervals none{"v", {}};
  auto empty_track = intervals_to_frame_labels(none, 3.125, 8);
  CHECK(empty_track.positive_count() == 0);

  StruggleIntervals one{"v", {{1.0, 2.0}}};
  auto track = intervals_to_frame_labels(one, 3.125, 10);
  // round(3.125) = 3, round(6.25) = 6
  std::vector<uint8_t> want{0, 0, 0, 1, 1, 1, 1, 0, 0, 0};
  CHECK(track.labels == want);

  StruggleIntervals overlapping{"v", {{0.0, 1.0}, {0.5, 1.5}}};
  auto merged = intervals_to_frame_labels(overlapping, 3.125, 10);
  int runs = 0;
  for (int k = 0; k < 10; ++k)
    if (merged.labels[k] && (k == 0 || !merged.labels[k - 1])) ++runs;
  CHECK(runs == 1);

  CHECK_THROWS_AS(intervals_to_frame_labels(one, 3.125, 0), std::invalid_argument);

  std::vector<std::string> warnings;
  StruggleIntervals past_end{"v", {{2.0, 9.0}}};
  auto clamped = intervals_to_frame_labels(past_end, 3.125, 10, &warnings);
  CHECK(clamped.labels[9] == 1);
  CHECK(warnings.size() == 1);
}

TEST_CASE("label conversion: random episodes match the per-frame oracle; extension is monotone") {
  RandomStream rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    double fps = rng.uniform(1.0, 8.0);
    int n = rng.uniform_int(5, 200);
    double duration = n / fps;
    std::vector<std::pair<double, double>> eps;
    int k_eps = rng.uniform_int(0, 4);
    for (int i = 0; i < k_eps; ++i) {
      double s = rng.uniform(0.0, duration * 0.9);
      double e = s + rng.uniform(0.05, duration * 0.3);
      eps.emplace_back(s, e);
    }
    auto track = intervals_to_frame_labels({"v", eps}, fps, n);
    for (int k = 0; k < n; ++k) CHECK(static_cast<bool>(track.labels[k]) == oracle_positive(eps, fps, k, n));

    // monotone: extending any episode never turns a positive frame negative
    if (!eps.empty()) {
      auto extended = eps;
      extended[0].second += 0.7;
      auto track2 = intervals_to_frame_labels({"v", extended}, fps, n);
      for (int k = 0; k < n; ++k)
        if (track.labels[k]) CHECK(track2.labels[k] == 1);
    }
  }
}

TEST_CASE("label conversion: positive proportion converges to episode mass") {
  std::vector<std::pair<double, double>> eps{{10.0, 30.0}, {50.0, 55.0}};
  const double duration = 100.0;
  const double mass = (30.0 - 10.0 + 55.0 - 50.0) / duration;
  for (double fps : {4.0, 16.0, 64.0}) {
    int n = static_cast<int>(duration * fps);
    auto track = intervals_to_frame_labels({"v", eps}, fps, n);
    double prop = static_cast<double>(track.positive_count()) / n;
    // one frame-width slack per boundary, two episodes -> four boundaries
    CHECK(std::fabs(prop - mass) <= 4.0 / (fps * duration) + 1e-12);
  }
}

TEST_CASE("feature file round trip and error paths") {
  std::string dir = temp_dir();
  RandomStream rng(5);
  FeatureStream s;
  s.video_id = "x";
  s.frames = Matrix(20, 16);
  for (auto& v : s.frames.data) v = rng.normal();
  quantize_to_f32(s.frames);
  s.feature_fps = 3.125;
  s.d_slow = 12;
  s.d_fast = 4;

  std::string path = dir + "/x.osdf";
  write_feature_stream(s, path);
  FeatureStream back = read_feature_stream(path);
  CHECK(back.frames == s.frames);
  CHECK(back.feature_fps == s.feature_fps);
  CHECK(back.d_slow == 12);
  CHECK(back.d_fast == 4);

  SUBCASE("wrong magic") {
    std::string bad = dir + "/bad_magic.osdf";
    std::filesystem::copy_file(path, bad, std::filesystem::copy_options::overwrite_existing);
    std::FILE* f = std::fopen(bad.c_str(), "r+b");
    std::fputs("NOPE", f);
    std::fclose(f);
    CHECK_THROWS_WITH_AS(read_feature_stream(bad), doctest::Contains("bad magic"), FeatureFormatError);
  }
  SUBCASE("truncated payload") {
    std::string trunc = dir + "/trunc.osdf";
    std::filesystem::copy_file(path, trunc, std::filesystem::copy_options::overwrite_existing);
    std::filesystem::resize_file(trunc, std::filesystem::file_size(trunc) - 5);
    CHECK_THROWS_WITH_AS(read_feature_stream(trunc), doctest::Contains("truncated"), FeatureFormatError);
  }
  SUBCASE("inconsistent dims rejected at write") {
    FeatureStream broken = s;
    broken.d_slow = 13;  // 13 + 4 != 16
    CHECK_THROWS_AS(write_feature_stream(broken, dir + "/broken.osdf"), std::invalid_argument);
  }
}

namespace {
std::vector<VideoRecord> toy_manifest() {
  std::vector<VideoRecord> m;
  for (Activity act : all_activities()) {
    int tasks = act == Activity::Origami || act == Activity::Tangram ? 4 : 5;
    for (int task = 1; task <= std::min(tasks, 2); ++task)
      for (int part = 0; part < 3; ++part)
        for (int attempt = 1; attempt <= 5; ++attempt) {
          VideoRecord r;
          r.video_id = std::string(activity_name(act)) + "_t" + std::to_string(task) + "_P" + std::to_string(part) +
                       "_a" + std::to_string(attempt);
          r.activity = act;
          r.task_id = task;
          r.participant_id = "P" + std::to_string(part);
          r.attempt = attempt;
          r.duration = 100.0;
          m.push_back(r);
        }
  }
  return m;
}

bool disjoint(const Split& s) {
  std::set<std::string> ids;
  for (const auto& r : s.train) ids.insert(r.video_id);
  for (const auto& r : s.val)
    if (ids.count(r.video_id)) return false;
  return true;
}
}  // namespace

TEST_CASE("split builder: mode contracts") {
  auto manifest = toy_manifest();

  SUBCASE("leave one activity out") {
    SplitSpec spec;
    spec.mode = SplitMode::LeaveOneActivityOut;
    spec.activity = "Origami";
    auto s = build_split(manifest, spec);
    CHECK(disjoint(s));
    for (const auto& r : s.train) CHECK(r.activity != Activity::Origami);
    for (const auto& r : s.val) CHECK(r.activity == Activity::Origami);
    CHECK(s.val.size() == 2u * 3u * 5u);
  }

  SUBCASE("leave one task out") {
    SplitSpec spec;
    spec.mode = SplitMode::LeaveOneTaskOut;
    spec.activity = "TyingKnots";
    spec.task_id = 2;
    auto s = build_split(manifest, spec);
    CHECK(disjoint(s));
    for (const auto& r : s.train) {
      CHECK(r.activity == Activity::TyingKnots);
      CHECK(r.task_id != 2);
    }
    for (const auto& r : s.val) CHECK(r.task_id == 2);
  }

  SUBCASE("attempt filter trains on first attempts only, eval sees all") {
    SplitSpec spec;
    spec.mode = SplitMode::AttemptFilter;
    spec.train_attempts = {1};
    spec.eval_attempts = {1, 2, 3, 4, 5};
    auto s = build_split(manifest, spec);
    CHECK(disjoint(s));
    for (const auto& r : s.train) CHECK(r.attempt == 1);
    std::set<int> eval_attempts;
    for (const auto& r : s.val) eval_attempts.insert(r.attempt);
    CHECK(eval_attempts.size() == 5);
    // participant holdout keeps video sets disjoint even with attempt overlap
    std::set<std::string> train_parts;
    for (const auto& r : s.train) train_parts.insert(r.participant_id);
    for (const auto& r : s.val) CHECK(!train_parts.count(r.participant_id));
  }

  SUBCASE("cross activity zero shot") {
    SplitSpec spec;
    spec.mode = SplitMode::CrossActivityZeroShot;
    spec.activity = "Tangram";
    spec.eval_activity = "ShuffleCards";
    auto s = build_split(manifest, spec);
    CHECK(disjoint(s));
    for (const auto& r : s.train) CHECK(r.activity == Activity::Tangram);
    for (const auto& r : s.val) CHECK(r.activity == Activity::ShuffleCards);
  }

  SUBCASE("within activity and combined are participant-disjoint") {
    for (SplitMode mode : {SplitMode::WithinActivity, SplitMode::CombinedAll}) {
      SplitSpec spec;
      spec.mode = mode;
      spec.activity = "Origami";
      auto s = build_split(manifest, spec);
      CHECK(disjoint(s));
      CHECK(!s.train.empty());
      CHECK(!s.val.empty());
    }
  }

  SUBCASE("empty result rejected") {
    SplitSpec spec;
    spec.mode = SplitMode::AttemptFilter;
    spec.train_attempts = {1};
    spec.eval_attempts = {1};
    std::vector<VideoRecord> single;
    for (const auto& r : manifest)
      if (r.participant_id == "P0") single.push_back(r);
    CHECK_THROWS(build_split(single, spec));
  }
}

TEST_CASE("manifest and annotation round trips") {
  std::string dir = temp_dir();
  auto manifest = toy_manifest();
  write_manifest(manifest, dir + "/manifest.json");
  auto back = read_manifest(dir + "/manifest.json");
  REQUIRE(back.size() == manifest.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].video_id == manifest[i].video_id);
    CHECK(back[i].activity == manifest[i].activity);
    CHECK(back[i].attempt == manifest[i].attempt);
    CHECK(back[i].duration == manifest[i].duration);
  }

  std::map<std::string, StruggleIntervals> ann;
  ann["a"] = StruggleIntervals{"a", {{0.5, 2.25}, {3.0, 4.5}}};
  ann["b"] = StruggleIntervals{"b", {}};
  write_annotations(ann, dir + "/annotations.json");
  auto ann_back = read_annotations(dir + "/annotations.json");
  CHECK(ann_back.size() == 2);
  CHECK(ann_back["a"].episodes == ann["a"].episodes);
  CHECK(ann_back["b"].episodes.empty());
}

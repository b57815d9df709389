#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osda/matrix.hpp"

namespace osda::data {

enum class Activity { TyingKnots, Origami, Tangram, ShuffleCards };

const char* activity_name(Activity a);
Activity activity_from_name(const std::string& name);
std::vector<Activity> all_activities();
// Origami and Tangram run 4 tasks, the others 5.
int task_count(Activity a);

struct VideoRecord {
  std::string video_id;
  Activity activity = Activity::TyingKnots;
  int task_id = 1;  // 1-based
  std::string participant_id;
  int attempt = 1;  // 1..5
  double duration = 0.0;  // seconds

  void validate() const;
};

// Per-video feature matrix with the slow/fast channel split.
struct FeatureStream {
  std::string video_id;
  Matrix frames;  // N x (d_slow + d_fast)
  double feature_fps = 0.0;
  int d_slow = 0;
  int d_fast = 0;

  int frame_count() const { return frames.rows; }
  int d_total() const { return d_slow + d_fast; }
  void validate() const;
};

struct StruggleIntervals {
  std::string video_id;
  std::vector<std::pair<double, double>> episodes;  // (start, end) seconds

  void validate(double duration) const;
};

struct FrameLabelTrack {
  std::string video_id;
  std::vector<uint8_t> labels;  // 0/1 per feature frame

  int frame_count() const { return static_cast<int>(labels.size()); }
  int positive_count() const;
};

enum class SplitMode {
  WithinActivity,
  CombinedAll,
  LeaveOneActivityOut,
  LeaveOneTaskOut,
  AttemptFilter,
  CrossActivityZeroShot,
};

const char* split_mode_name(SplitMode m);
SplitMode split_mode_from_name(const std::string& name);

struct SplitSpec {
  SplitMode mode = SplitMode::CombinedAll;
  // Selectors; which ones apply depends on mode.
  std::string activity;        // WithinActivity / LeaveOneActivityOut / LeaveOneTaskOut / AttemptFilter
  std::string eval_activity;   // CrossActivityZeroShot target
  int task_id = 0;             // LeaveOneTaskOut held-out task
  std::vector<int> train_attempts;  // AttemptFilter
  std::vector<int> eval_attempts;   // AttemptFilter
  bool participant_disjoint = true;
};

}  // namespace osda::data

#include "osda/data/types.hpp"

#include <stdexcept>

namespace osda::data {

const char* activity_name(Activity a) {
  switch (a) {
    case Activity::TyingKnots: return "TyingKnots";
    case Activity::Origami: return "Origami";
    case Activity::Tangram: return "Tangram";
    case Activity::ShuffleCards: return "ShuffleCards";
  }
  throw std::logic_error("activity_name: bad enum");
}

Activity activity_from_name(const std::string& name) {
  if (name == "TyingKnots") return Activity::TyingKnots;
  if (name == "Origami") return Activity::Origami;
  if (name == "Tangram") return Activity::Tangram;
  if (name == "ShuffleCards") return Activity::ShuffleCards;
  throw std::invalid_argument("unknown activity '" + name + "'");
}

std::vector<Activity> all_activities() {
  return {Activity::TyingKnots, Activity::Origami, Activity::Tangram, Activity::ShuffleCards};
}

int task_count(Activity a) {
  return (a == Activity::Origami || a == Activity::Tangram) ? 4 : 5;
}

void VideoRecord::validate() const {
  if (video_id.empty()) throw std::invalid_argument("VideoRecord: empty video_id");
  if (attempt < 1 || attempt > 5) throw std::invalid_argument("VideoRecord: attempt out of [1,5]: " + video_id);
  if (duration <= 0.0) throw std::invalid_argument("VideoRecord: non-positive duration: " + video_id);
  if (task_id < 1 || task_id > task_count(activity))
    throw std::invalid_argument("VideoRecord: task_id invalid for activity: " + video_id);
}

void FeatureStream::validate() const {
  if (d_slow < 0 || d_fast < 0 || d_slow + d_fast != frames.cols)
    throw std::invalid_argument("FeatureStream: d_slow + d_fast != columns");
  if (feature_fps <= 0.0) throw std::invalid_argument("FeatureStream: feature_fps must be positive");
  if (!frames.all_finite()) throw std::invalid_argument("FeatureStream: non-finite feature value");
}

void StruggleIntervals::validate(double duration) const {
  for (const auto& [s, e] : episodes) {
    if (!(0.0 <= s && s < e)) throw std::invalid_argument("StruggleIntervals: need 0 <= start < end: " + video_id);
    if (e > duration) throw std::invalid_argument("StruggleIntervals: episode past video end: " + video_id);
  }
}

int FrameLabelTrack::positive_count() const {
  int n = 0;
  for (uint8_t v : labels) n += v ? 1 : 0;
  return n;
}

const char* split_mode_name(SplitMode m) {
  switch (m) {
    case SplitMode::WithinActivity: return "WithinActivity";
    case SplitMode::CombinedAll: return "CombinedAll";
    case SplitMode::LeaveOneActivityOut: return "LeaveOneActivityOut";
    case SplitMode::LeaveOneTaskOut: return "LeaveOneTaskOut";
    case SplitMode::AttemptFilter: return "AttemptFilter";
    case SplitMode::CrossActivityZeroShot: return "CrossActivityZeroShot";
  }
  throw std::logic_error("split_mode_name: bad enum");
}

SplitMode split_mode_from_name(const std::string& name) {
  if (name == "WithinActivity") return SplitMode::WithinActivity;
  if (name == "CombinedAll") return SplitMode::CombinedAll;
  if (name == "LeaveOneActivityOut") return SplitMode::LeaveOneActivityOut;
  if (name == "LeaveOneTaskOut") return SplitMode::LeaveOneTaskOut;
  if (name == "AttemptFilter") return SplitMode::AttemptFilter;
  if (name == "CrossActivityZeroShot") return SplitMode::CrossActivityZeroShot;
  throw std::invalid_argument("unknown split mode '" + name + "'");
}

}  // namespace osda::data

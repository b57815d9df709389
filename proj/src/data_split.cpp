#include "osda/data/split.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace osda::data {

namespace {

std::set<std::string> val_participants(const std::vector<VideoRecord>& records) {
  std::set<std::string> all;
  for (const auto& r : records) all.insert(r.participant_id);
  std::vector<std::string> sorted(all.begin(), all.end());
  std::set<std::string> val;
  for (size_t i = 0; i < sorted.size(); ++i)
    if (i % 3 == 2) val.insert(sorted[i]);
  // small pools: keep the last participant for validation
  if (val.empty() && sorted.size() >= 2) val.insert(sorted.back());
  return val;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void assert_disjoint_nonempty(const Split& s, const SplitSpec& spec) {
  if (s.train.empty() || s.val.empty())
    throw std::runtime_error(std::string("build_split: empty ") + (s.train.empty() ? "train" : "val") +
                             " set for mode " + split_mode_name(spec.mode));
  std::set<std::string> train_ids;
  for (const auto& r : s.train) train_ids.insert(r.video_id);
  for (const auto& r : s.val)
    if (train_ids.count(r.video_id))
      throw std::runtime_error("build_split: train/val overlap on " + r.video_id);
  if (spec.participant_disjoint && spec.mode != SplitMode::LeaveOneActivityOut &&
      spec.mode != SplitMode::LeaveOneTaskOut) {
    std::set<std::string> train_p;
    for (const auto& r : s.train) train_p.insert(r.participant_id);
    for (const auto& r : s.val)
      if (train_p.count(r.participant_id))
        throw std::runtime_error("build_split: participant overlap on " + r.participant_id);
  }
}

}  // namespace

Split build_split(const std::vector<VideoRecord>& manifest, const SplitSpec& spec) {
  if (manifest.empty()) throw std::invalid_argument("build_split: empty manifest");
  Split out;

  switch (spec.mode) {
    case SplitMode::WithinActivity: {
      Activity act = activity_from_name(spec.activity);
      std::vector<VideoRecord> pool;
      for (const auto& r : manifest)
        if (r.activity == act) pool.push_back(r);
      auto vp = val_participants(pool);
      for (const auto& r : pool) (vp.count(r.participant_id) ? out.val : out.train).push_back(r);
      break;
    }
    case SplitMode::CombinedAll: {
      auto vp = val_participants(manifest);
      for (const auto& r : manifest) (vp.count(r.participant_id) ? out.val : out.train).push_back(r);
      break;
    }
    case SplitMode::LeaveOneActivityOut: {
      Activity held = activity_from_name(spec.activity);
      for (const auto& r : manifest) (r.activity == held ? out.val : out.train).push_back(r);
      break;
    }
    case SplitMode::LeaveOneTaskOut: {
      Activity act = activity_from_name(spec.activity);
      if (spec.task_id < 1) throw std::invalid_argument("build_split: LeaveOneTaskOut needs task_id");
      for (const auto& r : manifest) {
        if (r.activity != act) continue;
        (r.task_id == spec.task_id ? out.val : out.train).push_back(r);
      }
      break;
    }
    case SplitMode::AttemptFilter: {
      if (spec.train_attempts.empty() || spec.eval_attempts.empty())
        throw std::invalid_argument("build_split: AttemptFilter needs train_attempts and eval_attempts");
      std::vector<VideoRecord> pool;
      for (const auto& r : manifest) {
        if (!spec.activity.empty() && r.activity != activity_from_name(spec.activity)) continue;
        if (spec.task_id >= 1 && r.task_id != spec.task_id) continue;
        pool.push_back(r);
      }
      auto vp = val_participants(pool);
      for (const auto& r : pool) {
        if (vp.count(r.participant_id)) {
          if (contains(spec.eval_attempts, r.attempt)) out.val.push_back(r);
        } else if (contains(spec.train_attempts, r.attempt)) {
          out.train.push_back(r);
        }
      }
      break;
    }
    case SplitMode::CrossActivityZeroShot: {
      Activity train_act = activity_from_name(spec.activity);
      Activity eval_act = activity_from_name(spec.eval_activity);
      auto vp = val_participants(manifest);
      for (const auto& r : manifest) {
        if (r.activity == train_act && !vp.count(r.participant_id)) out.train.push_back(r);
        if (r.activity == eval_act && vp.count(r.participant_id)) out.val.push_back(r);
      }
      break;
    }
  }

  assert_disjoint_nonempty(out, spec);
  return out;
}

SplitSpec split_spec_from_json(const std::string& text) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(text);
  SplitSpec s;
  s.mode = split_mode_from_name(j.at("mode").get<std::string>());
  s.activity = j.value("activity", s.activity);
  s.eval_activity = j.value("eval_activity", s.eval_activity);
  s.task_id = j.value("task_id", s.task_id);
  if (j.contains("train_attempts")) s.train_attempts = j.at("train_attempts").get<std::vector<int>>();
  if (j.contains("eval_attempts")) s.eval_attempts = j.at("eval_attempts").get<std::vector<int>>();
  s.participant_disjoint = j.value("participant_disjoint", s.participant_disjoint);
  return s;
}

std::string split_spec_to_json(const SplitSpec& s) {
  nlohmann::ordered_json j;
  j["mode"] = split_mode_name(s.mode);
  j["activity"] = s.activity;
  j["eval_activity"] = s.eval_activity;
  j["task_id"] = s.task_id;
  j["train_attempts"] = s.train_attempts;
  j["eval_attempts"] = s.eval_attempts;
  j["participant_disjoint"] = s.participant_disjoint;
  return j.dump(2) + "\n";
}

}  // namespace osda::data

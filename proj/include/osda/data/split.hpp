#pragma once

#include <vector>

#include "osda/data/types.hpp"

namespace osda::data {

struct Split {
  std::vector<VideoRecord> train;
  std::vector<VideoRecord> val;
};

// Builds train/val sets per spec.mode and asserts train/val disjointness by
// video_id. Where a mode needs a participant holdout (WithinActivity,
// CombinedAll, AttemptFilter, CrossActivityZeroShot), participants are sorted
// and every third one (index % 3 == 2) goes to validation.
Split build_split(const std::vector<VideoRecord>& manifest, const SplitSpec& spec);

SplitSpec split_spec_from_json(const std::string& text);
std::string split_spec_to_json(const SplitSpec& spec);

}  // namespace osda::data

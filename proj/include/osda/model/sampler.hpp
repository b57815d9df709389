#pragma once

#include <vector>

#include "osda/data/types.hpp"
#include "osda/model/network.hpp"

namespace osda::model {

struct TrainingSample {
  WindowInput input;
  int short_start = 0;              // frame index of the first short-term row
  std::vector<int> labels;          // short_len + anticipation_len
  std::vector<uint8_t> valid;       // in-range frames only
  std::vector<int> future_labels;   // near_future_len (CMeRT), frame short_start + r
  std::vector<uint8_t> future_valid;
};

// Window whose short-term memory ends at frame t (inclusive). History before
// frame 0 is padded with copies of frame 0 and marked invalid. Long memory
// takes every long_sample_rate-th frame, anchored so its newest slot is the
// frame directly preceding the near-past span.
WindowInput assemble_window(const Matrix& frames, const ModelConfig& config, int t);

// Non-overlapping windows of stride short_len starting at a seeded random
// offset in [0, short_len); a stream shorter than one window yields a single
// padded window. Anticipation/future labels beyond stream end are invalid.
std::vector<TrainingSample> sample_training_windows(const data::FeatureStream& stream,
                                                    const data::FrameLabelTrack& labels, const ModelConfig& config,
                                                    uint64_t seed);

// Deterministic offset-0 tiling used for validation scoring.
std::vector<TrainingSample> tile_windows(const data::FeatureStream& stream, const data::FrameLabelTrack& labels,
                                         const ModelConfig& config);

}  // namespace osda::model

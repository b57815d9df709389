#pragma once

#include <string>
#include <vector>

#include "osda/data/types.hpp"

namespace osda::data {

// Frame k is positive iff round(s*fps) <= k <= round(e*fps) for some episode
// (closed interval, round half away from zero); indices clamped to [0, N-1].
// Episodes whose rounded end falls past the track are clamped and noted in
// *warnings when provided. N == 0 throws.
FrameLabelTrack intervals_to_frame_labels(const StruggleIntervals& intervals, double feature_fps, int n_frames,
                                          std::vector<std::string>* warnings = nullptr);

int round_half_away(double x);

}  // namespace osda::data

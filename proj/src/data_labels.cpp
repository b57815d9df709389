#include "osda/data/labels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace osda::data {

int round_half_away(double x) { return static_cast<int>(std::round(x)); }

FrameLabelTrack intervals_to_frame_labels(const StruggleIntervals& intervals, double feature_fps, int n_frames,
                                          std::vector<std::string>* warnings) {
  if (n_frames <= 0) throw std::invalid_argument("intervals_to_frame_labels: N must be >= 1");
  if (feature_fps <= 0.0) throw std::invalid_argument("intervals_to_frame_labels: fps must be positive");
  FrameLabelTrack track;
  track.video_id = intervals.video_id;
  track.labels.assign(static_cast<size_t>(n_frames), 0);
  for (const auto& [s, e] : intervals.episodes) {
    if (!(0.0 <= s && s < e)) throw std::invalid_argument("intervals_to_frame_labels: bad episode");
    int first = round_half_away(s * feature_fps);
    int last = round_half_away(e * feature_fps);
    if ((first > n_frames - 1 || last > n_frames - 1) && warnings) {
      warnings->push_back(track.video_id + ": episode [" + std::to_string(s) + ", " + std::to_string(e) +
                          "] extends past frame " + std::to_string(n_frames - 1) + ", clamped");
    }
    first = std::clamp(first, 0, n_frames - 1);
    last = std::clamp(last, 0, n_frames - 1);
    for (int k = first; k <= last; ++k) track.labels[k] = 1;
  }
  return track;
}

}  // namespace osda::data

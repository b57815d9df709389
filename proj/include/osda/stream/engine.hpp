#pragma once

#include <span>
#include <string>
#include <vector>

#include "osda/data/types.hpp"
#include "osda/model/checkpoint.hpp"
#include "osda/model/network.hpp"

namespace osda::stream {

struct PredictionFrame {
  long t = 0;
  double detection_prob = 0.0;
  std::vector<double> anticipation_probs;  // offsets 1..delta
  double latency_ms = 0.0;
};

struct PredictionTrack {
  std::string video_id;
  double fps = 0.0;
  std::vector<PredictionFrame> frames;
};

// One-frame-at-a-time causal inference. Keeps a fixed-capacity ring of raw
// feature frames (long + near-past + short span); positions before stream
// start are padded with the first frame and masked. The engine never sees a
// frame with index greater than the current one.
class StreamEngine {
 public:
  StreamEngine(const model::ModelConfig& config, const nn::ParamStore& params);

  PredictionFrame step(std::span<const double> frame);
  void reset();

  long current_frame() const { return t_; }
  const model::ModelConfig& config() const { return config_; }

 private:
  model::WindowInput assemble() const;
  const double* ring_row(long idx) const;

  model::ModelConfig config_;
  const nn::ParamStore* params_;
  int capacity_;
  std::vector<double> ring_;        // capacity x d_total
  std::vector<double> first_frame_; // padding source
  long t_ = -1;
};

// Full-stream convenience: one PredictionFrame per input frame, in order.
PredictionTrack run_stream(const model::ModelConfig& config, const nn::ParamStore& params,
                           const data::FeatureStream& stream);

// track file: comment header with video_id/fps/delta, then one row per frame:
// t, detection_prob, anticipation probs..., latency_ms (tab separated).
void write_prediction_track(const PredictionTrack& track, int delta, const std::string& path);
PredictionTrack read_prediction_track(const std::string& path);

}  // namespace osda::stream

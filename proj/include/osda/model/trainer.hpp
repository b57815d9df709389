#pragma once

#include <optional>
#include <string>
#include <vector>

#include "osda/data/types.hpp"
#include "osda/model/config.hpp"
#include "osda/model/network.hpp"
#include "osda/model/sampler.hpp"

namespace osda::model {

struct LabeledStream {
  data::FeatureStream stream;
  data::FrameLabelTrack labels;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_detection_cap;
};

struct TrainResult {
  nn::ParamStore params;
  std::vector<EpochLog> log;
};

// Builds the combined training loss of one sample on the tape:
// final-head cross-entropy, plus the weighted initial-head and near-future
// terms for CMeRT. Returns -1 when the sample has no valid positions.
int build_training_loss(nn::Tape& tape, const ForwardIds& ids, const TrainingSample& sample,
                        const ModelConfig& config, const TrainConfig& tc, bool train_mode);

// Adam with decoupled weight decay, per-epoch linear warmup + cosine decay,
// non-overlapping windows re-sampled each epoch at a fresh random offset.
// Deterministic for a fixed seed regardless of `threads` (per-item gradient
// buffers are reduced in item order). Throws on non-finite loss.
TrainResult train_model(const ModelConfig& config, const TrainConfig& tc,
                        const std::vector<LabeledStream>& train_set, const std::vector<LabeledStream>& val_set,
                        int threads = 0);

// Detection cAP of offset-0 tiled windows (the cheap per-epoch validation
// score; final protocol evaluation streams instead).
double windowed_detection_cap(const ModelConfig& config, const nn::ParamStore& params,
                              const std::vector<LabeledStream>& videos, int threads = 0);

void write_train_log(const std::vector<EpochLog>& log, const std::string& path);

int resolve_threads(int requested);  // 0 -> OSDA_TRAIN_THREADS or 2

}  // namespace osda::model

#pragma once

#include <optional>
#include <vector>

#include "osda/model/config.hpp"
#include "osda/nn/attention.hpp"
#include "osda/nn/graph.hpp"
#include "osda/nn/params.hpp"

namespace osda::model {

// Raw-feature window presented to a forward pass. Padded positions hold
// copies of the stream's first frame and are marked invalid; invalid rows are
// masked out of attention (except each row's own diagonal slot).
struct WindowInput {
  Matrix long_mem;  // long_slots x d_total, already subsampled
  std::vector<uint8_t> long_valid;
  Matrix short_mem;  // short_len x d_total
  std::vector<uint8_t> short_valid;
  Matrix near_past;  // near_past_len x d_total (0 rows for LSTR)
  std::vector<uint8_t> near_past_valid;
};

// Builds theta for a variant; parameter set depends on the config (no
// anticipation tensors when anticipation_len == 0, no future/refinement
// tensors for LSTR).
nn::ParamStore build_params(const ModelConfig& config, uint64_t seed);

// Tape node ids of the heads produced by one forward pass.
struct ForwardIds {
  int frame_logits = -1;    // (short_len + anticipation_len) x 2; LSTR final head, CMeRT initial head
  int refined_logits = -1;  // CMeRT final head
  int future_logits = -1;   // CMeRT, train mode only
  int final_logits() const { return refined_logits >= 0 ? refined_logits : frame_logits; }
};

// Output row ordering: oldest short-term frame ... current frame, then
// anticipation offsets 1..delta.
struct ModelOutput {
  Matrix frame_logits;
  std::optional<Matrix> refined_logits;
  std::optional<Matrix> near_future_logits;
  const Matrix& final_logits() const { return refined_logits ? *refined_logits : frame_logits; }
};

ForwardIds model_forward(nn::Tape& tape, const ModelConfig& config, const WindowInput& input, bool train_mode,
                         RandomStream* rng);

ModelOutput run_model(const ModelConfig& config, const nn::ParamStore& params, const WindowInput& input,
                      bool train_mode = false, RandomStream* rng = nullptr);

// Long-memory compressor exposed on its own (it is also a stage of both
// forwards): enc_layers of latent queries attending to the fused long tokens;
// with zero valid tokens cross-attention is skipped entirely.
int compress_long_memory(nn::Tape& tape, const ModelConfig& config, int fused_long_tokens,
                         const std::vector<uint8_t>& long_valid, bool train_mode, RandomStream* rng);

int fusion_head(nn::Tape& tape, int raw_features);  // concat split + affine to d_model

// Closed-form counts for the profiler.
size_t analytic_param_count(const ModelConfig& config);
size_t analytic_madds_per_step(const ModelConfig& config);

}  // namespace osda::model

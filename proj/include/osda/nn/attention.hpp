#pragma once

#include <string>

#include "osda/nn/graph.hpp"
#include "osda/nn/params.hpp"

namespace osda::nn {

struct DecoderLayerSpec {
  int d_model = 32;
  int heads = 4;
  int ff_dim = 64;
  double dropout_rate = 0.0;
};

// Parameter indices into a ParamStore for one attention block.
struct AttentionParams {
  int wq = -1, wk = -1, wv = -1, wo = -1;
  int bq = -1, bk = -1, bv = -1, bo = -1;
};

struct DecoderLayerParams {
  AttentionParams self_attn;
  AttentionParams cross_attn;  // unused when the layer never cross-attends
  int ln1_g = -1, ln1_b = -1;
  int ln2_g = -1, ln2_b = -1;
  int ln3_g = -1, ln3_b = -1;
  int ff_w1 = -1, ff_b1 = -1, ff_w2 = -1, ff_b2 = -1;
  bool has_cross = false;
};

AttentionParams add_attention_params(ParamStore& store, const std::string& prefix, int d_model, RandomStream& rng);
DecoderLayerParams add_decoder_layer_params(ParamStore& store, const std::string& prefix,
                                            const DecoderLayerSpec& spec, bool with_cross, RandomStream& rng);

// Scaled dot-product attention with heads split along the model dimension.
// query/key/value are tape node ids of (len x d_model) matrices.
int multi_head_attention(Tape& t, int query, int key, int value, const AttentionMask& mask,
                         const AttentionParams& p, int heads);

// Pre-norm decoder layer: self-attention, optional cross-attention to
// memory_seq, position-wise feed-forward; residual around each sub-block,
// dropout on each sub-block output in train mode. Pass memory_seq = -1 or
// cross_mask = nullptr to disable cross-attention (the layer degenerates to
// self-attention + FFN). A cross_mask with zero allowed keys overall also
// disables it (cold-start contract for fully padded memories).
int transformer_decoder_layer(Tape& t, int query_seq, int memory_seq, const AttentionMask& self_mask,
                              const AttentionMask* cross_mask, const DecoderLayerSpec& spec,
                              const DecoderLayerParams& p, bool train_mode, RandomStream* rng);

bool mask_has_any_key(const AttentionMask& m);

}  // namespace osda::nn

#include "osda/nn/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace osda::nn {

AttentionParams add_attention_params(ParamStore& store, const std::string& prefix, int d_model, RandomStream& rng) {
  AttentionParams p;
  p.wq = store.add_uniform(prefix + ".wq", d_model, d_model, d_model, rng);
  p.wk = store.add_uniform(prefix + ".wk", d_model, d_model, d_model, rng);
  p.wv = store.add_uniform(prefix + ".wv", d_model, d_model, d_model, rng);
  p.wo = store.add_uniform(prefix + ".wo", d_model, d_model, d_model, rng);
  p.bq = store.add_uniform(prefix + ".bq", 1, d_model, d_model, rng);
  p.bk = store.add_uniform(prefix + ".bk", 1, d_model, d_model, rng);
  p.bv = store.add_uniform(prefix + ".bv", 1, d_model, d_model, rng);
  p.bo = store.add_uniform(prefix + ".bo", 1, d_model, d_model, rng);
  return p;
}

DecoderLayerParams add_decoder_layer_params(ParamStore& store, const std::string& prefix,
                                            const DecoderLayerSpec& spec, bool with_cross, RandomStream& rng) {
  if (spec.d_model % spec.heads != 0) throw std::invalid_argument("decoder layer: d_model not divisible by heads");
  DecoderLayerParams p;
  p.self_attn = add_attention_params(store, prefix + ".self", spec.d_model, rng);
  if (with_cross) p.cross_attn = add_attention_params(store, prefix + ".cross", spec.d_model, rng);
  p.has_cross = with_cross;
  p.ln1_g = store.add(prefix + ".ln1.g", Matrix::filled(1, spec.d_model, 1.0));
  p.ln1_b = store.add(prefix + ".ln1.b", Matrix(1, spec.d_model));
  if (with_cross) {
    p.ln2_g = store.add(prefix + ".ln2.g", Matrix::filled(1, spec.d_model, 1.0));
    p.ln2_b = store.add(prefix + ".ln2.b", Matrix(1, spec.d_model));
  }
  p.ln3_g = store.add(prefix + ".ln3.g", Matrix::filled(1, spec.d_model, 1.0));
  p.ln3_b = store.add(prefix + ".ln3.b", Matrix(1, spec.d_model));
  p.ff_w1 = store.add_uniform(prefix + ".ff.w1", spec.d_model, spec.ff_dim, spec.d_model, rng);
  p.ff_b1 = store.add_uniform(prefix + ".ff.b1", 1, spec.ff_dim, spec.d_model, rng);
  p.ff_w2 = store.add_uniform(prefix + ".ff.w2", spec.ff_dim, spec.d_model, spec.ff_dim, rng);
  p.ff_b2 = store.add_uniform(prefix + ".ff.b2", 1, spec.d_model, spec.ff_dim, rng);
  return p;
}

bool mask_has_any_key(const AttentionMask& m) {
  for (uint8_t v : m.allowed)
    if (v) return true;
  return false;
}

int multi_head_attention(Tape& t, int query, int key, int value, const AttentionMask& mask,
                         const AttentionParams& p, int heads) {
  const Matrix& qv = t.value(query);
  const Matrix& kv = t.value(key);
  const Matrix& vv = t.value(value);
  const int d_model = qv.cols;
  if (kv.cols != d_model || vv.cols != d_model) throw std::invalid_argument("attention: model width mismatch");
  if (kv.rows != vv.rows) throw std::invalid_argument("attention: key/value row mismatch");
  if (mask.query_len != qv.rows || mask.key_len != kv.rows)
    throw std::invalid_argument("attention: mask shape mismatch");
  if (d_model % heads != 0) throw std::invalid_argument("attention: d_model not divisible by heads");
  const int dh = d_model / heads;

  int q_proj = t.add_row_broadcast(t.matmul(query, t.param(p.wq)), t.param(p.bq));
  int k_proj = t.add_row_broadcast(t.matmul(key, t.param(p.wk)), t.param(p.bk));
  int v_proj = t.add_row_broadcast(t.matmul(value, t.param(p.wv)), t.param(p.bv));

  std::vector<int> head_ctx;
  head_ctx.reserve(heads);
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < heads; ++h) {
    int qh = t.slice_cols(q_proj, h * dh, dh);
    int kh = t.slice_cols(k_proj, h * dh, dh);
    int vh = t.slice_cols(v_proj, h * dh, dh);
    int scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt_dh);
    int probs = t.softmax_rows_masked(scores, mask);
    head_ctx.push_back(t.matmul(probs, vh));
  }
  int ctx = heads == 1 ? head_ctx[0] : t.concat_cols(head_ctx);
  return t.add_row_broadcast(t.matmul(ctx, t.param(p.wo)), t.param(p.bo));
}

int transformer_decoder_layer(Tape& t, int query_seq, int memory_seq, const AttentionMask& self_mask,
                              const AttentionMask* cross_mask, const DecoderLayerSpec& spec,
                              const DecoderLayerParams& p, bool train_mode, RandomStream* rng) {
  auto drop = [&](int x) {
    if (!train_mode || spec.dropout_rate <= 0.0) return x;
    if (!rng) throw std::logic_error("decoder layer: train mode requires an RNG");
    return t.dropout(x, spec.dropout_rate, *rng, true);
  };

  int x = query_seq;
  {
    int normed = t.layer_norm(x, t.param(p.ln1_g), t.param(p.ln1_b));
    int attn = multi_head_attention(t, normed, normed, normed, self_mask, p.self_attn, spec.heads);
    x = t.add(x, drop(attn));
  }
  const bool cross_active = p.has_cross && memory_seq >= 0 && cross_mask != nullptr && mask_has_any_key(*cross_mask);
  if (cross_active) {
    int normed = t.layer_norm(x, t.param(p.ln2_g), t.param(p.ln2_b));
    int attn = multi_head_attention(t, normed, memory_seq, memory_seq, *cross_mask, p.cross_attn, spec.heads);
    x = t.add(x, drop(attn));
  }
  {
    int normed = t.layer_norm(x, t.param(p.ln3_g), t.param(p.ln3_b));
    int h = t.gelu(t.add_row_broadcast(t.matmul(normed, t.param(p.ff_w1)), t.param(p.ff_b1)));
    int ff = t.add_row_broadcast(t.matmul(h, t.param(p.ff_w2)), t.param(p.ff_b2));
    x = t.add(x, drop(ff));
  }
  return x;
}

}  // namespace osda::nn

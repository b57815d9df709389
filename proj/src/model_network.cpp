#include "osda/model/network.hpp"

#include <stdexcept>
#include <string>

namespace osda::model {

using nn::AttentionMask;
using nn::AttentionParams;
using nn::DecoderLayerParams;
using nn::DecoderLayerSpec;
using nn::ParamStore;
using nn::Tape;

namespace {

DecoderLayerSpec layer_spec(const ModelConfig& c) {
  return DecoderLayerSpec{c.d_model, c.heads, c.ff_dim, c.dropout};
}

AttentionParams resolve_attention(const ParamStore& s, const std::string& prefix) {
  AttentionParams p;
  p.wq = s.index_of(prefix + ".wq");
  p.wk = s.index_of(prefix + ".wk");
  p.wv = s.index_of(prefix + ".wv");
  p.wo = s.index_of(prefix + ".wo");
  p.bq = s.index_of(prefix + ".bq");
  p.bk = s.index_of(prefix + ".bk");
  p.bv = s.index_of(prefix + ".bv");
  p.bo = s.index_of(prefix + ".bo");
  return p;
}

DecoderLayerParams resolve_layer(const ParamStore& s, const std::string& prefix) {
  DecoderLayerParams p;
  p.self_attn = resolve_attention(s, prefix + ".self");
  p.cross_attn = resolve_attention(s, prefix + ".cross");
  p.has_cross = true;
  p.ln1_g = s.index_of(prefix + ".ln1.g");
  p.ln1_b = s.index_of(prefix + ".ln1.b");
  p.ln2_g = s.index_of(prefix + ".ln2.g");
  p.ln2_b = s.index_of(prefix + ".ln2.b");
  p.ln3_g = s.index_of(prefix + ".ln3.g");
  p.ln3_b = s.index_of(prefix + ".ln3.b");
  p.ff_w1 = s.index_of(prefix + ".ff.w1");
  p.ff_b1 = s.index_of(prefix + ".ff.b1");
  p.ff_w2 = s.index_of(prefix + ".ff.w2");
  p.ff_b2 = s.index_of(prefix + ".ff.b2");
  return p;
}

// causal triangle, padded keys hidden except each row's own slot
AttentionMask causal_valid_mask(const std::vector<uint8_t>& key_valid) {
  const int n = static_cast<int>(key_valid.size());
  AttentionMask m(n, n, false);
  for (int q = 0; q < n; ++q)
    for (int k = 0; k <= q; ++k)
      if (key_valid[k] || k == q) m.set(q, k, true);
  return m;
}

AttentionMask cross_valid_mask(int query_len, const std::vector<uint8_t>& key_valid) {
  const int klen = static_cast<int>(key_valid.size());
  AttentionMask m(query_len, klen, false);
  for (int q = 0; q < query_len; ++q)
    for (int k = 0; k < klen; ++k)
      if (key_valid[k]) m.set(q, k, true);
  return m;
}

int classifier(Tape& t, int features) {
  return t.add_row_broadcast(t.matmul(features, t.param("cls.w")), t.param("cls.b"));
}

void check_window(const ModelConfig& c, const WindowInput& in) {
  require_shape(in.long_mem, c.long_slots(), c.d_total(), "WindowInput.long_mem");
  require_shape(in.short_mem, c.short_len, c.d_total(), "WindowInput.short_mem");
  const int p = c.query_prefix();
  require_shape(in.near_past, p, c.d_total(), "WindowInput.near_past");
  if (static_cast<int>(in.long_valid.size()) != c.long_slots() ||
      static_cast<int>(in.short_valid.size()) != c.short_len ||
      static_cast<int>(in.near_past_valid.size()) != p)
    throw std::invalid_argument("WindowInput: validity mask lengths disagree with config");
}

}  // namespace

nn::ParamStore build_params(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ParamStore store;
  RandomStream rng(seed);
  const int d = config.d_model;
  const DecoderLayerSpec spec = layer_spec(config);

  store.add_uniform("fusion.w", config.d_total(), d, config.d_total(), rng);
  store.add_uniform("fusion.b", 1, d, config.d_total(), rng);
  store.add_uniform("pos.long", config.long_slots(), d, d, rng);
  store.add_uniform("latent.query", config.n_latent, d, d, rng);
  for (int i = 0; i < config.enc_layers; ++i)
    nn::add_decoder_layer_params(store, "enc" + std::to_string(i), spec, true, rng);
  store.add("enc.out_ln.g", Matrix::filled(1, d, 1.0));
  store.add("enc.out_ln.b", Matrix(1, d));

  store.add_uniform("pos.query", config.query_len(), d, d, rng);
  if (config.anticipation_len > 0) {
    store.add_uniform("ant.shared", 1, d, d, rng);
    store.add_uniform("ant.offset", config.anticipation_len, d, d, rng);
  }
  for (int i = 0; i < config.dec_layers; ++i)
    nn::add_decoder_layer_params(store, "dec" + std::to_string(i), spec, true, rng);
  store.add("dec.out_ln.g", Matrix::filled(1, d, 1.0));
  store.add("dec.out_ln.b", Matrix(1, d));

  if (config.variant == Variant::CMERT) {
    store.add_uniform("fut.query", config.near_future_len, d, d, rng);
    nn::add_decoder_layer_params(store, "fut0", spec, true, rng);
    store.add("fut.out_ln.g", Matrix::filled(1, d, 1.0));
    store.add("fut.out_ln.b", Matrix(1, d));
    for (int i = 0; i < config.dec_layers; ++i)
      nn::add_decoder_layer_params(store, "ref" + std::to_string(i), spec, true, rng);
    store.add("ref.out_ln.g", Matrix::filled(1, d, 1.0));
    store.add("ref.out_ln.b", Matrix(1, d));
  }

  store.add_uniform("cls.w", d, 2, d, rng);
  store.add_uniform("cls.b", 1, 2, d, rng);
  return store;
}

int fusion_head(Tape& t, int raw_features) {
  return t.add_row_broadcast(t.matmul(raw_features, t.param("fusion.w")), t.param("fusion.b"));
}

int compress_long_memory(Tape& t, const ModelConfig& config, int fused_long_tokens,
                         const std::vector<uint8_t>& long_valid, bool train_mode, RandomStream* rng) {
  const ParamStore& s = *t.store();
  const DecoderLayerSpec spec = layer_spec(config);
  int tokens = t.add(fused_long_tokens, t.param("pos.long"));
  int x = t.param("latent.query");
  AttentionMask self_mask = AttentionMask::full(config.n_latent, config.n_latent);
  AttentionMask cross_mask = cross_valid_mask(config.n_latent, long_valid);
  for (int i = 0; i < config.enc_layers; ++i) {
    auto lp = resolve_layer(s, "enc" + std::to_string(i));
    x = nn::transformer_decoder_layer(t, x, tokens, self_mask, &cross_mask, spec, lp, train_mode, rng);
  }
  return t.layer_norm(x, t.param("enc.out_ln.g"), t.param("enc.out_ln.b"));
}

ForwardIds model_forward(Tape& t, const ModelConfig& config, const WindowInput& input, bool train_mode,
                         RandomStream* rng) {
  config.validate();
  check_window(config, input);
  if (train_mode && config.dropout > 0.0 && rng == nullptr)
    throw std::invalid_argument("model_forward: train mode with dropout needs an RNG");
  const ParamStore& s = *t.store();
  const DecoderLayerSpec spec = layer_spec(config);
  const int m = config.short_len;
  const int delta = config.anticipation_len;
  const int p = config.query_prefix();

  int fused_long = fusion_head(t, t.input(input.long_mem));
  int memory = compress_long_memory(t, config, fused_long, input.long_valid, train_mode, rng);

  int fused_short = fusion_head(t, t.input(input.short_mem));
  std::vector<int> query_parts;
  if (p > 0) query_parts.push_back(fusion_head(t, t.input(input.near_past)));
  query_parts.push_back(fused_short);
  int ant_tokens = -1;
  if (delta > 0) {
    ant_tokens = t.add_row_broadcast(t.param("ant.offset"), t.param("ant.shared"));
    query_parts.push_back(ant_tokens);
  }
  int query = query_parts.size() == 1 ? query_parts[0] : t.concat_rows(query_parts);
  query = t.add(query, t.param("pos.query"));

  std::vector<uint8_t> query_valid;
  query_valid.insert(query_valid.end(), input.near_past_valid.begin(), input.near_past_valid.end());
  query_valid.insert(query_valid.end(), input.short_valid.begin(), input.short_valid.end());
  query_valid.insert(query_valid.end(), static_cast<size_t>(delta), 1);
  AttentionMask self_mask = causal_valid_mask(query_valid);
  AttentionMask cross_mask = AttentionMask::full(config.query_len(), config.n_latent);

  int x = query;
  for (int i = 0; i < config.dec_layers; ++i) {
    auto lp = resolve_layer(s, "dec" + std::to_string(i));
    x = nn::transformer_decoder_layer(t, x, memory, self_mask, &cross_mask, spec, lp, train_mode, rng);
  }
  x = t.layer_norm(x, t.param("dec.out_ln.g"), t.param("dec.out_ln.b"));

  ForwardIds out;
  if (config.variant == Variant::LSTR) {
    out.frame_logits = classifier(t, x);
    return out;
  }

  // CMeRT: near-past rows are dropped so the initial prediction covers m+delta
  int initial_feats = p > 0 ? t.slice_rows(x, p, m + delta) : x;
  out.frame_logits = classifier(t, initial_feats);

  // near-future features from compressed memory; classified only in training
  int fq = t.param("fut.query");
  AttentionMask fut_self = AttentionMask::full(config.near_future_len, config.near_future_len);
  AttentionMask fut_cross = AttentionMask::full(config.near_future_len, config.n_latent);
  int fut = nn::transformer_decoder_layer(t, fq, memory, fut_self, &fut_cross, spec,
                                          resolve_layer(s, "fut0"), train_mode, rng);
  fut = t.layer_norm(fut, t.param("fut.out_ln.g"), t.param("fut.out_ln.b"));
  if (train_mode) out.future_logits = classifier(t, fut);

  // refinement: initial features query the concatenated context
  std::vector<int> kv_parts{memory, fut, fused_short};
  std::vector<uint8_t> kv_valid(static_cast<size_t>(config.n_latent + config.near_future_len), 1);
  kv_valid.insert(kv_valid.end(), input.short_valid.begin(), input.short_valid.end());
  if (delta > 0) {
    kv_parts.push_back(ant_tokens);
    kv_valid.insert(kv_valid.end(), static_cast<size_t>(delta), 1);
  }
  int kv = t.concat_rows(kv_parts);

  std::vector<uint8_t> ref_query_valid;
  ref_query_valid.insert(ref_query_valid.end(), input.short_valid.begin(), input.short_valid.end());
  ref_query_valid.insert(ref_query_valid.end(), static_cast<size_t>(delta), 1);
  AttentionMask ref_self = causal_valid_mask(ref_query_valid);
  AttentionMask ref_cross = cross_valid_mask(m + delta, kv_valid);

  int r = initial_feats;
  for (int i = 0; i < config.dec_layers; ++i) {
    auto lp = resolve_layer(s, "ref" + std::to_string(i));
    r = nn::transformer_decoder_layer(t, r, kv, ref_self, &ref_cross, spec, lp, train_mode, rng);
  }
  r = t.layer_norm(r, t.param("ref.out_ln.g"), t.param("ref.out_ln.b"));
  out.refined_logits = classifier(t, r);
  return out;
}

ModelOutput run_model(const ModelConfig& config, const ParamStore& params, const WindowInput& input,
                      bool train_mode, RandomStream* rng) {
  Tape t(&params);
  ForwardIds ids = model_forward(t, config, input, train_mode, rng);
  ModelOutput out;
  out.frame_logits = t.value(ids.frame_logits);
  if (ids.refined_logits >= 0) out.refined_logits = t.value(ids.refined_logits);
  if (ids.future_logits >= 0) out.near_future_logits = t.value(ids.future_logits);
  return out;
}

size_t analytic_param_count(const ModelConfig& config) {
  const size_t d = static_cast<size_t>(config.d_model);
  const size_t ff = static_cast<size_t>(config.ff_dim);
  const size_t attn = 4 * d * d + 4 * d;
  const size_t layer = 2 * attn + 3 * (2 * d) + (2 * d * ff + ff + d);
  const size_t out_ln = 2 * d;

  size_t total = 0;
  total += static_cast<size_t>(config.d_total()) * d + d;             // fusion
  total += static_cast<size_t>(config.long_slots()) * d;              // pos.long
  total += static_cast<size_t>(config.n_latent) * d;                  // latent queries
  total += static_cast<size_t>(config.enc_layers) * layer + out_ln;   // compressor
  total += static_cast<size_t>(config.query_len()) * d;               // pos.query
  if (config.anticipation_len > 0) total += d + static_cast<size_t>(config.anticipation_len) * d;
  total += static_cast<size_t>(config.dec_layers) * layer + out_ln;   // decoder
  if (config.variant == Variant::CMERT) {
    total += static_cast<size_t>(config.near_future_len) * d;         // future queries
    total += layer + out_ln;                                          // future generator
    total += static_cast<size_t>(config.dec_layers) * layer + out_ln; // refinement
  }
  total += d * 2 + 2;  // classifier
  return total;
}

size_t analytic_madds_per_step(const ModelConfig& config) {
  const size_t d = static_cast<size_t>(config.d_model);
  const size_t ff = static_cast<size_t>(config.ff_dim);
  auto layer = [&](size_t q, size_t k) {
    size_t self = 3 * q * d * d + 2 * q * q * d + q * d * d;
    size_t cross = q * d * d + 2 * k * d * d + 2 * q * k * d + q * d * d;
    size_t ffn = 2 * q * d * ff;
    return self + cross + ffn;
  };
  const size_t S = static_cast<size_t>(config.long_slots());
  const size_t n = static_cast<size_t>(config.n_latent);
  const size_t m = static_cast<size_t>(config.short_len);
  const size_t delta = static_cast<size_t>(config.anticipation_len);
  const size_t p = static_cast<size_t>(config.query_prefix());
  const size_t f = static_cast<size_t>(config.near_future_len);

  size_t total = 0;
  total += (S + m + p) * static_cast<size_t>(config.d_total()) * d;  // fusion
  total += static_cast<size_t>(config.enc_layers) * layer(n, S);
  total += static_cast<size_t>(config.dec_layers) * layer(p + m + delta, n);
  total += (m + delta) * d * 2;  // classifier on the main head
  if (config.variant == Variant::CMERT) {
    total += layer(f, n);
    total += static_cast<size_t>(config.dec_layers) * layer(m + delta, n + f + m + delta);
    total += (m + delta) * d * 2;  // refined head
  }
  return total;
}

}  // namespace osda::model

#pragma once

#include <cstdint>
#include <string>

namespace osda::model {

enum class Variant { LSTR, CMERT };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Architecture hyperparameters. Defaults are the desk-scale configuration;
// the published-scale settings (long 1600 @ 4, short 25, delta 6, f 48,
// ff 1024) are representable by the same fields.
struct ModelConfig {
  Variant variant = Variant::CMERT;
  int d_model = 32;
  int heads = 4;
  int ff_dim = 64;
  int enc_layers = 2;       // long-memory compressor depth
  int dec_layers = 1;       // short-term decoder depth (and CMeRT refinement depth)
  int n_latent = 8;         // compressed long-memory tokens
  int long_len = 64;        // raw history frames before sampling
  int long_sample_rate = 4;
  int short_len = 8;        // m
  int near_past_len = 4;    // CMeRT only; default m/2
  int anticipation_len = 6; // delta, 0 = pure detection
  int near_future_len = 8;  // f, CMeRT only
  double dropout = 0.1;
  int d_slow = 24;
  int d_fast = 8;

  int d_total() const { return d_slow + d_fast; }
  int long_slots() const { return long_len / long_sample_rate; }
  int query_prefix() const { return variant == Variant::CMERT ? near_past_len : 0; }
  int query_len() const { return query_prefix() + short_len + anticipation_len; }

  void validate() const;
};

ModelConfig model_config_from_json(const std::string& text);
std::string model_config_to_json(const ModelConfig& config);

struct TrainConfig {
  int epochs = 15;
  int batch_size = 16;
  double base_lr = 2e-3;
  int warmup_epochs = 5;
  double warmup_start_lr = 2e-4;
  double weight_decay = 5e-3;
  uint64_t seed = 1;
  double near_future_loss_weight = 1.0;   // CMeRT w2
  double initial_head_loss_weight = 1.0;  // CMeRT w1

  void validate() const;
};

TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& config);

// Per-epoch learning rate (epoch is 1-based): linear warmup from
// warmup_start_lr reaching base_lr exactly at warmup_epochs, then cosine
// decay reaching exactly 0 at `epochs`.
double scheduled_lr(const TrainConfig& tc, int epoch);

}  // namespace osda::model

#include "osda/model/config.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace osda::model {

using json = nlohmann::ordered_json;

const char* variant_name(Variant v) { return v == Variant::LSTR ? "LSTR" : "CMERT"; }

Variant variant_from_name(const std::string& name) {
  if (name == "LSTR" || name == "lstr") return Variant::LSTR;
  if (name == "CMERT" || name == "cmert" || name == "CMeRT") return Variant::CMERT;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

void ModelConfig::validate() const {
  if (d_model < 1 || heads < 1 || ff_dim < 1) throw std::invalid_argument("ModelConfig: bad widths");
  if (d_model % heads != 0) throw std::invalid_argument("ModelConfig: d_model must be divisible by heads");
  if (enc_layers < 1 || dec_layers < 1) throw std::invalid_argument("ModelConfig: layer counts must be >= 1");
  if (n_latent < 1) throw std::invalid_argument("ModelConfig: n_latent must be >= 1");
  if (long_len < 1 || long_sample_rate < 1 || long_len % long_sample_rate != 0)
    throw std::invalid_argument("ModelConfig: long_len must be a positive multiple of long_sample_rate");
  if (short_len < 1) throw std::invalid_argument("ModelConfig: short_len must be >= 1");
  if (anticipation_len < 0) throw std::invalid_argument("ModelConfig: anticipation_len must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("ModelConfig: dropout must be in [0,1)");
  if (d_slow < 1 || d_fast < 0) throw std::invalid_argument("ModelConfig: bad feature split");
  if (variant == Variant::CMERT) {
    if (near_past_len < 0) throw std::invalid_argument("ModelConfig: near_past_len must be >= 0");
    if (near_future_len < 1) throw std::invalid_argument("ModelConfig: near_future_len must be >= 1");
    if (near_future_len < anticipation_len)
      throw std::invalid_argument("ModelConfig: near_future_len must be >= anticipation_len");
  }
}

std::string model_config_to_json(const ModelConfig& c) {
  json j;
  j["variant"] = variant_name(c.variant);
  j["d_model"] = c.d_model;
  j["heads"] = c.heads;
  j["ff_dim"] = c.ff_dim;
  j["enc_layers"] = c.enc_layers;
  j["dec_layers"] = c.dec_layers;
  j["n_latent"] = c.n_latent;
  j["long_len"] = c.long_len;
  j["long_sample_rate"] = c.long_sample_rate;
  j["short_len"] = c.short_len;
  j["near_past_len"] = c.near_past_len;
  j["anticipation_len"] = c.anticipation_len;
  j["near_future_len"] = c.near_future_len;
  j["dropout"] = c.dropout;
  j["d_slow"] = c.d_slow;
  j["d_fast"] = c.d_fast;
  return j.dump(2) + "\n";
}

ModelConfig model_config_from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig c;
  if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
  c.d_model = j.value("d_model", c.d_model);
  c.heads = j.value("heads", c.heads);
  c.ff_dim = j.value("ff_dim", c.ff_dim);
  c.enc_layers = j.value("enc_layers", c.enc_layers);
  c.dec_layers = j.value("dec_layers", c.dec_layers);
  c.n_latent = j.value("n_latent", c.n_latent);
  c.long_len = j.value("long_len", c.long_len);
  c.long_sample_rate = j.value("long_sample_rate", c.long_sample_rate);
  c.short_len = j.value("short_len", c.short_len);
  c.near_past_len = j.value("near_past_len", c.near_past_len);
  c.anticipation_len = j.value("anticipation_len", c.anticipation_len);
  c.near_future_len = j.value("near_future_len", c.near_future_len);
  c.dropout = j.value("dropout", c.dropout);
  c.d_slow = j.value("d_slow", c.d_slow);
  c.d_fast = j.value("d_fast", c.d_fast);
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw std::invalid_argument("TrainConfig: epochs/batch_size must be >= 1");
  if (base_lr <= 0.0 || warmup_start_lr <= 0.0) throw std::invalid_argument("TrainConfig: learning rates must be positive");
  if (warmup_epochs < 1 || warmup_epochs >= epochs)
    throw std::invalid_argument("TrainConfig: need 1 <= warmup_epochs < epochs");
  if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (near_future_loss_weight < 0.0 || initial_head_loss_weight < 0.0)
    throw std::invalid_argument("TrainConfig: loss weights must be >= 0");
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["base_lr"] = c.base_lr;
  j["warmup_epochs"] = c.warmup_epochs;
  j["warmup_start_lr"] = c.warmup_start_lr;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["near_future_loss_weight"] = c.near_future_loss_weight;
  j["initial_head_loss_weight"] = c.initial_head_loss_weight;
  return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
  json j = json::parse(text);
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.base_lr = j.value("base_lr", c.base_lr);
  c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
  c.warmup_start_lr = j.value("warmup_start_lr", c.warmup_start_lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.near_future_loss_weight = j.value("near_future_loss_weight", c.near_future_loss_weight);
  c.initial_head_loss_weight = j.value("initial_head_loss_weight", c.initial_head_loss_weight);
  c.validate();
  return c;
}

double scheduled_lr(const TrainConfig& tc, int epoch) {
  if (epoch < 1 || epoch > tc.epochs) throw std::invalid_argument("scheduled_lr: epoch out of range");
  if (epoch <= tc.warmup_epochs) {
    double t = static_cast<double>(epoch) / tc.warmup_epochs;
    return tc.warmup_start_lr + (tc.base_lr - tc.warmup_start_lr) * t;
  }
  double t = static_cast<double>(epoch - tc.warmup_epochs) / (tc.epochs - tc.warmup_epochs);
  return 0.5 * tc.base_lr * (1.0 + std::cos(3.14159265358979323846 * t));
}

}  // namespace osda::model

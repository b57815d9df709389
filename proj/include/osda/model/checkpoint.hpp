#pragma once

#include <string>

#include "osda/model/config.hpp"
#include "osda/nn/params.hpp"

namespace osda::model {

// Checkpoint file: magic "OSDC", u32 version, u32 config-json length, the
// config json, u32 parameter count, then per parameter: u16 name length,
// name bytes, u32 rows, u32 cols, row-major little-endian float64 data.
struct Checkpoint {
  ModelConfig config;
  nn::ParamStore params;
};

void save_checkpoint(const std::string& path, const ModelConfig& config, const nn::ParamStore& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace osda::model

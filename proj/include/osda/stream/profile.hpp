#pragma once

#include <string>

#include "osda/stream/engine.hpp"

namespace osda::stream {

struct RuntimeReport {
  double mean_latency_ms = 0.0;
  double median_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  double steps_per_second = 0.0;  // timed steps / total wall time
  size_t param_count = 0;
  size_t madds_per_step = 0;
  int timed_steps = 0;
};

// Streams `stream` through a fresh engine, discarding the first warmup_steps
// from the statistics. Latency covers the forward pass only.
RuntimeReport profile(const model::ModelConfig& config, const nn::ParamStore& params,
                      const data::FeatureStream& stream, int warmup_steps);

std::string runtime_report_to_json(const RuntimeReport& r);

}  // namespace osda::stream

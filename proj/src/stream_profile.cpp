#include "osda/stream/profile.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "json.hpp"

namespace osda::stream {

RuntimeReport profile(const model::ModelConfig& config, const nn::ParamStore& params,
                      const data::FeatureStream& stream, int warmup_steps) {
  if (stream.frame_count() <= warmup_steps)
    throw std::invalid_argument("profile: stream must be longer than warmup_steps");
  StreamEngine engine(config, params);
  std::vector<double> latencies;
  latencies.reserve(static_cast<size_t>(stream.frame_count() - warmup_steps));
  using Clock = std::chrono::steady_clock;
  Clock::time_point timed_begin{};
  for (int t = 0; t < stream.frame_count(); ++t) {
    if (t == warmup_steps) timed_begin = Clock::now();
    std::span<const double> row(stream.frames.row_ptr(t), static_cast<size_t>(stream.frames.cols));
    PredictionFrame pf = engine.step(row);
    if (t >= warmup_steps) latencies.push_back(pf.latency_ms);
  }
  const double total_s = std::chrono::duration<double>(Clock::now() - timed_begin).count();

  RuntimeReport rep;
  rep.timed_steps = static_cast<int>(latencies.size());
  double sum = 0.0;
  for (double v : latencies) sum += v;
  rep.mean_latency_ms = sum / latencies.size();
  std::vector<double> sorted = latencies;
  std::sort(sorted.begin(), sorted.end());
  rep.median_latency_ms = sorted[sorted.size() / 2];
  rep.p95_latency_ms = sorted[std::min(sorted.size() - 1, static_cast<size_t>(sorted.size() * 0.95))];
  rep.steps_per_second = latencies.size() / total_s;
  rep.param_count = params.scalar_count();
  rep.madds_per_step = model::analytic_madds_per_step(config);
  return rep;
}

std::string runtime_report_to_json(const RuntimeReport& r) {
  nlohmann::ordered_json j;
  j["mean_latency_ms"] = r.mean_latency_ms;
  j["median_latency_ms"] = r.median_latency_ms;
  j["p95_latency_ms"] = r.p95_latency_ms;
  j["steps_per_second"] = r.steps_per_second;
  j["param_count"] = r.param_count;
  j["madds_per_step"] = r.madds_per_step;
  j["timed_steps"] = r.timed_steps;
  return j.dump(2) + "\n";
}

}  // namespace osda::stream

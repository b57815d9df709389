#include "osda/stream/engine.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "osda/nn/loss.hpp"

namespace osda::stream {

using Clock = std::chrono::steady_clock;

StreamEngine::StreamEngine(const model::ModelConfig& config, const nn::ParamStore& params)
    : config_(config), params_(&params) {
  config_.validate();
  capacity_ = config_.long_len + config_.query_prefix() + config_.short_len;
  ring_.assign(static_cast<size_t>(capacity_) * config_.d_total(), 0.0);
  first_frame_.assign(static_cast<size_t>(config_.d_total()), 0.0);
}

void StreamEngine::reset() {
  t_ = -1;
  std::fill(ring_.begin(), ring_.end(), 0.0);
  std::fill(first_frame_.begin(), first_frame_.end(), 0.0);
}

const double* StreamEngine::ring_row(long idx) const {
  return ring_.data() + static_cast<size_t>(idx % capacity_) * config_.d_total();
}

model::WindowInput StreamEngine::assemble() const {
  const int d = config_.d_total();
  const int m = config_.short_len;
  const int p = config_.query_prefix();
  const int slots = config_.long_slots();
  const int rate = config_.long_sample_rate;

  model::WindowInput w;
  auto fill = [&](Matrix& dst, std::vector<uint8_t>& valid, int row, long idx) {
    const double* src = idx < 0 ? first_frame_.data() : ring_row(idx);
    double* out = dst.row_ptr(row);
    for (int j = 0; j < d; ++j) out[j] = src[j];
    valid[row] = idx >= 0 ? 1 : 0;
  };

  w.short_mem = Matrix(m, d);
  w.short_valid.assign(m, 0);
  for (int r = 0; r < m; ++r) fill(w.short_mem, w.short_valid, r, t_ - m + 1 + r);
  w.near_past = Matrix(p, d);
  w.near_past_valid.assign(p, 0);
  for (int r = 0; r < p; ++r) fill(w.near_past, w.near_past_valid, r, t_ - m - p + 1 + r);
  w.long_mem = Matrix(slots, d);
  w.long_valid.assign(slots, 0);
  const long newest = t_ - m - p;
  for (int r = 0; r < slots; ++r) fill(w.long_mem, w.long_valid, r, newest - static_cast<long>(slots - 1 - r) * rate);
  return w;
}

PredictionFrame StreamEngine::step(std::span<const double> frame) {
  if (static_cast<int>(frame.size()) != config_.d_total())
    throw std::invalid_argument("StreamEngine::step: feature width mismatch");
  t_ += 1;
  double* slot = ring_.data() + static_cast<size_t>(t_ % capacity_) * config_.d_total();
  std::copy(frame.begin(), frame.end(), slot);
  if (t_ == 0) std::copy(frame.begin(), frame.end(), first_frame_.begin());

  model::WindowInput input = assemble();
  const auto t0 = Clock::now();
  model::ModelOutput out = model::run_model(config_, *params_, input, false, nullptr);
  const auto t1 = Clock::now();

  const Matrix& logits = out.final_logits();
  const int m = config_.short_len;
  PredictionFrame pf;
  pf.t = t_;
  pf.detection_prob = nn::softmax2(logits.at(m - 1, 0), logits.at(m - 1, 1))[1];
  pf.anticipation_probs.resize(static_cast<size_t>(config_.anticipation_len));
  for (int j = 0; j < config_.anticipation_len; ++j)
    pf.anticipation_probs[j] = nn::softmax2(logits.at(m + j, 0), logits.at(m + j, 1))[1];
  pf.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return pf;
}

PredictionTrack run_stream(const model::ModelConfig& config, const nn::ParamStore& params,
                           const data::FeatureStream& stream) {
  if (stream.frame_count() < 1) throw std::invalid_argument("run_stream: empty stream");
  if (stream.d_total() != config.d_total()) throw std::invalid_argument("run_stream: feature width mismatch");
  StreamEngine engine(config, params);
  PredictionTrack track;
  track.video_id = stream.video_id;
  track.fps = stream.feature_fps;
  track.frames.reserve(static_cast<size_t>(stream.frame_count()));
  for (int t = 0; t < stream.frame_count(); ++t) {
    std::span<const double> row(stream.frames.row_ptr(t), static_cast<size_t>(stream.frames.cols));
    track.frames.push_back(engine.step(row));
  }
  return track;
}

namespace {
std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}
}  // namespace

void write_prediction_track(const PredictionTrack& track, int delta, const std::string& path) {
  {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open track for write: " + path);
  f << "# video_id=" << track.video_id << " fps=" << fmt_double(track.fps) << " delta=" << delta << "\n";
  f << "t\tdetection_prob";
  for (int j = 1; j <= delta; ++j) f << "\tant_" << j;
  f << "\tlatency_ms\n";
  for (const auto& pf : track.frames) {
    f << pf.t << '\t' << fmt_double(pf.detection_prob);
    for (double v : pf.anticipation_probs) f << '\t' << fmt_double(v);
    f << '\t' << fmt_double(pf.latency_ms) << '\n';
  }
}

PredictionTrack read_prediction_track(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open track: " + path);
  PredictionTrack track;
  std::string line;
  if (!std::getline(f, line) || line.rfind("# video_id=", 0) != 0)
    throw std::runtime_error("bad track header: " + path);
  {
    std::istringstream hdr(line.substr(2));
    std::string tok;
    while (hdr >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "video_id") track.video_id = val;
      if (key == "fps") track.fps = std::stod(val);
    }
  }
  std::getline(f, line);  // column header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    PredictionFrame pf;
    std::vector<double> vals;
    double v;
    row >> pf.t;
    while (row >> v) vals.push_back(v);
    if (vals.size() < 2) throw std::runtime_error("bad track row: " + path);
    pf.detection_prob = vals.front();
    pf.latency_ms = vals.back();
    pf.anticipation_probs.assign(vals.begin() + 1, vals.end() - 1);
    track.frames.push_back(std::move(pf));
  }
  return track;
}

}  // namespace osda::stream

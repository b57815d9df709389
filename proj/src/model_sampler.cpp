#include "osda/model/sampler.hpp"

#include <stdexcept>

#include "osda/rng.hpp"

namespace osda::model {

namespace {
// fills `dst` row r from frame index `idx`, padding with frame 0 when idx < 0
void fill_row(Matrix& dst, std::vector<uint8_t>& valid, int r, const Matrix& frames, int idx) {
  const int src = idx < 0 ? 0 : idx;
  const double* s = frames.row_ptr(src);
  double* d = dst.row_ptr(r);
  for (int j = 0; j < frames.cols; ++j) d[j] = s[j];
  valid[r] = idx >= 0 ? 1 : 0;
}
}  // namespace

WindowInput assemble_window(const Matrix& frames, const ModelConfig& config, int t) {
  if (frames.cols != config.d_total()) throw std::invalid_argument("assemble_window: feature width mismatch");
  if (t < 0 || t >= frames.rows) throw std::invalid_argument("assemble_window: t out of range");
  const int m = config.short_len;
  const int p = config.query_prefix();
  const int slots = config.long_slots();
  const int rate = config.long_sample_rate;

  WindowInput w;
  w.short_mem = Matrix(m, frames.cols);
  w.short_valid.assign(m, 0);
  for (int r = 0; r < m; ++r) fill_row(w.short_mem, w.short_valid, r, frames, t - m + 1 + r);

  w.near_past = Matrix(p, frames.cols);
  w.near_past_valid.assign(p, 0);
  for (int r = 0; r < p; ++r) fill_row(w.near_past, w.near_past_valid, r, frames, t - m - p + 1 + r);

  w.long_mem = Matrix(slots, frames.cols);
  w.long_valid.assign(slots, 0);
  const int newest = t - m - p;  // newest raw frame belonging to long memory
  for (int r = 0; r < slots; ++r) fill_row(w.long_mem, w.long_valid, r, frames, newest - (slots - 1 - r) * rate);
  return w;
}

namespace {
TrainingSample make_sample(const data::FeatureStream& stream, const data::FrameLabelTrack& labels,
                           const ModelConfig& config, int short_start) {
  const int n = stream.frame_count();
  const int m = config.short_len;
  TrainingSample s;
  s.short_start = short_start;
  s.input = assemble_window(stream.frames, config, std::min(short_start + m - 1, n - 1));
  const int total = m + config.anticipation_len;
  s.labels.assign(total, 0);
  s.valid.assign(total, 0);
  for (int r = 0; r < total; ++r) {
    int idx = short_start + r;
    if (idx >= 0 && idx < n) {
      s.labels[r] = labels.labels[idx];
      s.valid[r] = 1;
    }
  }
  // short rows that are left-padding (possible only in the degenerate
  // single-window case) must not be supervised
  for (int r = 0; r < m; ++r)
    if (!s.input.short_valid[r]) s.valid[r] = 0;

  if (config.variant == Variant::CMERT) {
    const int f = config.near_future_len;
    s.future_labels.assign(f, 0);
    s.future_valid.assign(f, 0);
    for (int r = 0; r < f; ++r) {
      int idx = short_start + r;
      if (idx >= 0 && idx < n) {
        s.future_labels[r] = labels.labels[idx];
        s.future_valid[r] = 1;
      }
    }
  }
  return s;
}
}  // namespace

std::vector<TrainingSample> sample_training_windows(const data::FeatureStream& stream,
                                                    const data::FrameLabelTrack& labels, const ModelConfig& config,
                                                    uint64_t seed) {
  if (stream.frame_count() != labels.frame_count())
    throw std::invalid_argument("sample_training_windows: stream/label length mismatch");
  const int n = stream.frame_count();
  const int m = config.short_len;
  std::vector<TrainingSample> out;
  if (n < m) {
    // degenerate contract: one window ending at the last frame, front-padded
    out.push_back(make_sample(stream, labels, config, n - m));
    return out;
  }
  RandomStream rng(seed);
  const int offset = rng.uniform_int(0, m - 1);
  for (int start = offset; start + m <= n; start += m) out.push_back(make_sample(stream, labels, config, start));
  if (out.empty()) out.push_back(make_sample(stream, labels, config, 0));
  return out;
}

std::vector<TrainingSample> tile_windows(const data::FeatureStream& stream, const data::FrameLabelTrack& labels,
                                         const ModelConfig& config) {
  const int n = stream.frame_count();
  const int m = config.short_len;
  std::vector<TrainingSample> out;
  if (n < m) {
    out.push_back(make_sample(stream, labels, config, n - m));
    return out;
  }
  for (int start = 0; start + m <= n; start += m) out.push_back(make_sample(stream, labels, config, start));
  return out;
}

}  // namespace osda::model

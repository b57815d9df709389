#include <filesystem>

#include "doctest.h"
#include "osda/model/trainer.hpp"
#include "osda/nn/loss.hpp"
#include "osda/stream/engine.hpp"
#include "osda/stream/profile.hpp"

using namespace osda;
using namespace osda::stream;

namespace {

model::ModelConfig small_config(model::Variant v, int delta = 3) {
  model::ModelConfig c;
  c.variant = v;
  c.d_model = 16;
  c.heads = 4;
  c.ff_dim = 32;
  c.enc_layers = 1;
  c.dec_layers = 1;
  c.n_latent = 4;
  c.long_len = 16;
  c.long_sample_rate = 4;
  c.short_len = 5;
  c.near_past_len = 2;
  c.anticipation_len = delta;
  c.near_future_len = std::max(4, delta);
  c.d_slow = 10;
  c.d_fast = 6;
  return c;
}

data::FeatureStream random_stream(const model::ModelConfig& c, int n, uint64_t seed) {
  data::FeatureStream s;
  s.video_id = "s" + std::to_string(seed);
  s.frames = Matrix(n, c.d_total());
  RandomStream rng(seed);
  for (auto& v : s.frames.data) v = rng.normal();
  s.feature_fps = 3.125;
  s.d_slow = c.d_slow;
  s.d_fast = c.d_fast;
  return s;
}

}  // namespace

TEST_CASE("engine: cold start emits a valid probability at T = 0") {
  for (auto v : {model::Variant::LSTR, model::Variant::CMERT}) {
    model::ModelConfig c = small_config(v);
    nn::ParamStore params = model::build_params(c, 2);
    auto s = random_stream(c, 1, 3);
    auto track = run_stream(c, params, s);
    REQUIRE(track.frames.size() == 1);
    CHECK(track.frames[0].t == 0);
    CHECK(track.frames[0].detection_prob >= 0.0);
    CHECK(track.frames[0].detection_prob <= 1.0);
    CHECK(track.frames[0].anticipation_probs.size() == 3);
  }
}

TEST_CASE("engine: identical streams through fresh engines give identical tracks") {
  model::ModelConfig c = small_config(model::Variant::CMERT);
  nn::ParamStore params = model::build_params(c, 5);
  auto s = random_stream(c, 40, 7);
  auto t1 = run_stream(c, params, s);
  auto t2 = run_stream(c, params, s);
  REQUIRE(t1.frames.size() == t2.frames.size());
  for (size_t i = 0; i < t1.frames.size(); ++i) {
    CHECK(t1.frames[i].detection_prob == t2.frames[i].detection_prob);
    CHECK(t1.frames[i].anticipation_probs == t2.frames[i].anticipation_probs);
  }
}

TEST_CASE("engine: prediction at T is invariant to frames fed after T") {
  for (auto v : {model::Variant::LSTR, model::Variant::CMERT}) {
    model::ModelConfig c = small_config(v);
    nn::ParamStore params = model::build_params(c, 11);
    auto s = random_stream(c, 60, 13);
    auto full = run_stream(c, params, s);
    for (int t : {0, 3, 17, 42, 59}) {
      data::FeatureStream truncated = s;
      truncated.frames = Matrix(t + 1, c.d_total());
      std::copy(s.frames.data.begin(), s.frames.data.begin() + static_cast<size_t>(t + 1) * c.d_total(),
                truncated.frames.data.begin());
      auto part = run_stream(c, params, truncated);
      CHECK(part.frames.back().detection_prob == full.frames[t].detection_prob);
      CHECK(part.frames.back().anticipation_probs == full.frames[t].anticipation_probs);
    }
  }
}

TEST_CASE("engine: matches direct window assembly from the full matrix (ring-buffer oracle)") {
  for (auto v : {model::Variant::LSTR, model::Variant::CMERT}) {
    model::ModelConfig c = small_config(v);
    nn::ParamStore params = model::build_params(c, 17);
    // longer than ring capacity to exercise wrap-around
    auto s = random_stream(c, 3 * (c.long_len + c.near_past_len + c.short_len), 19);
    auto track = run_stream(c, params, s);
    for (int t = 0; t < s.frame_count(); t += 7) {
      model::WindowInput w = model::assemble_window(s.frames, c, t);
      model::ModelOutput out = model::run_model(c, params, w);
      const Matrix& logits = out.final_logits();
      auto pr = nn::softmax2(logits.at(c.short_len - 1, 0), logits.at(c.short_len - 1, 1));
      CHECK(std::fabs(track.frames[t].detection_prob - pr[1]) <= 1e-9);
      for (int j = 0; j < c.anticipation_len; ++j) {
        auto pa = nn::softmax2(logits.at(c.short_len + j, 0), logits.at(c.short_len + j, 1));
        CHECK(std::fabs(track.frames[t].anticipation_probs[j] - pa[1]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("engine: delta = 0 emits no anticipation probabilities") {
  model::ModelConfig c = small_config(model::Variant::LSTR, 0);
  nn::ParamStore params = model::build_params(c, 23);
  auto s = random_stream(c, 10, 29);
  auto track = run_stream(c, params, s);
  for (const auto& pf : track.frames) CHECK(pf.anticipation_probs.empty());
}

TEST_CASE("engine: feature width mismatch is rejected") {
  model::ModelConfig c = small_config(model::Variant::LSTR);
  nn::ParamStore params = model::build_params(c, 31);
  StreamEngine engine(c, params);
  std::vector<double> wrong(c.d_total() + 1, 0.0);
  CHECK_THROWS_AS(engine.step(std::span<const double>(wrong.data(), wrong.size())), std::invalid_argument);
}

TEST_CASE("prediction track file round trip") {
  model::ModelConfig c = small_config(model::Variant::CMERT);
  nn::ParamStore params = model::build_params(c, 37);
  auto s = random_stream(c, 12, 41);
  auto track = run_stream(c, params, s);
  auto dir = std::filesystem::temp_directory_path() / "osda_track_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "t.tsv").string();
  write_prediction_track(track, c.anticipation_len, path);
  auto back = read_prediction_track(path);
  CHECK(back.video_id == track.video_id);
  CHECK(back.fps == track.fps);
  REQUIRE(back.frames.size() == track.frames.size());
  for (size_t i = 0; i < back.frames.size(); ++i) {
    CHECK(back.frames[i].detection_prob == track.frames[i].detection_prob);
    CHECK(back.frames[i].anticipation_probs == track.frames[i].anticipation_probs);
  }
  std::filesystem::remove_all(dir);
}

namespace {
// independent count: per-block sums written out longhand
size_t expected_param_count(const model::ModelConfig& c) {
  const size_t d = c.d_model, ff = c.ff_dim;
  auto attention = [&] { return 4 * (d * d) + 4 * d; };
  auto norm = [&] { return 2 * d; };
  auto ffn = [&] { return d * ff + ff + ff * d + d; };
  auto full_layer = [&] { return 2 * attention() + 3 * norm() + ffn(); };
  size_t total = 0;
  total += (static_cast<size_t>(c.d_slow) + c.d_fast) * d + d;
  total += static_cast<size_t>(c.long_len / c.long_sample_rate) * d;
  total += static_cast<size_t>(c.n_latent) * d;
  total += c.enc_layers * full_layer() + norm();
  size_t qlen = (c.variant == model::Variant::CMERT ? c.near_past_len : 0) + c.short_len + c.anticipation_len;
  total += qlen * d;
  if (c.anticipation_len > 0) total += d + static_cast<size_t>(c.anticipation_len) * d;
  total += c.dec_layers * full_layer() + norm();
  if (c.variant == model::Variant::CMERT) {
    total += static_cast<size_t>(c.near_future_len) * d;
    total += full_layer() + norm();
    total += c.dec_layers * full_layer() + norm();
  }
  total += d * 2 + 2;
  return total;
}
}  // namespace

TEST_CASE("profiler: latency consistency and closed-form parameter count") {
  model::ModelConfig c = small_config(model::Variant::CMERT);
  nn::ParamStore params = model::build_params(c, 43);
  auto s = random_stream(c, 220, 47);
  auto rep = profile(c, params, s, 20);
  CHECK(rep.timed_steps == 200);
  CHECK(rep.mean_latency_ms > 0.0);
  CHECK(rep.steps_per_second == doctest::Approx(1000.0 / rep.mean_latency_ms).epsilon(0.10));

  CHECK(rep.param_count == params.scalar_count());
  CHECK(rep.param_count == model::analytic_param_count(c));
  CHECK(rep.param_count == expected_param_count(c));
  CHECK(rep.madds_per_step == model::analytic_madds_per_step(c));
}

TEST_CASE("profiler: doubling d_model quadruples attention weight matrices") {
  model::ModelConfig c1 = small_config(model::Variant::LSTR);
  model::ModelConfig c2 = c1;
  c2.d_model *= 2;
  auto attn_weights = [](const model::ModelConfig& c) {
    nn::ParamStore s = model::build_params(c, 3);
    size_t total = 0;
    for (int i = 0; i < s.count(); ++i) {
      const std::string& n = s.name(i);
      bool is_proj = n.find(".wq") != std::string::npos || n.find(".wk") != std::string::npos ||
                     n.find(".wv") != std::string::npos || n.find(".wo") != std::string::npos;
      if (is_proj) total += s.value(i).size();
    }
    return total;
  };
  CHECK(attn_weights(c2) == 4 * attn_weights(c1));
  // overall growth dominated by the attention blocks
  double ratio = static_cast<double>(model::analytic_param_count(c2)) / model::analytic_param_count(c1);
  CHECK(ratio > 3.0);
  CHECK(ratio < 4.5);
}

#include "osda/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "osda/hash.hpp"
#include "osda/metrics/frame.hpp"
#include "osda/nn/loss.hpp"

namespace osda::model {

namespace {

void run_chunked(int n_items, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n_items <= 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n_items);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n_items; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct AdamState {
  std::vector<Matrix> m, v;
  long step = 0;
};

void adamw_step(nn::ParamStore& params, const std::vector<Matrix>& grads, AdamState& st, double lr, double wd) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  st.step += 1;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (int p = 0; p < params.count(); ++p) {
    Matrix& val = params.value(p);
    const Matrix& g = grads[p];
    Matrix& mm = st.m[p];
    Matrix& vv = st.v[p];
    for (size_t i = 0; i < val.size(); ++i) {
      const double gi = g.data[i];
      mm.data[i] = b1 * mm.data[i] + (1.0 - b1) * gi;
      vv.data[i] = b2 * vv.data[i] + (1.0 - b2) * gi * gi;
      const double mhat = mm.data[i] / bc1;
      const double vhat = vv.data[i] / bc2;
      val.data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * val.data[i]);
    }
  }
}

}  // namespace

int build_training_loss(nn::Tape& tape, const ForwardIds& ids, const TrainingSample& sample,
                        const ModelConfig& config, const TrainConfig& tc, bool train_mode) {
  bool any_valid = false;
  for (uint8_t v : sample.valid) any_valid |= v != 0;
  if (!any_valid) return -1;

  if (config.variant == Variant::LSTR) return tape.mean_ce_logits(ids.frame_logits, sample.labels, sample.valid);

  int loss = tape.mean_ce_logits(ids.refined_logits, sample.labels, sample.valid);
  int initial = tape.mean_ce_logits(ids.frame_logits, sample.labels, sample.valid);
  loss = tape.add_scaled(loss, initial, 1.0, tc.initial_head_loss_weight);
  if (train_mode && ids.future_logits >= 0) {
    bool any_future = false;
    for (uint8_t v : sample.future_valid) any_future |= v != 0;
    if (any_future) {
      int fut = tape.mean_ce_logits(ids.future_logits, sample.future_labels, sample.future_valid);
      loss = tape.add_scaled(loss, fut, 1.0, tc.near_future_loss_weight);
    }
  }
  return loss;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OSDA_TRAIN_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 2;
}

TrainResult train_model(const ModelConfig& config, const TrainConfig& tc,
                        const std::vector<LabeledStream>& train_set, const std::vector<LabeledStream>& val_set,
                        int threads) {
  config.validate();
  tc.validate();
  if (train_set.empty()) throw std::invalid_argument("train_model: empty train set");
  threads = resolve_threads(threads);

  TrainResult result;
  result.params = build_params(config, Fnv64().update("init").update_u64(tc.seed).digest());
  AdamState adam;
  adam.m = result.params.make_grad_buffer();
  adam.v = result.params.make_grad_buffer();

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const double lr = scheduled_lr(tc, epoch);

    std::vector<TrainingSample> samples;
    for (size_t vi = 0; vi < train_set.size(); ++vi) {
      uint64_t ws = Fnv64().update("windows").update_u64(tc.seed).update_u64(epoch).update_u64(vi).digest();
      auto vs = sample_training_windows(train_set[vi].stream, train_set[vi].labels, config, ws);
      for (auto& s : vs) samples.push_back(std::move(s));
    }
    {
      RandomStream shuffle_rng(Fnv64().update("shuffle").update_u64(tc.seed).update_u64(epoch).digest());
      for (size_t i = samples.size(); i > 1; --i) std::swap(samples[i - 1], samples[shuffle_rng.uniform_int(0, static_cast<int>(i) - 1)]);
    }

    double epoch_loss_sum = 0.0;
    long epoch_loss_count = 0;
    size_t global_item = 0;
    for (size_t batch_start = 0; batch_start < samples.size(); batch_start += tc.batch_size) {
      const int batch_n = static_cast<int>(std::min<size_t>(tc.batch_size, samples.size() - batch_start));
      std::vector<std::vector<Matrix>> item_grads(batch_n);
      std::vector<double> item_loss(batch_n, std::numeric_limits<double>::quiet_NaN());
      std::vector<uint8_t> contributed(batch_n, 0);

      run_chunked(batch_n, threads, [&](int bi) {
        const TrainingSample& s = samples[batch_start + bi];
        uint64_t drop_seed =
            Fnv64().update("dropout").update_u64(tc.seed).update_u64(epoch).update_u64(global_item + bi).digest();
        RandomStream drop_rng(drop_seed);
        nn::Tape tape(&result.params);
        ForwardIds ids = model_forward(tape, config, s.input, true, &drop_rng);
        int loss = build_training_loss(tape, ids, s, config, tc, true);
        if (loss < 0) return;  // no valid positions: window skipped
        item_grads[bi] = result.params.make_grad_buffer();
        tape.backward(loss, &item_grads[bi]);
        item_loss[bi] = tape.value(loss).data[0];
        contributed[bi] = 1;
      });
      global_item += batch_n;

      int n_contrib = 0;
      for (int bi = 0; bi < batch_n; ++bi) n_contrib += contributed[bi];
      if (n_contrib == 0) continue;
      auto grads = result.params.make_grad_buffer();
      const double inv = 1.0 / n_contrib;
      for (int bi = 0; bi < batch_n; ++bi) {  // fixed reduction order
        if (!contributed[bi]) continue;
        if (!std::isfinite(item_loss[bi]))
          throw std::runtime_error("train_model: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_start / tc.batch_size));
        for (size_t p = 0; p < grads.size(); ++p)
          for (size_t i = 0; i < grads[p].size(); ++i) grads[p].data[i] += item_grads[bi][p].data[i] * inv;
        epoch_loss_sum += item_loss[bi];
        epoch_loss_count += 1;
      }
      adamw_step(result.params, grads, adam, lr, tc.weight_decay);
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.train_loss = epoch_loss_count > 0 ? epoch_loss_sum / epoch_loss_count : 0.0;
    if (!val_set.empty()) log.val_detection_cap = windowed_detection_cap(config, result.params, val_set, threads);
    result.log.push_back(log);
  }
  return result;
}

double windowed_detection_cap(const ModelConfig& config, const nn::ParamStore& params,
                              const std::vector<LabeledStream>& videos, int threads) {
  threads = resolve_threads(threads);
  struct Job {
    const TrainingSample* sample;
    size_t out_offset;
  };
  std::vector<std::vector<TrainingSample>> tiled(videos.size());
  std::vector<Job> jobs;
  size_t total_rows = 0;
  for (size_t vi = 0; vi < videos.size(); ++vi) {
    tiled[vi] = tile_windows(videos[vi].stream, videos[vi].labels, config);
    for (auto& s : tiled[vi]) {
      jobs.push_back({&s, total_rows});
      total_rows += config.short_len;
    }
  }
  std::vector<double> scores(total_rows, -1.0);
  std::vector<int> labels(total_rows, -1);
  run_chunked(static_cast<int>(jobs.size()), threads, [&](int ji) {
    const TrainingSample& s = *jobs[ji].sample;
    ModelOutput out = run_model(config, params, s.input, false, nullptr);
    const Matrix& logits = out.final_logits();
    for (int r = 0; r < config.short_len; ++r) {
      if (!s.valid[r]) continue;
      auto pr = nn::softmax2(logits.at(r, 0), logits.at(r, 1));
      scores[jobs[ji].out_offset + r] = pr[1];
      labels[jobs[ji].out_offset + r] = s.labels[r];
    }
  });
  metrics::ScoredFrames pool;
  for (size_t i = 0; i < total_rows; ++i)
    if (labels[i] >= 0) pool.push(scores[i], labels[i]);
  return metrics::frame_cap(pool);
}

void write_train_log(const std::vector<EpochLog>& log, const std::string& path) {
  {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open train log for write: " + path);
  f << "epoch\tlr\ttrain_loss\tval_detection_cap\n";
  for (const auto& e : log) {
    f << e.epoch << '\t' << e.lr << '\t' << e.train_loss << '\t';
    if (e.val_detection_cap)
      f << *e.val_detection_cap;
    else
      f << "n/a";
    f << '\n';
  }
}

}  // namespace osda::model

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "osda/data/feature_io.hpp"
#include "osda/data/labels.hpp"
#include "osda/data/manifest.hpp"
#include "osda/data/split.hpp"
#include "osda/metrics/events.hpp"
#include "osda/metrics/frame.hpp"
#include "osda/metrics/report.hpp"
#include "osda/model/checkpoint.hpp"
#include "osda/model/trainer.hpp"
#include "osda/nn/loss.hpp"
#include "osda/stream/engine.hpp"
#include "osda/stream/profile.hpp"
#include "osda/synth/generate.hpp"
#include "osda/textio.hpp"

namespace py = pybind11;
using namespace osda;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Matrix m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + m.size(), m.data.begin());
  return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

metrics::ScoredFrames scored_frames(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels length mismatch");
  metrics::ScoredFrames f;
  for (size_t i = 0; i < scores.size(); ++i) f.push(scores[i], labels[i]);
  return f;
}

metrics::EventSet event_set(const std::vector<std::pair<int, int>>& spans) {
  metrics::EventSet s;
  for (auto [a, b] : spans) s.events.push_back({a, b, std::nullopt});
  return s;
}

// owns the checkpoint the engine borrows from
class PyStreamEngine {
 public:
  explicit PyStreamEngine(const std::string& ckpt_path)
      : ckpt_(model::load_checkpoint(ckpt_path)), engine_(ckpt_.config, ckpt_.params) {}

  py::dict step(const std::vector<double>& frame) {
    auto pf = engine_.step(std::span<const double>(frame.data(), frame.size()));
    py::dict d;
    d["t"] = pf.t;
    d["detection_prob"] = pf.detection_prob;
    d["anticipation_probs"] = pf.anticipation_probs;
    d["latency_ms"] = pf.latency_ms;
    return d;
  }
  void reset() { engine_.reset(); }

 private:
  model::Checkpoint ckpt_;
  stream::StreamEngine engine_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "online struggle detection and anticipation core";

  // substrate
  m.def("masked_softmax", [](const std::vector<double>& logits, const std::vector<int>& allowed) {
    std::vector<uint8_t> a(allowed.begin(), allowed.end());
    return nn::masked_softmax(logits, a);
  });
  m.def("binary_cross_entropy_from_logits", [](double l0, double l1, int label) {
    auto r = nn::binary_cross_entropy_from_logits(l0, l1, label);
    return py::make_tuple(r.loss, py::make_tuple(r.grad[0], r.grad[1]));
  });

  // data model
  m.def(
      "intervals_to_frame_labels",
      [](const std::vector<std::pair<double, double>>& episodes, double fps, int n) {
        data::StruggleIntervals iv;
        iv.video_id = "py";
        iv.episodes = episodes;
        auto track = data::intervals_to_frame_labels(iv, fps, n);
        return std::vector<int>(track.labels.begin(), track.labels.end());
      },
      py::arg("episodes"), py::arg("fps"), py::arg("n_frames"));
  m.def("read_feature_stream", [](const std::string& path) {
    auto s = data::read_feature_stream(path);
    py::dict d;
    d["video_id"] = s.video_id;
    d["frames"] = matrix_to_numpy(s.frames);
    d["fps"] = s.feature_fps;
    d["d_slow"] = s.d_slow;
    d["d_fast"] = s.d_fast;
    return d;
  });
  m.def("write_feature_stream",
        [](const std::string& path, const py::array_t<double, py::array::c_style | py::array::forcecast>& frames,
           double fps, int d_slow, int d_fast, const std::string& video_id) {
          data::FeatureStream s;
          s.video_id = video_id;
          s.frames = matrix_from_numpy(frames);
          s.feature_fps = fps;
          s.d_slow = d_slow;
          s.d_fast = d_fast;
          data::write_feature_stream(s, path);
        },
        py::arg("path"), py::arg("frames"), py::arg("fps"), py::arg("d_slow"), py::arg("d_fast"),
        py::arg("video_id") = "py");

  // synthetic corpus
  m.def("generate_corpus", [](const std::string& config_json, const std::string& out_dir) {
    auto cfg = synth::corpus_config_from_json(config_json);
    auto corpus = synth::generate_corpus(cfg, out_dir);
    return corpus.manifest.size();
  });
  m.def("default_corpus_config",
        [](double signal_strength, double noise_scale) {
          synth::CorpusConfig cfg;
          cfg.profiles = synth::default_profiles(signal_strength, noise_scale);
          return synth::corpus_config_to_json(cfg);
        },
        py::arg("signal_strength") = 1.0, py::arg("noise_scale") = 0.5);

  // metrics
  m.def("frame_cap", [](const std::vector<double>& s, const std::vector<int>& l) {
    return metrics::frame_cap(scored_frames(s, l));
  });
  m.def("frame_ap", [](const std::vector<double>& s, const std::vector<int>& l) {
    return metrics::frame_ap(scored_frames(s, l));
  });
  m.def("pr_auc", [](const std::vector<double>& s, const std::vector<int>& l) {
    return metrics::pr_curve(scored_frames(s, l)).auc;
  });
  m.def("random_baseline_cap", [](const std::vector<int>& labels, int trials, uint64_t seed) {
    std::vector<uint8_t> l(labels.begin(), labels.end());
    return metrics::random_baseline_cap(l, trials, seed);
  });
  m.def("extract_events", [](const std::vector<int>& binary) {
    std::vector<uint8_t> b(binary.begin(), binary.end());
    auto events = metrics::extract_events(b);
    std::vector<std::pair<int, int>> out;
    for (const auto& e : events.events) out.emplace_back(e.start, e.end);
    return out;
  });
  m.def(
      "event_f1",
      [](const std::vector<std::pair<int, int>>& pred, const std::vector<std::pair<int, int>>& truth,
         const std::vector<double>& taus) {
        auto r = metrics::event_f1(event_set(pred), event_set(truth), taus);
        return py::make_tuple(r.f1, r.average);
      },
      py::arg("pred"), py::arg("truth"), py::arg("taus") = std::vector<double>{0.1, 0.3, 0.5});
  m.def("ece_frame", [](const std::vector<double>& probs, const std::vector<int>& labels, int bins) {
    std::vector<uint8_t> l(labels.begin(), labels.end());
    return metrics::ece_frame(probs, l, bins);
  }, py::arg("probs"), py::arg("labels"), py::arg("bins") = 10);

  // models + streaming
  m.def("train", [](const std::string& corpus_dir, const std::string& split_json, const std::string& model_json,
                    const std::string& train_json, const std::string& out_ckpt) {
    data::CorpusPaths paths{corpus_dir};
    auto manifest = data::read_manifest(paths.manifest_path());
    auto ann = data::read_annotations(paths.annotations_path());
    auto split = data::build_split(manifest, data::split_spec_from_json(split_json));
    model::ModelConfig cfg;
    if (!model_json.empty()) cfg = model::model_config_from_json(model_json);
    model::TrainConfig tc;
    if (!train_json.empty()) tc = model::train_config_from_json(train_json);
    auto load = [&](const std::vector<data::VideoRecord>& recs) {
      std::vector<model::LabeledStream> out;
      for (const auto& r : recs) {
        model::LabeledStream ls;
        ls.stream = data::read_feature_stream(paths.feature_path(r.video_id));
        ls.stream.video_id = r.video_id;
        auto it = ann.find(r.video_id);
        data::StruggleIntervals iv = it == ann.end() ? data::StruggleIntervals{r.video_id, {}} : it->second;
        ls.labels = data::intervals_to_frame_labels(iv, ls.stream.feature_fps, ls.stream.frame_count());
        out.push_back(std::move(ls));
      }
      return out;
    };
    auto result = model::train_model(cfg, tc, load(split.train), load(split.val), 0);
    model::save_checkpoint(out_ckpt, cfg, result.params);
    py::dict d;
    d["epochs"] = result.log.size();
    if (!result.log.empty() && result.log.back().val_detection_cap)
      d["final_val_detection_cap"] = *result.log.back().val_detection_cap;
    return d;
  });

  py::class_<PyStreamEngine>(m, "StreamEngine")
      .def(py::init<const std::string&>(), py::arg("ckpt_path"))
      .def("step", &PyStreamEngine::step, py::arg("frame"))
      .def("reset", &PyStreamEngine::reset);

  m.def("run_stream", [](const std::string& ckpt_path, const std::string& features_path) {
    auto ckpt = model::load_checkpoint(ckpt_path);
    auto s = data::read_feature_stream(features_path);
    auto track = stream::run_stream(ckpt.config, ckpt.params, s);
    const int n = static_cast<int>(track.frames.size());
    py::array_t<double> det(n);
    py::array_t<double> ant({n, ckpt.config.anticipation_len});
    for (int t = 0; t < n; ++t) {
      det.mutable_at(t) = track.frames[t].detection_prob;
      for (int j = 0; j < ckpt.config.anticipation_len; ++j)
        ant.mutable_at(t, j) = track.frames[t].anticipation_probs[j];
    }
    py::dict d;
    d["video_id"] = track.video_id;
    d["fps"] = track.fps;
    d["detection"] = det;
    d["anticipation"] = ant;
    return d;
  });

  m.def("profile", [](const std::string& ckpt_path, const std::string& features_path, int warmup) {
    auto ckpt = model::load_checkpoint(ckpt_path);
    auto s = data::read_feature_stream(features_path);
    auto rep = stream::profile(ckpt.config, ckpt.params, s, warmup);
    py::dict d;
    d["mean_latency_ms"] = rep.mean_latency_ms;
    d["median_latency_ms"] = rep.median_latency_ms;
    d["p95_latency_ms"] = rep.p95_latency_ms;
    d["steps_per_second"] = rep.steps_per_second;
    d["param_count"] = rep.param_count;
    d["madds_per_step"] = rep.madds_per_step;
    return d;
  }, py::arg("ckpt_path"), py::arg("features_path"), py::arg("warmup") = 10);
}

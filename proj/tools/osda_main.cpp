// Command-line surface: corpus generation, training, streaming inference,
// scoring, experiment protocols, runtime profiling and report emission.

#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "osda/data/feature_io.hpp"
#include "osda/data/labels.hpp"
#include "osda/data/manifest.hpp"
#include "osda/data/split.hpp"
#include "osda/harness/protocol.hpp"
#include "osda/metrics/report.hpp"
#include "osda/model/checkpoint.hpp"
#include "osda/model/trainer.hpp"
#include "osda/stream/profile.hpp"
#include "osda/synth/generate.hpp"
#include "osda/textio.hpp"

namespace {

using namespace osda;

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, int64_t seed) {
  synth::CorpusConfig cfg;
  if (!config_path.empty()) {
    cfg = synth::corpus_config_from_json(read_text_file(config_path));
  } else {
    cfg.profiles = synth::default_profiles();
  }
  if (seed >= 0) cfg.master_seed = static_cast<uint64_t>(seed);
  auto corpus = synth::generate_corpus(cfg, out_dir);
  std::cout << "wrote " << corpus.manifest.size() << " videos under " << out_dir << "\n";
  return 0;
}

std::vector<model::LabeledStream> load_set(const data::CorpusPaths& paths,
                                           const std::map<std::string, data::StruggleIntervals>& ann,
                                           const std::vector<data::VideoRecord>& records) {
  std::vector<model::LabeledStream> out;
  for (const auto& r : records) {
    model::LabeledStream ls;
    ls.stream = data::read_feature_stream(paths.feature_path(r.video_id));
    ls.stream.video_id = r.video_id;
    auto it = ann.find(r.video_id);
    data::StruggleIntervals iv = it == ann.end() ? data::StruggleIntervals{r.video_id, {}} : it->second;
    ls.labels = data::intervals_to_frame_labels(iv, ls.stream.feature_fps, ls.stream.frame_count());
    out.push_back(std::move(ls));
  }
  return out;
}

int cmd_train(const std::string& corpus_dir, const std::string& split_path, const std::string& model_path,
              const std::string& train_path, const std::string& out_ckpt, const std::string& log_path, int threads) {
  data::CorpusPaths paths{corpus_dir};
  auto manifest = data::read_manifest(paths.manifest_path());
  auto ann = data::read_annotations(paths.annotations_path());
  data::SplitSpec split_spec;
  if (!split_path.empty()) split_spec = data::split_spec_from_json(read_text_file(split_path));
  auto split = data::build_split(manifest, split_spec);

  model::ModelConfig cfg;
  if (!model_path.empty()) cfg = model::model_config_from_json(read_text_file(model_path));
  model::TrainConfig tc;
  if (!train_path.empty()) tc = model::train_config_from_json(read_text_file(train_path));

  auto train_set = load_set(paths, ann, split.train);
  auto val_set = load_set(paths, ann, split.val);
  auto result = model::train_model(cfg, tc, train_set, val_set, threads);
  model::save_checkpoint(out_ckpt, cfg, result.params);
  if (!log_path.empty()) model::write_train_log(result.log, log_path);
  std::cout << "trained on " << split.train.size() << " videos, validated on " << split.val.size() << "; saved "
            << out_ckpt << "\n";
  if (!result.log.empty() && result.log.back().val_detection_cap)
    std::cout << "final val detection cAP " << fmt_double(*result.log.back().val_detection_cap) << "\n";
  return 0;
}

int cmd_stream(const std::string& ckpt_path, const std::string& features_path, const std::string& out_path) {
  auto ckpt = model::load_checkpoint(ckpt_path);
  auto stream_data = data::read_feature_stream(features_path);
  auto track = stream::run_stream(ckpt.config, ckpt.params, stream_data);
  stream::write_prediction_track(track, ckpt.config.anticipation_len, out_path);
  std::cout << "wrote " << track.frames.size() << " prediction frames to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& track_path, const std::string& labels_path, const std::string& report_path,
             bool pooled) {
  auto track = stream::read_prediction_track(track_path);
  auto ann = data::read_annotations(labels_path);
  auto it = ann.find(track.video_id);
  data::StruggleIntervals iv = it == ann.end() ? data::StruggleIntervals{track.video_id, {}} : it->second;
  const int n = static_cast<int>(track.frames.size());
  auto labels = data::intervals_to_frame_labels(iv, track.fps, n);

  metrics::ScoredTrack st;
  st.video_id = track.video_id;
  st.fps = track.fps;
  const int delta = n > 0 ? static_cast<int>(track.frames.front().anticipation_probs.size()) : 0;
  st.detection.resize(n);
  st.anticipation = Matrix(n, delta);
  for (int t = 0; t < n; ++t) {
    st.detection[t] = track.frames[t].detection_prob;
    for (int j = 0; j < delta; ++j) st.anticipation.at(t, j) = track.frames[t].anticipation_probs[j];
  }
  st.labels = labels.labels;
  metrics::ReportOptions opt;
  opt.pooled_anticipation = pooled;
  auto report = metrics::compute_metric_report({st}, opt);
  metrics::write_metric_report(report, report_path);
  std::cout << "detection cAP " << fmt_double(report.detection_cap);
  if (report.anticipation_cap_avg) std::cout << ", anticipation avg cAP " << fmt_double(*report.anticipation_cap_avg);
  std::cout << "; report at " << report_path << "\n";
  return 0;
}

int cmd_profile(const std::string& ckpt_path, const std::string& features_path, int warmup,
                const std::string& out_path) {
  auto ckpt = model::load_checkpoint(ckpt_path);
  auto stream_data = data::read_feature_stream(features_path);
  auto rep = stream::profile(ckpt.config, ckpt.params, stream_data, warmup);
  std::string text = stream::runtime_report_to_json(rep);
  if (!out_path.empty()) write_text_file(out_path, text);
  std::cout << text;
  return 0;
}

int cmd_protocol(const std::string& spec_path, const std::string& out_dir, const std::string& corpus_dir,
                 std::vector<uint64_t> seeds, int workers, int epochs) {
  auto spec = harness::protocol_spec_from_json(read_text_file(spec_path));
  if (!out_dir.empty()) spec.out_dir = out_dir;
  if (!corpus_dir.empty()) spec.corpus_dir = corpus_dir;
  if (!seeds.empty()) spec.seeds = seeds;
  if (workers > 0) spec.workers = workers;
  if (epochs > 0) spec.train.epochs = epochs;
  auto result = harness::run_protocol(spec);
  int failed = 0;
  for (const auto& c : result.cells) {
    if (!c.ok) {
      ++failed;
      std::cerr << "cell " << c.key.id() << " failed: " << c.error << "\n";
    }
  }
  std::cout << result.cells.size() - failed << "/" << result.cells.size() << " cells ok; outputs under "
            << spec.out_dir << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& run_dir) {
  auto result = harness::load_protocol_result(run_dir);
  harness::emit_report(result);
  std::cout << "re-emitted report files under " << result.spec.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online struggle detection and anticipation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, corpus_dir, split_path, model_path, train_path, ckpt_path, log_path;
  std::string features_path, track_path, labels_path, report_path, spec_path, run_dir;
  int64_t seed = -1;
  int threads = 0, warmup = 10, workers = 0, epochs = 0;
  bool pooled = false;
  std::vector<uint64_t> seeds;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  gen->add_option("--config", config_path, "corpus config json");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--seed", seed, "master seed override");

  auto* train = app.add_subcommand("train", "train a model on a corpus split");
  train->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train->add_option("--split", split_path, "split spec json");
  train->add_option("--model-config", model_path, "model config json");
  train->add_option("--train-config", train_path, "train config json");
  train->add_option("--out", ckpt_path, "output checkpoint")->required();
  train->add_option("--log", log_path, "epoch log tsv");
  train->add_option("--threads", threads, "training threads");

  auto* stream_cmd = app.add_subcommand("stream", "causal frame-by-frame inference");
  stream_cmd->add_option("--model", ckpt_path, "checkpoint")->required();
  stream_cmd->add_option("--features", features_path, "feature file")->required();
  stream_cmd->add_option("--out", track_path, "output track file")->required();

  auto* eval_cmd = app.add_subcommand("eval", "score a prediction track");
  eval_cmd->add_option("--track", track_path, "prediction track")->required();
  eval_cmd->add_option("--labels", labels_path, "annotations json")->required();
  eval_cmd->add_option("--report", report_path, "output report json")->required();
  eval_cmd->add_flag("--pooled", pooled, "also report pooled anticipation ranking");

  auto* prof = app.add_subcommand("profile", "runtime statistics for streaming inference");
  prof->add_option("--model", ckpt_path, "checkpoint")->required();
  prof->add_option("--features", features_path, "feature file")->required();
  prof->add_option("--warmup", warmup, "steps excluded from stats");
  prof->add_option("--out", report_path, "output json");

  auto* proto = app.add_subcommand("protocol", "run an experiment grid");
  proto->add_option("--spec", spec_path, "protocol spec json")->required();
  proto->add_option("--out", out_dir, "output directory override");
  proto->add_option("--corpus", corpus_dir, "corpus directory override");
  proto->add_option("--seeds", seeds, "seed list override");
  proto->add_option("--workers", workers, "worker pool size override");
  proto->add_option("--epochs", epochs, "train epochs override");

  auto* rep = app.add_subcommand("report", "re-emit summary files for a finished run");
  rep->add_option("--run", run_dir, "protocol run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir, seed);
    if (train->parsed()) return cmd_train(corpus_dir, split_path, model_path, train_path, ckpt_path, log_path, threads);
    if (stream_cmd->parsed()) return cmd_stream(ckpt_path, features_path, track_path);
    if (eval_cmd->parsed()) return cmd_eval(track_path, labels_path, report_path, pooled);
    if (prof->parsed()) return cmd_profile(ckpt_path, features_path, warmup, report_path);
    if (proto->parsed()) return cmd_protocol(spec_path, out_dir, corpus_dir, seeds, workers, epochs);
    if (rep->parsed()) return cmd_report(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include "osda/harness/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <filesystem>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "osda/data/feature_io.hpp"
#include "osda/data/labels.hpp"
#include "osda/hash.hpp"
#include "osda/model/checkpoint.hpp"
#include "osda/stream/engine.hpp"
#include "osda/textio.hpp"

namespace osda::harness {

using json = nlohmann::ordered_json;

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::WithinActivity: return "WithinActivity";
    case Protocol::CombinedAll: return "CombinedAll";
    case Protocol::ActivityLevelGen: return "ActivityLevelGen";
    case Protocol::TaskLevelGen: return "TaskLevelGen";
    case Protocol::CrossActivityZeroShot: return "CrossActivityZeroShot";
    case Protocol::AttemptMatrix: return "AttemptMatrix";
    case Protocol::HorizonAblation: return "HorizonAblation";
  }
  throw std::logic_error("protocol_name: bad enum");
}

Protocol protocol_from_name(const std::string& name) {
  for (Protocol p : {Protocol::WithinActivity, Protocol::CombinedAll, Protocol::ActivityLevelGen,
                     Protocol::TaskLevelGen, Protocol::CrossActivityZeroShot, Protocol::AttemptMatrix,
                     Protocol::HorizonAblation})
    if (name == protocol_name(p)) return p;
  throw std::invalid_argument("unknown protocol '" + name + "'");
}

void ProtocolSpec::validate() const {
  if (corpus_dir.empty() || out_dir.empty()) throw std::invalid_argument("ProtocolSpec: corpus_dir/out_dir required");
  if (seeds.empty()) throw std::invalid_argument("ProtocolSpec: at least one seed");
  if (protocol == Protocol::HorizonAblation && deltas.empty())
    throw std::invalid_argument("ProtocolSpec: HorizonAblation needs a non-empty delta list");
  model.validate();
  train.validate();
}

std::string protocol_spec_to_json(const ProtocolSpec& s) {
  json j;
  j["protocol"] = protocol_name(s.protocol);
  j["corpus_dir"] = s.corpus_dir;
  j["out_dir"] = s.out_dir;
  j["activities"] = s.activities;
  j["tasks"] = s.tasks;
  j["deltas"] = s.deltas;
  j["seeds"] = s.seeds;
  j["model"] = json::parse(model::model_config_to_json(s.model));
  j["train"] = json::parse(model::train_config_to_json(s.train));
  j["pooled_anticipation"] = s.pooled_anticipation;
  j["write_tracks"] = s.write_tracks;
  j["workers"] = s.workers;
  return j.dump(2) + "\n";
}

ProtocolSpec protocol_spec_from_json(const std::string& text) {
  json j = json::parse(text);
  ProtocolSpec s;
  s.protocol = protocol_from_name(j.at("protocol").get<std::string>());
  s.corpus_dir = j.value("corpus_dir", s.corpus_dir);
  s.out_dir = j.value("out_dir", s.out_dir);
  if (j.contains("activities")) s.activities = j.at("activities").get<std::vector<std::string>>();
  if (j.contains("tasks")) s.tasks = j.at("tasks").get<std::vector<int>>();
  if (j.contains("deltas")) s.deltas = j.at("deltas").get<std::vector<int>>();
  if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  if (j.contains("model")) s.model = model::model_config_from_json(j.at("model").dump());
  if (j.contains("train")) s.train = model::train_config_from_json(j.at("train").dump());
  s.pooled_anticipation = j.value("pooled_anticipation", s.pooled_anticipation);
  s.write_tracks = j.value("write_tracks", s.write_tracks);
  s.workers = j.value("workers", s.workers);
  return s;
}

std::string CellKey::id() const {
  std::string raw = "train-" + train_sel + "__eval-" + eval_sel + "__s" + std::to_string(seed);
  if (delta >= 0) raw += "__d" + std::to_string(delta);
  for (auto& c : raw)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '-';
  return raw;
}

namespace {

struct CellJob {
  CellKey key;
  data::SplitSpec split;
  model::ModelConfig cfg;
  model::TrainConfig tcfg;
  std::string eval_activity_filter;  // restrict val videos to one activity
};

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OSDA_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 2;
}

void pool_run(int n_jobs, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n_jobs <= 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int k = std::min(workers, n_jobs);
  pool.reserve(k);
  for (int w = 0; w < k; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::vector<std::string> activities_in(const std::vector<data::VideoRecord>& manifest,
                                       const std::vector<std::string>& selector) {
  std::set<std::string> present;
  for (const auto& r : manifest) present.insert(data::activity_name(r.activity));
  std::vector<std::string> out;
  if (selector.empty()) {
    for (data::Activity a : data::all_activities())
      if (present.count(data::activity_name(a))) out.push_back(data::activity_name(a));
  } else {
    for (const auto& name : selector) {
      if (!present.count(name)) throw std::invalid_argument("activity not in corpus: " + name);
      out.push_back(name);
    }
  }
  return out;
}

std::vector<int> tasks_in(const std::vector<data::VideoRecord>& manifest, const std::string& activity,
                          const std::vector<int>& selector) {
  std::set<int> present;
  for (const auto& r : manifest)
    if (data::activity_name(r.activity) == activity) present.insert(r.task_id);
  std::vector<int> out;
  if (selector.empty()) {
    out.assign(present.begin(), present.end());
  } else {
    for (int t : selector) {
      if (!present.count(t)) throw std::invalid_argument("task not in corpus: " + std::to_string(t));
      out.push_back(t);
    }
  }
  return out;
}

std::vector<CellJob> enumerate_cells(const ProtocolSpec& spec, const std::vector<data::VideoRecord>& manifest) {
  std::vector<CellJob> jobs;
  auto acts = activities_in(manifest, spec.activities);

  auto base_job = [&](uint64_t seed) {
    CellJob j;
    j.cfg = spec.model;
    j.tcfg = spec.train;
    j.tcfg.seed = seed;
    j.key.seed = seed;
    return j;
  };

  for (uint64_t seed : spec.seeds) {
    switch (spec.protocol) {
      case Protocol::WithinActivity:
        for (const auto& a : acts) {
          CellJob j = base_job(seed);
          j.split.mode = data::SplitMode::WithinActivity;
          j.split.activity = a;
          j.key.train_sel = a;
          j.key.eval_sel = a;
          jobs.push_back(j);
        }
        break;
      case Protocol::CombinedAll: {
        CellJob all = base_job(seed);
        all.split.mode = data::SplitMode::CombinedAll;
        all.key.train_sel = "all";
        all.key.eval_sel = "all";
        jobs.push_back(all);
        for (const auto& a : acts) {
          CellJob j = all;
          j.key.eval_sel = a;
          j.eval_activity_filter = a;
          jobs.push_back(j);
        }
        break;
      }
      case Protocol::ActivityLevelGen:
        for (const auto& a : acts) {
          CellJob j = base_job(seed);
          j.split.mode = data::SplitMode::LeaveOneActivityOut;
          j.split.activity = a;
          j.key.train_sel = "not-" + a;
          j.key.eval_sel = a;
          jobs.push_back(j);
        }
        break;
      case Protocol::TaskLevelGen:
        for (const auto& a : acts)
          for (int t : tasks_in(manifest, a, spec.tasks)) {
            CellJob j = base_job(seed);
            j.split.mode = data::SplitMode::LeaveOneTaskOut;
            j.split.activity = a;
            j.split.task_id = t;
            j.key.train_sel = a + "-not-t" + std::to_string(t);
            j.key.eval_sel = a + "-t" + std::to_string(t);
            jobs.push_back(j);
          }
        break;
      case Protocol::CrossActivityZeroShot:
        for (const auto& a : acts)
          for (const auto& b : acts) {
            CellJob j = base_job(seed);
            j.split.mode = data::SplitMode::CrossActivityZeroShot;
            j.split.activity = a;
            j.split.eval_activity = b;
            j.key.train_sel = a;
            j.key.eval_sel = b;
            jobs.push_back(j);
          }
        break;
      case Protocol::AttemptMatrix:
        for (const auto& a : acts)
          for (int t : tasks_in(manifest, a, spec.tasks))
            for (int at = 1; at <= 5; ++at)
              for (int ae = 1; ae <= 5; ++ae) {
                CellJob j = base_job(seed);
                j.split.mode = data::SplitMode::AttemptFilter;
                j.split.activity = a;
                j.split.task_id = t;
                j.split.train_attempts = {at};
                j.split.eval_attempts = {ae};
                j.key.train_sel = a + "-t" + std::to_string(t) + "-a" + std::to_string(at);
                j.key.eval_sel = a + "-t" + std::to_string(t) + "-a" + std::to_string(ae);
                jobs.push_back(j);
              }
        break;
      case Protocol::HorizonAblation:
        for (const auto& a : acts)
          for (int delta : spec.deltas) {
            CellJob j = base_job(seed);
            j.split.mode = data::SplitMode::WithinActivity;
            j.split.activity = a;
            j.cfg.anticipation_len = delta;
            if (j.cfg.variant == model::Variant::CMERT)
              j.cfg.near_future_len = std::max(j.cfg.near_future_len, delta);
            j.key.train_sel = a;
            j.key.eval_sel = a;
            j.key.delta = delta;
            jobs.push_back(j);
          }
        break;
    }
  }
  return jobs;
}

struct Corpus {
  std::vector<data::VideoRecord> manifest;
  std::map<std::string, data::VideoRecord> by_id;
  std::map<std::string, model::LabeledStream> videos;
  data::CorpusPaths paths;
  uint64_t hash = 0;
};

Corpus load_corpus(const std::string& dir) {
  Corpus c;
  c.paths.root = dir;
  c.manifest = data::read_manifest(c.paths.manifest_path());
  auto annotations = data::read_annotations(c.paths.annotations_path());
  for (const auto& r : c.manifest) {
    c.by_id[r.video_id] = r;
    model::LabeledStream ls;
    ls.stream = data::read_feature_stream(c.paths.feature_path(r.video_id));
    ls.stream.video_id = r.video_id;
    auto it = annotations.find(r.video_id);
    data::StruggleIntervals iv = it == annotations.end() ? data::StruggleIntervals{r.video_id, {}} : it->second;
    ls.labels = data::intervals_to_frame_labels(iv, ls.stream.feature_fps, ls.stream.frame_count());
    c.videos[r.video_id] = std::move(ls);
  }
  c.hash = data::corpus_hash(c.paths, c.manifest);
  return c;
}

uint64_t train_fingerprint(const CellJob& job, const data::Split& split) {
  Fnv64 h;
  h.update(model::model_config_to_json(job.cfg));
  h.update(model::train_config_to_json(job.tcfg));
  std::vector<std::string> ids;
  for (const auto& r : split.train) ids.push_back(r.video_id);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) h.update(id).update("|");
  return h.digest();
}

metrics::ScoredTrack scored_from_track(const model::ModelConfig& cfg, const stream::PredictionTrack& pt,
                                       const model::LabeledStream& video) {
  metrics::ScoredTrack st;
  st.video_id = video.stream.video_id;
  st.fps = video.stream.feature_fps;
  const int n = video.stream.frame_count();
  st.detection.resize(n);
  st.anticipation = Matrix(n, cfg.anticipation_len);
  for (int t = 0; t < n; ++t) {
    st.detection[t] = pt.frames[t].detection_prob;
    for (int j = 0; j < cfg.anticipation_len; ++j) st.anticipation.at(t, j) = pt.frames[t].anticipation_probs[j];
  }
  st.labels = video.labels.labels;
  return st;
}

}  // namespace

ProtocolResult run_protocol(const ProtocolSpec& spec) {
  spec.validate();
  Corpus corpus = load_corpus(spec.corpus_dir);
  std::vector<CellJob> jobs = enumerate_cells(spec, corpus.manifest);
  if (jobs.empty()) throw std::runtime_error("run_protocol: empty grid");
  const int workers = resolve_workers(spec.workers);
  std::filesystem::create_directories(spec.out_dir + "/cache");
  std::filesystem::create_directories(spec.out_dir + "/cells");

  // resolve splits and group cells by training fingerprint
  struct TrainJob {
    uint64_t fingerprint = 0;
    model::ModelConfig cfg;
    model::TrainConfig tcfg;
    data::Split split;
    nn::ParamStore params;
    bool ok = false;
    std::string error;
  };
  std::vector<TrainJob> train_jobs;
  std::map<uint64_t, int> train_index;
  std::vector<int> cell_train(jobs.size(), -1);
  std::vector<std::string> cell_error(jobs.size());
  std::vector<data::Split> cell_split(jobs.size());

  for (size_t i = 0; i < jobs.size(); ++i) {
    try {
      cell_split[i] = data::build_split(corpus.manifest, jobs[i].split);
      // re-assert disjointness at the harness boundary
      std::set<std::string> train_ids;
      for (const auto& r : cell_split[i].train) train_ids.insert(r.video_id);
      for (const auto& r : cell_split[i].val)
        if (train_ids.count(r.video_id)) throw std::runtime_error("train/val overlap: " + r.video_id);
      uint64_t fp = train_fingerprint(jobs[i], cell_split[i]);
      auto it = train_index.find(fp);
      if (it == train_index.end()) {
        TrainJob tj;
        tj.fingerprint = fp;
        tj.cfg = jobs[i].cfg;
        tj.tcfg = jobs[i].tcfg;
        tj.split = cell_split[i];
        train_index[fp] = static_cast<int>(train_jobs.size());
        train_jobs.push_back(std::move(tj));
      }
      cell_train[i] = train_index[fp];
    } catch (const std::exception& e) {
      cell_error[i] = e.what();
    }
  }

  // train each distinct fingerprint (or load from cache)
  pool_run(static_cast<int>(train_jobs.size()), workers, [&](int ti) {
    TrainJob& tj = train_jobs[ti];
    const std::string ckpt = spec.out_dir + "/cache/" + hex64(tj.fingerprint) + ".osdc";
    try {
      if (std::filesystem::exists(ckpt)) {
        tj.params = model::load_checkpoint(ckpt).params;
        tj.ok = true;
        return;
      }
      std::vector<model::LabeledStream> train_set, val_set;
      for (const auto& r : tj.split.train) train_set.push_back(corpus.videos.at(r.video_id));
      for (const auto& r : tj.split.val) val_set.push_back(corpus.videos.at(r.video_id));
      // inner training threads stay at 1 when the pool is already parallel
      int inner = workers > 1 ? 1 : model::resolve_threads(0);
      auto res = model::train_model(tj.cfg, tj.tcfg, train_set, val_set, inner);
      tj.params = std::move(res.params);
      model::save_checkpoint(ckpt, tj.cfg, tj.params);
      model::write_train_log(res.log, spec.out_dir + "/cache/" + hex64(tj.fingerprint) + ".log.tsv");
      tj.ok = true;
    } catch (const std::exception& e) {
      tj.error = e.what();
    }
  });

  // evaluate every cell
  ProtocolResult result;
  result.spec = spec;
  result.corpus_hash = corpus.hash;
  result.cells.resize(jobs.size());
  pool_run(static_cast<int>(jobs.size()), workers, [&](int ci) {
    CellResult& cr = result.cells[ci];
    cr.key = jobs[ci].key;
    try {
      if (!cell_error[ci].empty()) throw std::runtime_error(cell_error[ci]);
      const TrainJob& tj = train_jobs[cell_train[ci]];
      cr.train_fingerprint = tj.fingerprint;
      if (!tj.ok) throw std::runtime_error("training failed: " + tj.error);
      std::vector<metrics::ScoredTrack> tracks;
      for (const auto& r : cell_split[ci].val) {
        if (!jobs[ci].eval_activity_filter.empty() &&
            data::activity_name(r.activity) != jobs[ci].eval_activity_filter)
          continue;
        const model::LabeledStream& video = corpus.videos.at(r.video_id);
        stream::PredictionTrack pt = stream::run_stream(jobs[ci].cfg, tj.params, video.stream);
        tracks.push_back(scored_from_track(jobs[ci].cfg, pt, video));
        if (spec.write_tracks)
          stream::write_prediction_track(pt, jobs[ci].cfg.anticipation_len,
                                         spec.out_dir + "/cells/" + cr.key.id() + "/tracks/" + r.video_id + ".tsv");
      }
      if (tracks.empty()) throw std::runtime_error("no validation videos after filtering");
      metrics::ReportOptions opt;
      opt.pooled_anticipation = spec.pooled_anticipation;
      cr.report = metrics::compute_metric_report(tracks, opt);
      metrics::write_metric_report(cr.report, spec.out_dir + "/cells/" + cr.key.id() + "/report.json");
      cr.ok = true;
    } catch (const std::exception& e) {
      cr.error = e.what();
    }
  });

  emit_report(result);
  return result;
}

}  // namespace osda::harness

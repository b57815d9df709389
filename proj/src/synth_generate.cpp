#include "osda/synth/generate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "osda/data/feature_io.hpp"
#include "osda/data/labels.hpp"
#include "osda/hash.hpp"
#include "osda/rng.hpp"

namespace osda::synth {

using json = nlohmann::ordered_json;

void ActivityProfile::validate() const {
  if (!(struggle_proportion_target > 0.0 && struggle_proportion_target < 1.0))
    throw std::invalid_argument("ActivityProfile: proportion must be in (0,1): " + name);
  if (mean_episode_len <= 0.0) throw std::invalid_argument("ActivityProfile: mean_episode_len must be positive");
  if (precursor_len < 0.0) throw std::invalid_argument("ActivityProfile: precursor_len must be >= 0");
  if (noise_scale <= 0.0) throw std::invalid_argument("ActivityProfile: noise_scale must be positive");
  if (signal_strength < 0.0) throw std::invalid_argument("ActivityProfile: signal_strength must be >= 0");
  for (double m : attempt_multipliers)
    if (!(m > 0.0 && m <= 1.5)) throw std::invalid_argument("ActivityProfile: attempt multiplier out of range");
}

void CorpusConfig::validate() const {
  if (profiles.empty()) throw std::invalid_argument("CorpusConfig: no profiles");
  for (const auto& p : profiles) {
    p.validate();
    data::Activity a = data::activity_from_name(p.name);
    if (tasks_per_activity > data::task_count(a))
      throw std::invalid_argument("CorpusConfig: tasks_per_activity exceeds task count for " + p.name);
  }
  if (tasks_per_activity < 1 || participants < 1 || attempts < 1 || attempts > 5)
    throw std::invalid_argument("CorpusConfig: counts must be >= 1 (attempts <= 5)");
  if (video_duration <= 0.0) throw std::invalid_argument("CorpusConfig: duration must be positive");
  if (geometry.d_slow < 1 || geometry.d_fast < 0 || geometry.fps <= 0.0)
    throw std::invalid_argument("CorpusConfig: bad feature geometry");
}

std::vector<ActivityProfile> default_profiles(double signal_strength, double noise_scale) {
  ActivityProfile knots;
  knots.name = "TyingKnots";
  knots.struggle_proportion_target = 0.42;
  knots.mean_episode_len = 7.0;
  knots.attempt_multipliers = {1.0, 0.85, 0.7, 0.6, 0.5};

  ActivityProfile origami;
  origami.name = "Origami";
  origami.struggle_proportion_target = 0.25;
  origami.mean_episode_len = 10.0;
  origami.attempt_multipliers = {1.0, 0.7, 0.45, 0.3, 0.2};

  ActivityProfile tangram;
  tangram.name = "Tangram";
  tangram.struggle_proportion_target = 0.49;
  tangram.mean_episode_len = 10.0;
  tangram.attempt_multipliers = {1.0, 0.85, 0.7, 0.6, 0.5};

  ActivityProfile cards;
  cards.name = "ShuffleCards";
  cards.struggle_proportion_target = 0.29;
  cards.mean_episode_len = 4.0;
  cards.attempt_multipliers = {1.0, 0.95, 0.9, 0.88, 0.85};

  std::vector<ActivityProfile> out{knots, origami, tangram, cards};
  for (auto& p : out) {
    p.signal_strength = signal_strength;
    p.noise_scale = noise_scale;
  }
  return out;
}

namespace {
json profile_to_json(const ActivityProfile& p) {
  return json{{"name", p.name},
              {"struggle_proportion_target", p.struggle_proportion_target},
              {"mean_episode_len", p.mean_episode_len},
              {"episode_len_jitter", p.episode_len_jitter},
              {"precursor_len", p.precursor_len},
              {"signal_strength", p.signal_strength},
              {"noise_scale", p.noise_scale},
              {"attempt_multipliers", p.attempt_multipliers}};
}

ActivityProfile profile_from_json(const json& j) {
  ActivityProfile p;
  p.name = j.at("name").get<std::string>();
  p.struggle_proportion_target = j.at("struggle_proportion_target").get<double>();
  p.mean_episode_len = j.at("mean_episode_len").get<double>();
  p.episode_len_jitter = j.value("episode_len_jitter", p.episode_len_jitter);
  p.precursor_len = j.value("precursor_len", p.precursor_len);
  p.signal_strength = j.value("signal_strength", p.signal_strength);
  p.noise_scale = j.value("noise_scale", p.noise_scale);
  if (j.contains("attempt_multipliers")) {
    auto v = j.at("attempt_multipliers").get<std::vector<double>>();
    if (v.size() != 5) throw std::invalid_argument("profile: attempt_multipliers must have 5 entries");
    std::copy(v.begin(), v.end(), p.attempt_multipliers.begin());
  }
  return p;
}
}  // namespace

std::string corpus_config_to_json(const CorpusConfig& c) {
  json j;
  json profs = json::array();
  for (const auto& p : c.profiles) profs.push_back(profile_to_json(p));
  j["profiles"] = profs;
  j["tasks_per_activity"] = c.tasks_per_activity;
  j["participants"] = c.participants;
  j["attempts"] = c.attempts;
  j["video_duration"] = c.video_duration;
  j["d_slow"] = c.geometry.d_slow;
  j["d_fast"] = c.geometry.d_fast;
  j["fps"] = c.geometry.fps;
  j["master_seed"] = c.master_seed;
  return j.dump(2) + "\n";
}

CorpusConfig corpus_config_from_json(const std::string& text) {
  json j = json::parse(text);
  CorpusConfig c;
  if (j.contains("profiles")) {
    c.profiles.clear();
    for (const auto& pj : j.at("profiles")) c.profiles.push_back(profile_from_json(pj));
  } else {
    c.profiles = default_profiles();
  }
  c.tasks_per_activity = j.value("tasks_per_activity", c.tasks_per_activity);
  c.participants = j.value("participants", c.participants);
  c.attempts = j.value("attempts", c.attempts);
  c.video_duration = j.value("video_duration", c.video_duration);
  c.geometry.d_slow = j.value("d_slow", c.geometry.d_slow);
  c.geometry.d_fast = j.value("d_fast", c.geometry.d_fast);
  c.geometry.fps = j.value("fps", c.geometry.fps);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.validate();
  return c;
}

uint64_t video_seed(uint64_t master_seed, const std::string& activity, int task, int participant, int attempt) {
  Fnv64 h;
  h.update_u64(master_seed).update(activity).update_u64(static_cast<uint64_t>(task));
  h.update_u64(static_cast<uint64_t>(participant)).update_u64(static_cast<uint64_t>(attempt));
  return h.digest();
}

namespace {

// Episode lengths are drawn until the target positive duration is met; the
// final one is truncated to land on it, keeping realized proportions tight.
std::vector<double> draw_episode_lengths(RandomStream& rng, double target_total, double mean_len, double jitter,
                                         double min_len, double max_len) {
  std::vector<double> lengths;
  double total = 0.0;
  while (total < target_total - 1e-9) {
    double ln_l = std::log(mean_len) + jitter * rng.normal();
    double len = std::clamp(std::exp(ln_l), min_len, max_len);
    if (total + len > target_total) {
      len = target_total - total;
      if (len < min_len) break;
    }
    lengths.push_back(len);
    total += len;
  }
  return lengths;
}

// Place episodes left to right with randomized gaps; consecutive episodes are
// separated by at least min_gap so each precursor ramp stays on negative
// frames. Deterministic and never rejects a feasible layout.
std::vector<std::pair<double, double>> place_episodes(RandomStream& rng, const std::vector<double>& lengths,
                                                      double duration, double min_gap) {
  const int k = static_cast<int>(lengths.size());
  double total_len = 0.0;
  for (double l : lengths) total_len += l;
  double slack = duration - total_len - (k > 0 ? (k - 1) * min_gap : 0.0);
  if (slack < 0.0)
    throw std::runtime_error(
        "generate_video: cannot place episodes without overlap; use shorter episodes or a lower proportion");
  std::vector<double> weights(static_cast<size_t>(k) + 1);
  double wsum = 0.0;
  for (auto& w : weights) {
    w = rng.u01() + 1e-9;
    wsum += w;
  }
  std::vector<std::pair<double, double>> episodes;
  double cursor = 0.0;
  for (int i = 0; i < k; ++i) {
    cursor += slack * (weights[i] / wsum);
    if (i > 0) cursor += min_gap;
    episodes.emplace_back(cursor, cursor + lengths[i]);
    cursor += lengths[i];
  }
  return episodes;
}

}  // namespace

GeneratedVideo generate_video(const ActivityProfile& profile, int task_id, uint64_t seed, double duration,
                              const FeatureGeometry& geometry) {
  profile.validate();
  if (duration <= 0.0) throw std::invalid_argument("generate_video: duration must be positive");
  const double fps = geometry.fps;
  const int n_frames = std::max(1, static_cast<int>(std::llround(duration * fps)));
  RandomStream rng(seed);

  const double min_len = 2.0 / fps;
  const double min_gap = profile.precursor_len + 2.0 / fps;
  const double target_total = duration * profile.struggle_proportion_target;
  auto lengths = draw_episode_lengths(rng, target_total, profile.mean_episode_len, profile.episode_len_jitter,
                                      min_len, duration / 4.0);
  auto episodes = place_episodes(rng, lengths, duration, min_gap);

  GeneratedVideo out;
  out.intervals.episodes = episodes;
  auto labels = data::intervals_to_frame_labels(out.intervals, fps, n_frames);

  // task-specific unit direction over the slow channels; seeded by task only
  // so the same task index carries the same signature across activities
  std::vector<double> direction(static_cast<size_t>(geometry.d_slow));
  {
    RandomStream dir_rng(Fnv64().update("task-direction").update_u64(static_cast<uint64_t>(task_id)).digest());
    double norm2 = 0.0;
    for (auto& v : direction) {
      v = dir_rng.normal();
      norm2 += v * v;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : direction) v *= inv;
  }

  // per-frame signal level: full strength on positive frames, linear ramp on
  // the precursor frames before each positive run
  std::vector<double> level(static_cast<size_t>(n_frames), 0.0);
  for (int k = 0; k < n_frames; ++k)
    if (labels.labels[k]) level[k] = profile.signal_strength;
  if (profile.precursor_len > 0.0 && profile.signal_strength > 0.0) {
    const int pre_frames = static_cast<int>(std::ceil(profile.precursor_len * fps));
    for (int k = 0; k < n_frames; ++k) {
      bool onset = labels.labels[k] && (k == 0 || !labels.labels[k - 1]);
      if (!onset) continue;
      for (int j = std::max(0, k - pre_frames); j < k; ++j) {
        double frac = 1.0 - static_cast<double>(k - j) / (profile.precursor_len * fps);
        if (frac > 0.0) level[j] = profile.signal_strength * frac;
      }
    }
  }

  const int d_total = geometry.d_slow + geometry.d_fast;
  Matrix frames(n_frames, d_total);
  const double ar = 0.9;
  const double innov_std = profile.noise_scale * std::sqrt(1.0 - ar * ar);
  std::vector<double> state(static_cast<size_t>(d_total));
  for (auto& s : state) s = rng.normal(0.0, profile.noise_scale);  // stationary start
  const bool episode_effects = profile.signal_strength > 0.0;
  for (int k = 0; k < n_frames; ++k) {
    double* row = frames.row_ptr(k);
    for (int j = 0; j < d_total; ++j) {
      if (k > 0) state[j] = ar * state[j] + innov_std * rng.normal();
      row[j] = state[j];
    }
    for (int j = 0; j < geometry.d_slow; ++j) row[j] += level[k] * direction[j];
    if (episode_effects && labels.labels[k]) {
      // double the fast-channel variance during struggle
      for (int j = geometry.d_slow; j < d_total; ++j) row[j] += rng.normal(0.0, profile.noise_scale);
    }
  }
  data::quantize_to_f32(frames);

  out.stream.frames = std::move(frames);
  out.stream.feature_fps = fps;
  out.stream.d_slow = geometry.d_slow;
  out.stream.d_fast = geometry.d_fast;
  return out;
}

GeneratedCorpus generate_corpus(const CorpusConfig& config, const std::string& out_dir) {
  config.validate();
  GeneratedCorpus out;
  out.paths.root = out_dir;
  std::filesystem::create_directories(out_dir + "/features");

  std::map<std::string, data::StruggleIntervals> annotations;
  for (const auto& profile : config.profiles) {
    data::Activity activity = data::activity_from_name(profile.name);
    for (int task = 1; task <= config.tasks_per_activity; ++task) {
      for (int part = 0; part < config.participants; ++part) {
        for (int attempt = 1; attempt <= config.attempts; ++attempt) {
          ActivityProfile adjusted = profile;
          adjusted.struggle_proportion_target =
              profile.struggle_proportion_target * profile.attempt_multipliers[attempt - 1];
          char pid[8];
          std::snprintf(pid, sizeof(pid), "P%02d", part);
          std::string video_id = profile.name + "_t" + std::to_string(task) + "_" + pid + "_a" +
                                 std::to_string(attempt);
          uint64_t seed = video_seed(config.master_seed, profile.name, task, part, attempt);
          GeneratedVideo gv = generate_video(adjusted, task, seed, config.video_duration, config.geometry);
          gv.stream.video_id = video_id;
          gv.intervals.video_id = video_id;

          data::write_feature_stream(gv.stream, out.paths.feature_path(video_id));
          annotations[video_id] = gv.intervals;

          data::VideoRecord rec;
          rec.video_id = video_id;
          rec.activity = activity;
          rec.task_id = task;
          rec.participant_id = pid;
          rec.attempt = attempt;
          rec.duration = config.video_duration;
          rec.validate();
          out.manifest.push_back(rec);
        }
      }
    }
  }
  data::write_manifest(out.manifest, out.paths.manifest_path());
  data::write_annotations(annotations, out.paths.annotations_path());
  return out;
}

}  // namespace osda::synth

#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "osda/data/manifest.hpp"
#include "osda/data/types.hpp"

namespace osda::synth {

// Controls one activity's episode statistics and per-attempt decay.
struct ActivityProfile {
  std::string name = "Origami";
  double struggle_proportion_target = 0.25;
  double mean_episode_len = 8.0;        // seconds
  double episode_len_jitter = 0.25;     // log-sigma of the length distribution
  double precursor_len = 2.0;           // seconds of ramp before each onset
  double signal_strength = 1.0;
  double noise_scale = 0.5;             // stationary per-channel std of the background
  std::array<double, 5> attempt_multipliers{1.0, 1.0, 1.0, 1.0, 1.0};

  void validate() const;
};

struct FeatureGeometry {
  int d_slow = 24;
  int d_fast = 8;
  double fps = 3.125;
};

struct CorpusConfig {
  std::vector<ActivityProfile> profiles;
  int tasks_per_activity = 2;
  int participants = 3;
  int attempts = 5;
  double video_duration = 320.0;  // seconds
  FeatureGeometry geometry;
  uint64_t master_seed = 1;

  void validate() const;
};

// Four activities with learning curves falling at different rates:
// Origami steepest, ShuffleCards flat, the others in between.
std::vector<ActivityProfile> default_profiles(double signal_strength = 1.0, double noise_scale = 0.5);

CorpusConfig corpus_config_from_json(const std::string& text);
std::string corpus_config_to_json(const CorpusConfig& config);

struct GeneratedVideo {
  data::FeatureStream stream;
  data::StruggleIntervals intervals;
};

// Background: per-channel AR(1), coefficient 0.9, stationary std noise_scale.
// Each episode adds signal_strength times a task-specific unit direction to
// the slow channels of its positive-labeled frames and doubles the variance
// of the fast channels there; a linear ramp of the same direction rises over
// the precursor_len seconds before each onset, entirely on negative frames.
GeneratedVideo generate_video(const ActivityProfile& profile, int task_id, uint64_t seed, double duration,
                              const FeatureGeometry& geometry);

uint64_t video_seed(uint64_t master_seed, const std::string& activity, int task, int participant, int attempt);

struct GeneratedCorpus {
  std::vector<data::VideoRecord> manifest;
  data::CorpusPaths paths;
};

GeneratedCorpus generate_corpus(const CorpusConfig& config, const std::string& out_dir);

}  // namespace osda::synth

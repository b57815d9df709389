#pragma once

#include <map>
#include <string>
#include <vector>

#include "osda/data/types.hpp"

namespace osda::data {

// manifest.json: array of VideoRecord objects.
// annotations.json: { video_id: [[start, end], ...], ... } in seconds.
void write_manifest(const std::vector<VideoRecord>& manifest, const std::string& path);
std::vector<VideoRecord> read_manifest(const std::string& path);

void write_annotations(const std::map<std::string, StruggleIntervals>& ann, const std::string& path);
std::map<std::string, StruggleIntervals> read_annotations(const std::string& path);

// Corpus directory layout: manifest.json, annotations.json, features/<video_id>.osdf
struct CorpusPaths {
  std::string root;
  std::string manifest_path() const { return root + "/manifest.json"; }
  std::string annotations_path() const { return root + "/annotations.json"; }
  std::string feature_path(const std::string& video_id) const { return root + "/features/" + video_id + ".osdf"; }
};

// FNV over manifest + annotations + every feature file, in manifest order.
uint64_t corpus_hash(const CorpusPaths& paths, const std::vector<VideoRecord>& manifest);

}  // namespace osda::data

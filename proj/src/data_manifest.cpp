#include "osda/data/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "osda/hash.hpp"

namespace osda::data {

using json = nlohmann::ordered_json;

namespace {
json record_to_json(const VideoRecord& r) {
  return json{{"video_id", r.video_id},
              {"activity", activity_name(r.activity)},
              {"task_id", r.task_id},
              {"participant_id", r.participant_id},
              {"attempt", r.attempt},
              {"duration", r.duration}};
}

VideoRecord record_from_json(const json& j) {
  VideoRecord r;
  r.video_id = j.at("video_id").get<std::string>();
  r.activity = activity_from_name(j.at("activity").get<std::string>());
  r.task_id = j.at("task_id").get<int>();
  r.participant_id = j.at("participant_id").get<std::string>();
  r.attempt = j.at("attempt").get<int>();
  r.duration = j.at("duration").get<double>();
  r.validate();
  return r;
}

void write_text(const std::string& path, const std::string& text) {
  {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}
}  // namespace

void write_manifest(const std::vector<VideoRecord>& manifest, const std::string& path) {
  json arr = json::array();
  for (const auto& r : manifest) arr.push_back(record_to_json(r));
  write_text(path, arr.dump(2) + "\n");
}

std::vector<VideoRecord> read_manifest(const std::string& path) {
  json arr = json::parse(read_text(path));
  std::vector<VideoRecord> out;
  out.reserve(arr.size());
  for (const auto& j : arr) out.push_back(record_from_json(j));
  return out;
}

void write_annotations(const std::map<std::string, StruggleIntervals>& ann, const std::string& path) {
  json obj = json::object();
  for (const auto& [vid, iv] : ann) {
    json eps = json::array();
    for (const auto& [s, e] : iv.episodes) eps.push_back(json::array({s, e}));
    obj[vid] = eps;
  }
  write_text(path, obj.dump(2) + "\n");
}

std::map<std::string, StruggleIntervals> read_annotations(const std::string& path) {
  json obj = json::parse(read_text(path));
  std::map<std::string, StruggleIntervals> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    StruggleIntervals iv;
    iv.video_id = it.key();
    for (const auto& ep : it.value()) iv.episodes.emplace_back(ep.at(0).get<double>(), ep.at(1).get<double>());
    out[iv.video_id] = std::move(iv);
  }
  return out;
}

uint64_t corpus_hash(const CorpusPaths& paths, const std::vector<VideoRecord>& manifest) {
  Fnv64 h;
  h.update(read_text(paths.manifest_path()));
  h.update(read_text(paths.annotations_path()));
  for (const auto& r : manifest) {
    std::ifstream f(paths.feature_path(r.video_id), std::ios::binary);
    if (!f) throw std::runtime_error("corpus_hash: missing feature file for " + r.video_id);
    char buf[65536];
    while (f) {
      f.read(buf, sizeof(buf));
      h.update(buf, static_cast<size_t>(f.gcount()));
    }
  }
  return h.digest();
}

}  // namespace osda::data

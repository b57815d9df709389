#pragma once

#include <map>
#include <string>
#include <vector>

#include "osda/data/manifest.hpp"
#include "osda/data/split.hpp"
#include "osda/metrics/report.hpp"
#include "osda/model/config.hpp"
#include "osda/model/trainer.hpp"

namespace osda::harness {

enum class Protocol {
  WithinActivity,
  CombinedAll,
  ActivityLevelGen,
  TaskLevelGen,
  CrossActivityZeroShot,
  AttemptMatrix,
  HorizonAblation,
};

const char* protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);

struct ProtocolSpec {
  Protocol protocol = Protocol::WithinActivity;
  std::string corpus_dir;
  std::string out_dir;
  std::vector<std::string> activities;  // selector; empty = every activity in the corpus
  std::vector<int> tasks;               // AttemptMatrix selector; empty = every task
  std::vector<int> deltas;              // HorizonAblation sweep (frames)
  std::vector<uint64_t> seeds{1};
  model::ModelConfig model;
  model::TrainConfig train;
  bool pooled_anticipation = false;
  bool write_tracks = false;
  int workers = 0;  // 0 -> OSDA_WORKERS env, default 2

  void validate() const;
};

ProtocolSpec protocol_spec_from_json(const std::string& text);
std::string protocol_spec_to_json(const ProtocolSpec& spec);

struct CellKey {
  std::string train_sel;
  std::string eval_sel;
  uint64_t seed = 0;
  int delta = -1;  // HorizonAblation only

  std::string id() const;
};

struct CellResult {
  CellKey key;
  bool ok = false;
  std::string error;
  metrics::MetricReport report;
  uint64_t train_fingerprint = 0;
};

struct ProtocolResult {
  ProtocolSpec spec;
  uint64_t corpus_hash = 0;
  std::vector<CellResult> cells;
};

// Enumerates the protocol grid, trains each distinct (split, config, seed)
// once (checkpoints cached under out_dir/cache keyed by fingerprint), streams
// the validation videos of every cell and scores them. Failed cells are
// recorded with their cause; the run continues.
ProtocolResult run_protocol(const ProtocolSpec& spec);

// Writes summary.csv, per-cell PR points, matrix CSVs and protocol.json
// (spec echo + provenance) under result.spec.out_dir.
void emit_report(const ProtocolResult& result);

// Rebuilds a ProtocolResult from a run directory written by run_protocol.
ProtocolResult load_protocol_result(const std::string& run_dir);

}  // namespace osda::harness

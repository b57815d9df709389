#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "osda/harness/protocol.hpp"
#include "osda/hash.hpp"
#include "osda/textio.hpp"

namespace osda::harness {

using json = nlohmann::ordered_json;

namespace {

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : "n/a"; }

// "A-t2-a3" -> ("A-t2", 3); "A" stays whole with attempt -1
std::pair<std::string, int> split_attempt(const std::string& sel) {
  auto pos = sel.rfind("-a");
  if (pos == std::string::npos) return {sel, -1};
  try {
    return {sel.substr(0, pos), std::stoi(sel.substr(pos + 2))};
  } catch (...) {
    return {sel, -1};
  }
}

struct MeanAcc {
  double sum = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    n += 1;
  }
  std::string text() const { return n > 0 ? fmt_double(sum / n) : ""; }
};

void write_matrix_csv(const std::string& path, const std::vector<std::string>& rows,
                      const std::vector<std::string>& cols, const std::map<std::pair<std::string, std::string>, MeanAcc>& cells,
                      const std::string& corner) {
  std::ostringstream out;
  out << corner;
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (const auto& r : rows) {
    out << r;
    for (const auto& c : cols) {
      out << ',';
      auto it = cells.find({r, c});
      if (it != cells.end()) out << it->second.text();
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace

void emit_report(const ProtocolResult& result) {
  const std::string& dir = result.spec.out_dir;
  std::filesystem::create_directories(dir);

  // provenance + cell index
  {
    json j;
    j["spec"] = json::parse(protocol_spec_to_json(result.spec));
    j["corpus_hash"] = hex64(result.corpus_hash);
    json cells = json::array();
    for (const auto& c : result.cells) {
      json cj;
      cj["id"] = c.key.id();
      cj["train"] = c.key.train_sel;
      cj["eval"] = c.key.eval_sel;
      cj["seed"] = c.key.seed;
      cj["delta"] = c.key.delta;
      cj["ok"] = c.ok;
      cj["error"] = c.error;
      cj["train_fingerprint"] = hex64(c.train_fingerprint);
      cells.push_back(cj);
    }
    j["cells"] = cells;
    write_text_file(dir + "/protocol.json", j.dump(2) + "\n");
  }

  // flat summary
  {
    std::ostringstream out;
    out << "protocol,train,eval,seed,delta,ok,det_cap,ant_avg,random_det,random_ant,ap,event_f1_avg,frame_ece,"
           "event_ece,lead_s,delay_s,pr_auc,error\n";
    for (const auto& c : result.cells) {
      out << protocol_name(result.spec.protocol) << ',' << c.key.train_sel << ',' << c.key.eval_sel << ','
          << c.key.seed << ',' << c.key.delta << ',' << (c.ok ? 1 : 0) << ',';
      if (c.ok) {
        const auto& r = c.report;
        out << fmt_double(r.detection_cap) << ',' << opt_str(r.anticipation_cap_avg) << ','
            << opt_str(r.random_detection_cap) << ',' << opt_str(r.random_anticipation_cap) << ','
            << fmt_double(r.detection_ap) << ',' << fmt_double(r.event_f1_avg) << ',' << fmt_double(r.frame_ece)
            << ',' << opt_str(r.event_ece) << ',' << opt_str(r.mean_lead_time_s) << ','
            << opt_str(r.mean_detection_delay_s) << ',' << fmt_double(r.pr.auc) << ',';
      } else {
        out << ",,,,,,,,,,,";
      }
      std::string err = c.error;
      for (auto& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      out << err << '\n';
    }
    write_text_file(dir + "/summary.csv", out.str());
  }

  // PR points per cell
  for (const auto& c : result.cells) {
    if (!c.ok) continue;
    std::ostringstream out;
    out << "threshold,precision,recall\n";
    for (const auto& p : c.report.pr.points)
      out << fmt_double(p.threshold) << ',' << fmt_double(p.precision) << ',' << fmt_double(p.recall) << '\n';
    write_text_file(dir + "/pr/" + c.key.id() + ".csv", out.str());
  }

  if (result.spec.protocol == Protocol::CrossActivityZeroShot) {
    std::vector<std::string> axes;
    std::set<std::string> seen;
    for (const auto& c : result.cells)
      if (seen.insert(c.key.train_sel).second) axes.push_back(c.key.train_sel);
    std::map<std::pair<std::string, std::string>, MeanAcc> det, ant;
    for (const auto& c : result.cells) {
      if (!c.ok) continue;
      det[{c.key.train_sel, c.key.eval_sel}].add(c.report.detection_cap);
      if (c.report.anticipation_cap_avg) ant[{c.key.train_sel, c.key.eval_sel}].add(*c.report.anticipation_cap_avg);
    }
    write_matrix_csv(dir + "/heatmap_zeroshot_det.csv", axes, axes, det, "train\\eval");
    write_matrix_csv(dir + "/heatmap_zeroshot_ant.csv", axes, axes, ant, "train\\eval");
  }

  if (result.spec.protocol == Protocol::AttemptMatrix) {
    // group per (activity, task) prefix
    std::set<std::string> groups;
    for (const auto& c : result.cells) groups.insert(split_attempt(c.key.train_sel).first);
    for (const auto& g : groups) {
      std::vector<std::string> axes;
      for (int a = 1; a <= 5; ++a) axes.push_back("a" + std::to_string(a));
      std::map<std::pair<std::string, std::string>, MeanAcc> det, ant;
      for (const auto& c : result.cells) {
        auto [tg, ta] = split_attempt(c.key.train_sel);
        auto [eg, ea] = split_attempt(c.key.eval_sel);
        if (tg != g || eg != g || !c.ok) continue;
        det[{"a" + std::to_string(ta), "a" + std::to_string(ea)}].add(c.report.detection_cap);
        if (c.report.anticipation_cap_avg)
          ant[{"a" + std::to_string(ta), "a" + std::to_string(ea)}].add(*c.report.anticipation_cap_avg);
      }
      write_matrix_csv(dir + "/heatmap_attempts_" + g + "_det.csv", axes, axes, det, "train\\eval");
      write_matrix_csv(dir + "/heatmap_attempts_" + g + "_ant.csv", axes, axes, ant, "train\\eval");
    }
  }

  if (result.spec.protocol == Protocol::HorizonAblation) {
    std::ostringstream out;
    out << "activity,delta,seed,ant_avg,det_cap\n";
    for (const auto& c : result.cells) {
      if (!c.ok) continue;
      out << c.key.train_sel << ',' << c.key.delta << ',' << c.key.seed << ','
          << opt_str(c.report.anticipation_cap_avg) << ',' << fmt_double(c.report.detection_cap) << '\n';
    }
    write_text_file(dir + "/horizon.csv", out.str());
  }
}

ProtocolResult load_protocol_result(const std::string& run_dir) {
  json j = json::parse(read_text_file(run_dir + "/protocol.json"));
  ProtocolResult result;
  result.spec = protocol_spec_from_json(j.at("spec").dump());
  result.corpus_hash = std::stoull(j.at("corpus_hash").get<std::string>(), nullptr, 16);
  for (const auto& cj : j.at("cells")) {
    CellResult c;
    c.key.train_sel = cj.at("train").get<std::string>();
    c.key.eval_sel = cj.at("eval").get<std::string>();
    c.key.seed = cj.at("seed").get<uint64_t>();
    c.key.delta = cj.at("delta").get<int>();
    c.ok = cj.at("ok").get<bool>();
    c.error = cj.at("error").get<std::string>();
    c.train_fingerprint = std::stoull(cj.at("train_fingerprint").get<std::string>(), nullptr, 16);
    if (c.ok) c.report = metrics::read_metric_report(run_dir + "/cells/" + c.key.id() + "/report.json");
    result.cells.push_back(std::move(c));
  }
  return result;
}

}  // namespace osda::harness

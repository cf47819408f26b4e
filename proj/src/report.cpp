#include "mlab/report.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace mlab {

using nlohmann::json;

std::string format_csv_value(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

namespace {

const StageMetrics* find_stage(const RunRecord& record, const std::string& label) {
  for (const StageMetrics& s : record.stages) {
    if (s.stage == label) return &s;
  }
  return nullptr;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void export_metrics(const RunRecord& record, const std::string& metrics_csv_path,
                    const std::string& scatter_csv_path) {
  {
    std::ofstream os(metrics_csv_path);
    if (!os) throw IoError("cannot open for writing: " + metrics_csv_path);
    os << "stage,task,accuracy,reference,cka\n";
    for (const StageMetrics& stage : record.stages) {
      for (const auto& [task, acc] : stage.accuracy) {
        os << stage.stage << ',' << task << ',' << format_csv_value(acc)
           << ",,\n";
      }
      for (const auto& [key, score] : stage.cka) {
        os << stage.stage << ',' << key.second << ",," << key.first << ','
           << format_csv_value(score.cka) << '\n';
      }
    }
    if (!os) throw IoError("write failed: " + metrics_csv_path);
  }

  {
    std::ofstream os(scatter_csv_path);
    if (!os) throw IoError("cannot open for writing: " + scatter_csv_path);
    os << "misalignment,accuracy_delta\n";
    const std::string ref = reference_stage_label(record.config.scenario);
    const std::string task = record.config.task_a.name;
    const StageMetrics* ref_stage = find_stage(record, ref);
    for (const StageMetrics& stage : record.stages) {
      const auto acc = stage.accuracy.find(task);
      const auto score = stage.cka.find({ref, task});
      if (acc == stage.accuracy.end() || score == stage.cka.end()) continue;
      const double base_acc =
          ref_stage != nullptr ? ref_stage->accuracy.at(task) : 0.0;
      os << format_csv_value(1.0 - score->second.cka) << ','
         << format_csv_value(acc->second - base_acc) << '\n';
    }
    if (!os) throw IoError("write failed: " + scatter_csv_path);
  }
}

std::vector<StageMetrics> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "stage,task,accuracy,reference,cka") {
    throw ParseError("unexpected metrics CSV header in " + path);
  }
  std::vector<StageMetrics> stages;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 5) {
      throw ParseError(path + " line " + std::to_string(line_no) +
                       ": expected 5 fields");
    }
    if (stages.empty() || stages.back().stage != f[0]) {
      // rows are grouped by stage, so a new label starts a new stage
      StageMetrics m;
      m.stage = f[0];
      stages.push_back(std::move(m));
    }
    try {
      if (!f[2].empty()) {
        stages.back().accuracy[f[1]] = std::stod(f[2]);
      } else if (!f[4].empty()) {
        AlignmentScore score;
        score.cka = std::stod(f[4]);
        stages.back().cka[{f[3], f[1]}] = score;
      } else {
        throw ParseError(path + " line " + std::to_string(line_no) +
                         ": neither accuracy nor cka present");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError(path + " line " + std::to_string(line_no) +
                       ": malformed number");
    }
  }
  return stages;
}

namespace {

json stage_to_json(const StageMetrics& stage) {
  json j;
  j["stage"] = stage.stage;
  j["accuracy"] = stage.accuracy;
  json cka_entries = json::array();
  for (const auto& [key, score] : stage.cka) {
    cka_entries.push_back({{"reference", key.first},
                           {"task", key.second},
                           {"cka", score.cka},
                           {"hsic_st", score.hsic_st},
                           {"hsic_ss", score.hsic_ss},
                           {"hsic_tt", score.hsic_tt}});
  }
  j["cka"] = std::move(cka_entries);
  return j;
}

StageMetrics stage_from_json(const json& j) {
  StageMetrics m;
  m.stage = j.at("stage").get<std::string>();
  for (const auto& [task, acc] : j.at("accuracy").items()) {
    m.accuracy[task] = acc.get<double>();
  }
  for (const auto& entry : j.at("cka")) {
    AlignmentScore score;
    score.cka = entry.at("cka").get<double>();
    score.hsic_st = entry.at("hsic_st").get<double>();
    score.hsic_ss = entry.at("hsic_ss").get<double>();
    score.hsic_tt = entry.at("hsic_tt").get<double>();
    m.cka[{entry.at("reference").get<std::string>(),
           entry.at("task").get<std::string>()}] = score;
  }
  return m;
}

}  // namespace

void save_run_record(const RunRecord& record, const std::string& path) {
  json j;
  j["config"] = json::parse(serialize_config(record.config));
  j["master_seed"] = record.master_seed;
  json seeds = json::array();
  for (const auto& [name, value] : record.seeds) {
    seeds.push_back({{"name", name}, {"value", value}});
  }
  j["seeds"] = std::move(seeds);
  json stages = json::array();
  for (const StageMetrics& s : record.stages) stages.push_back(stage_to_json(s));
  j["stages"] = std::move(stages);
  j["stage_seconds"] = record.stage_seconds;

  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path);
}

RunRecord load_run_record(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError("run record " + path + ": " + e.what());
  }
  try {
    RunRecord record;
    record.config = parse_config_text(j.at("config").dump());
    record.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& s : j.at("seeds")) {
      record.seeds.emplace_back(s.at("name").get<std::string>(),
                                s.at("value").get<std::uint64_t>());
    }
    for (const auto& s : j.at("stages")) {
      record.stages.push_back(stage_from_json(s));
    }
    record.stage_seconds = j.at("stage_seconds").get<std::vector<double>>();
    return record;
  } catch (const json::exception& e) {
    throw ParseError("run record " + path + ": " + e.what());
  }
}

}  // namespace mlab

#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "survplane/domain.hpp"

namespace survplane {

// Cohort files are line-delimited JSON records, one visit per line:
//   {"eye_id": "...", "visit_time": 12.0, "T": 24.0, "E": 0,
//    "features": [...], "views": [[...], ...]}
// T/E are omitted for unlabeled visits, views when absent. A CSV variant
// with header eye_id,visit_time,T,E,f0..f{d-1} is accepted for ingestion.

inline nlohmann::json visit_to_json(const std::string& eye_id, const Visit& visit) {
  nlohmann::json j;
  j["eye_id"] = eye_id;
  j["visit_time"] = visit.visit_time;
  if (visit.label.has_value()) {
    j["T"] = visit.label->time_months;
    j["E"] = visit.label->event;
  }
  j["features"] = visit.features;
  if (!visit.views.empty()) j["views"] = visit.views;
  return j;
}

inline void write_cohort(const Cohort& cohort, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& [eye_id, visits] : cohort.eyes)
    for (const auto& v : visits) out << visit_to_json(eye_id, v).dump() << "\n";
}

inline Cohort read_cohort_jsonl(std::istream& in, const std::string& name) {
  Cohort cohort;
  bool all_labeled = true;
  bool any_visit = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("eye_id") || !j.contains("visit_time") || !j.contains("features"))
      throw std::runtime_error(name + ":" + std::to_string(lineno) +
                               ": record needs eye_id, visit_time and features");
    Visit v;
    v.visit_time = j.at("visit_time").get<double>();
    v.features = j.at("features").get<std::vector<double>>();
    if (j.contains("views")) v.views = j.at("views").get<std::vector<std::vector<double>>>();
    if (j.contains("T") && j.contains("E")) {
      SurvivalLabel label;
      label.time_months = j.at("T").get<double>();
      label.event = j.at("E").get<int>();
      v.label = label;
    } else {
      all_labeled = false;
    }
    if (!any_visit) {
      cohort.feature_dim = v.features.size();
      any_visit = true;
    }
    cohort.eyes[j.at("eye_id").get<std::string>()].push_back(std::move(v));
  }
  cohort.labeled = any_visit && all_labeled;
  return cohort;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

inline Cohort read_cohort_csv(std::istream& in, const std::string& name) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(name + ": empty CSV");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const std::vector<std::string> cols = split_csv_line(header);
  long eye_col = -1, time_col = -1, t_col = -1, e_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::string& col = cols[c];
    const bool is_feature =
        col.size() > 1 && col[0] == 'f' &&
        std::all_of(col.begin() + 1, col.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    if (col == "eye_id") eye_col = static_cast<long>(c);
    else if (col == "visit_time") time_col = static_cast<long>(c);
    else if (col == "T") t_col = static_cast<long>(c);
    else if (col == "E") e_col = static_cast<long>(c);
    else if (is_feature) feature_cols.push_back(c);
  }
  if (eye_col < 0 || time_col < 0 || feature_cols.empty())
    throw std::runtime_error(name + ": CSV header needs eye_id, visit_time and f0..");

  Cohort cohort;
  cohort.feature_dim = feature_cols.size();
  bool all_labeled = true;
  bool any_visit = false;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != cols.size())
      throw std::runtime_error(name + ":" + std::to_string(lineno) + ": field count mismatch");
    Visit v;
    v.visit_time = std::stod(fields[time_col]);
    for (std::size_t c : feature_cols) v.features.push_back(std::stod(fields[c]));
    const bool has_t = t_col >= 0 && !fields[t_col].empty();
    const bool has_e = e_col >= 0 && !fields[e_col].empty();
    if (has_t && has_e) {
      SurvivalLabel label;
      label.time_months = std::stod(fields[t_col]);
      label.event = std::stoi(fields[e_col]);
      v.label = label;
    } else {
      all_labeled = false;
    }
    any_visit = true;
    cohort.eyes[fields[eye_col]].push_back(std::move(v));
  }
  cohort.labeled = any_visit && all_labeled;
  return cohort;
}

inline Cohort read_cohort(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return read_cohort_csv(in, path);
  return read_cohort_jsonl(in, path);
}

}  // namespace survplane

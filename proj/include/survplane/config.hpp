#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "survplane/synth.hpp"
#include "survplane/trainer.hpp"

namespace survplane {

// Nested key-value configuration text:
//   # comment
//   train.epochs = 30
//   synth.n_eyes = 200
// Every TrainConfig and SynthConfig field is addressable; command-line flags
// override file values by writing into the map before it is applied.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap parse(std::istream& in, const std::string& name = "<config>") {
    ConfigMap cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(name + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error(name + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("missing config key " + key);
    consumed_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key) {
    const std::string s = get_string(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + key + ": cannot parse '" + s + "' as a number");
    }
  }

  std::uint64_t get_u64(const std::string& key) {
    const std::string s = get_string(key);
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + key + ": cannot parse '" + s + "' as an integer");
    }
  }

  std::size_t get_size(const std::string& key) { return static_cast<std::size_t>(get_u64(key)); }

  bool get_bool(const std::string& key) {
    const std::string s = get_string(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::runtime_error("config key " + key + ": expected true/false, got '" + s + "'");
  }

  std::vector<std::size_t> get_size_list(const std::string& key) {
    const std::string s = get_string(key);
    std::vector<std::size_t> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(static_cast<std::size_t>(std::stoull(item)));
    }
    if (out.empty())
      throw std::runtime_error("config key " + key + ": expected a comma-separated list");
    return out;
  }

  // Rejects keys under `prefix.` that no apply function read.
  void reject_unknown(const std::string& prefix) const {
    for (const auto& [key, value] : values_) {
      if (key.rfind(prefix + ".", 0) != 0) continue;
      if (!consumed_.count(key))
        throw std::runtime_error("unknown config key " + key);
    }
  }

 private:
  static std::string trim(const std::string& s) {
    auto begin = s.begin(), end = s.end();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
    return std::string(begin, end);
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

inline TrainConfig apply_train_config(ConfigMap& cfg, TrainConfig base = {}) {
  TrainConfig c = base;
  if (cfg.has("train.epochs")) c.epochs = cfg.get_size("train.epochs");
  if (cfg.has("train.updates_per_epoch")) c.updates_per_epoch = cfg.get_size("train.updates_per_epoch");
  if (cfg.has("train.batch_pairs")) c.batch_pairs = cfg.get_size("train.batch_pairs");
  if (cfg.has("train.lr_min")) c.lr_min = cfg.get_double("train.lr_min");
  if (cfg.has("train.lr_max")) c.lr_max = cfg.get_double("train.lr_max");
  if (cfg.has("train.cyclic_half_period")) c.cyclic_half_period = cfg.get_size("train.cyclic_half_period");
  if (cfg.has("train.weight_decay")) c.weight_decay = cfg.get_double("train.weight_decay");
  if (cfg.has("train.seed")) c.seed = cfg.get_u64("train.seed");
  if (cfg.has("train.mode")) {
    const std::string mode = cfg.get_string("train.mode");
    if (mode == "supervised") c.mode = TrainMode::kSupervised;
    else if (mode == "unsupervised") c.mode = TrainMode::kUnsupervised;
    else throw std::runtime_error("train.mode: expected supervised or unsupervised");
  }
  if (cfg.has("train.max_gap_months")) c.max_gap_months = cfg.get_double("train.max_gap_months");
  if (cfg.has("train.damd_fraction")) c.damd_fraction = cfg.get_double("train.damd_fraction");
  if (cfg.has("train.selection_metric")) {
    const std::string metric = cfg.get_string("train.selection_metric");
    if (metric == "concordance") c.selection_metric = SelectionMetric::kConcordance;
    else if (metric == "auroc") c.selection_metric = SelectionMetric::kHorizonAuroc;
    else throw std::runtime_error("train.selection_metric: expected concordance or auroc");
  }
  if (cfg.has("train.selection_horizon_months"))
    c.selection_horizon_months = cfg.get_double("train.selection_horizon_months");
  if (cfg.has("train.hidden_sizes")) c.hidden_sizes = cfg.get_size_list("train.hidden_sizes");
  if (cfg.has("train.horizon_months"))
    c.normalizer.horizon_months = cfg.get_double("train.horizon_months");
  if (cfg.has("train.stop_consistency_target"))
    c.stop_consistency_target = cfg.get_bool("train.stop_consistency_target");
  if (cfg.has("train.freeze_encoder")) c.freeze_encoder = cfg.get_bool("train.freeze_encoder");
  if (cfg.has("train.freeze_normal")) c.freeze_normal = cfg.get_bool("train.freeze_normal");
  if (cfg.has("train.freeze_bias_params"))
    c.freeze_bias_params = cfg.get_bool("train.freeze_bias_params");
  if (cfg.has("train.freeze_ranking_scale"))
    c.freeze_ranking_scale = cfg.get_bool("train.freeze_ranking_scale");
  cfg.reject_unknown("train");
  return c;
}

inline SynthConfig apply_synth_config(ConfigMap& cfg, SynthConfig base = {}) {
  SynthConfig c = base;
  if (cfg.has("synth.n_eyes")) c.n_eyes = cfg.get_size("synth.n_eyes");
  if (cfg.has("synth.feature_dim")) c.feature_dim = cfg.get_size("synth.feature_dim");
  if (cfg.has("synth.informative_dims")) c.informative_dims = cfg.get_size("synth.informative_dims");
  if (cfg.has("synth.baseline_min")) c.baseline_min = cfg.get_double("synth.baseline_min");
  if (cfg.has("synth.baseline_max")) c.baseline_max = cfg.get_double("synth.baseline_max");
  if (cfg.has("synth.log_rate_mu")) c.log_rate_mu = cfg.get_double("synth.log_rate_mu");
  if (cfg.has("synth.log_rate_sigma")) c.log_rate_sigma = cfg.get_double("synth.log_rate_sigma");
  if (cfg.has("synth.conversion_threshold"))
    c.conversion_threshold = cfg.get_double("synth.conversion_threshold");
  if (cfg.has("synth.noise_std")) c.noise_std = cfg.get_double("synth.noise_std");
  if (cfg.has("synth.visit_interval_min"))
    c.visit_interval_min = cfg.get_double("synth.visit_interval_min");
  if (cfg.has("synth.visit_interval_max"))
    c.visit_interval_max = cfg.get_double("synth.visit_interval_max");
  if (cfg.has("synth.study_length_months"))
    c.study_length_months = cfg.get_double("synth.study_length_months");
  if (cfg.has("synth.converter_fraction"))
    c.converter_target_fraction = cfg.get_double("synth.converter_fraction");
  if (cfg.has("synth.seed")) c.seed = cfg.get_u64("synth.seed");
  double shift_severity = 0.0;
  std::uint64_t shift_seed = c.seed;
  if (cfg.has("synth.shift_severity")) shift_severity = cfg.get_double("synth.shift_severity");
  if (cfg.has("synth.shift_seed")) shift_seed = cfg.get_u64("synth.shift_seed");
  if (shift_severity > 0.0) c.shift = make_domain_shift(c.feature_dim, shift_severity, shift_seed);
  cfg.reject_unknown("synth");
  return c;
}

}  // namespace survplane

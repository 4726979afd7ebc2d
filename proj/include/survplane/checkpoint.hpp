#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "survplane/calibration.hpp"
#include "survplane/model.hpp"
#include "survplane/trainer.hpp"

namespace survplane {

// Single-file model checkpoint: a magic line, one line of JSON metadata,
// then the numeric payload as little-endian 64-bit floats. Save/load/save
// round-trips byte-exactly.
constexpr const char* kCheckpointMagic = "SURVPLANE-CHECKPOINT 1";

struct HistoryDigest {
  std::size_t epochs_trained = 0;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  double final_total_loss = 0.0;
};

struct Checkpoint {
  int format_version = 1;
  TrainConfig config;
  Model model;
  std::optional<Calibrator> calibrator;
  HistoryDigest digest;
  std::vector<std::uint64_t> seed_lineage;
};

inline std::string train_mode_name(TrainMode mode) {
  return mode == TrainMode::kSupervised ? "supervised" : "unsupervised";
}

inline TrainMode train_mode_from(const std::string& name) {
  if (name == "supervised") return TrainMode::kSupervised;
  if (name == "unsupervised") return TrainMode::kUnsupervised;
  throw std::invalid_argument("unknown training mode: " + name);
}

inline std::string selection_metric_name(SelectionMetric metric) {
  return metric == SelectionMetric::kConcordance ? "concordance" : "auroc";
}

inline SelectionMetric selection_metric_from(const std::string& name) {
  if (name == "concordance") return SelectionMetric::kConcordance;
  if (name == "auroc") return SelectionMetric::kHorizonAuroc;
  throw std::invalid_argument("unknown selection metric: " + name);
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["epochs"] = c.epochs;
  j["updates_per_epoch"] = c.updates_per_epoch;
  j["batch_pairs"] = c.batch_pairs;
  j["lr_min"] = c.lr_min;
  j["lr_max"] = c.lr_max;
  j["cyclic_half_period"] = c.cyclic_half_period;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["mode"] = train_mode_name(c.mode);
  j["max_gap_months"] = c.max_gap_months;
  j["damd_fraction"] = c.damd_fraction;
  j["selection_metric"] = selection_metric_name(c.selection_metric);
  j["selection_horizon_months"] = c.selection_horizon_months;
  j["hidden_sizes"] = c.hidden_sizes;
  j["horizon_months"] = c.normalizer.horizon_months;
  j["stop_consistency_target"] = c.stop_consistency_target;
  j["freeze_encoder"] = c.freeze_encoder;
  j["freeze_normal"] = c.freeze_normal;
  j["freeze_bias_params"] = c.freeze_bias_params;
  j["freeze_ranking_scale"] = c.freeze_ranking_scale;
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.updates_per_epoch = j.at("updates_per_epoch").get<std::size_t>();
  c.batch_pairs = j.at("batch_pairs").get<std::size_t>();
  c.lr_min = j.at("lr_min").get<double>();
  c.lr_max = j.at("lr_max").get<double>();
  c.cyclic_half_period = j.at("cyclic_half_period").get<std::size_t>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mode = train_mode_from(j.at("mode").get<std::string>());
  c.max_gap_months = j.at("max_gap_months").get<double>();
  c.damd_fraction = j.at("damd_fraction").get<double>();
  c.selection_metric = selection_metric_from(j.at("selection_metric").get<std::string>());
  c.selection_horizon_months = j.at("selection_horizon_months").get<double>();
  c.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
  c.normalizer.horizon_months = j.at("horizon_months").get<double>();
  c.stop_consistency_target = j.at("stop_consistency_target").get<bool>();
  c.freeze_encoder = j.at("freeze_encoder").get<bool>();
  c.freeze_normal = j.at("freeze_normal").get<bool>();
  c.freeze_bias_params = j.at("freeze_bias_params").get<bool>();
  c.freeze_ranking_scale = j.at("freeze_ranking_scale").get<bool>();
  return c;
}

inline void write_double_le(std::ostream& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

inline double read_double_le(std::istream& in) {
  char bytes[8];
  in.read(bytes, 8);
  if (!in) throw std::runtime_error("checkpoint payload truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  double value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::vector<double> payload = flatten_parameters(ckpt.model);
  if (ckpt.calibrator.has_value()) {
    const Calibrator& cal = *ckpt.calibrator;
    payload.insert(payload.end(), cal.knot_risks.begin(), cal.knot_risks.end());
    payload.insert(payload.end(), cal.knot_values.begin(), cal.knot_values.end());
    payload.insert(payload.end(), cal.knot_slopes.begin(), cal.knot_slopes.end());
  }

  nlohmann::json header;
  header["format_version"] = ckpt.format_version;
  header["config"] = train_config_to_json(ckpt.config);
  header["encoder_sizes"] = ckpt.model.encoder.sizes;
  header["calibrator_knots"] =
      ckpt.calibrator.has_value() ? ckpt.calibrator->knot_risks.size() : 0;
  header["history"] = {{"epochs_trained", ckpt.digest.epochs_trained},
                       {"best_epoch", ckpt.digest.best_epoch},
                       {"best_metric", ckpt.digest.best_metric},
                       {"final_total_loss", ckpt.digest.final_total_loss}};
  header["seed_lineage"] = ckpt.seed_lineage;
  header["payload_doubles"] = payload.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kCheckpointMagic << "\n" << header.dump() << "\n";
  for (double v : payload) write_double_le(out, v);
  if (!out) throw std::runtime_error("failed writing checkpoint to " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kCheckpointMagic)
    throw std::runtime_error(path + ": not a recognized checkpoint file");
  if (!std::getline(in, header_line)) throw std::runtime_error(path + ": missing header");
  const nlohmann::json header = nlohmann::json::parse(header_line);

  Checkpoint ckpt;
  ckpt.format_version = header.at("format_version").get<int>();
  if (ckpt.format_version != 1)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(ckpt.format_version));
  ckpt.config = train_config_from_json(header.at("config"));
  const auto sizes = header.at("encoder_sizes").get<std::vector<std::size_t>>();
  ckpt.digest.epochs_trained = header.at("history").at("epochs_trained").get<std::size_t>();
  ckpt.digest.best_epoch = header.at("history").at("best_epoch").get<std::size_t>();
  ckpt.digest.best_metric = header.at("history").at("best_metric").get<double>();
  ckpt.digest.final_total_loss = header.at("history").at("final_total_loss").get<double>();
  ckpt.seed_lineage = header.at("seed_lineage").get<std::vector<std::uint64_t>>();

  // Rebuild shapes, then fill from the payload.
  ckpt.model.encoder.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    ckpt.model.encoder.weights.emplace_back(sizes[l + 1] * sizes[l], 0.0);
    ckpt.model.encoder.biases.emplace_back(sizes[l + 1], 0.0);
  }
  ckpt.model.head.w.resize(sizes.back());

  const std::size_t n_knots = header.at("calibrator_knots").get<std::size_t>();
  const std::size_t expected =
      ckpt.model.parameter_count() + 3 * n_knots;
  if (header.at("payload_doubles").get<std::size_t>() != expected)
    throw std::runtime_error(path + ": payload size inconsistent with shapes");

  std::vector<double> params(ckpt.model.parameter_count());
  for (double& v : params) v = read_double_le(in);
  unflatten_parameters(ckpt.model, params);
  if (n_knots > 0) {
    Calibrator cal;
    cal.knot_risks.resize(n_knots);
    cal.knot_values.resize(n_knots);
    cal.knot_slopes.resize(n_knots);
    for (double& v : cal.knot_risks) v = read_double_le(in);
    for (double& v : cal.knot_values) v = read_double_le(in);
    for (double& v : cal.knot_slopes) v = read_double_le(in);
    ckpt.calibrator = std::move(cal);
  }
  return ckpt;
}

}  // namespace survplane

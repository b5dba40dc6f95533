// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "stssl/errors.hpp"

namespace stssl {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be a JSON object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(std::string("unknown key '") + key + "' in " + section);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(json& j, const SynthConfig& c) {
  j = {{"n_unlabeled", c.n_unlabeled}, {"n_labeled", c.n_labeled}, {"sources", c.sources}, {"frames", c.frames},
       {"height", c.height}, {"width", c.width}, {"positive_fraction", c.positive_fraction}, {"frame_rate", c.frame_rate}};
}

void from_json(const json& j, SynthConfig& c) {
  reject_unknown(j, {"n_unlabeled", "n_labeled", "sources", "frames", "height", "width", "positive_fraction", "frame_rate"},
                 "synthetic");
  read(j, "n_unlabeled", c.n_unlabeled);
  read(j, "n_labeled", c.n_labeled);
  read(j, "sources", c.sources);
  read(j, "frames", c.frames);
  read(j, "height", c.height);
  read(j, "width", c.width);
  read(j, "positive_fraction", c.positive_fraction);
  read(j, "frame_rate", c.frame_rate);
}

void to_json(json& j, const AugmentationConfig& c) {
  j = {{"scale_range", c.scale_range},
       {"translation_range", c.translation_range},
       {"rotation_range", c.rotation_range},
       {"hflip_prob", c.hflip_prob},
       {"brightness", c.brightness},
       {"contrast", c.contrast},
       {"noise_std", c.noise_std},
       {"erase_prob", c.erase_prob},
       {"erase_area", {c.erase_area.first, c.erase_area.second}},
       {"erase_aspect", {c.erase_aspect.first, c.erase_aspect.second}},
       {"reverse_prob", c.reverse_prob},
       {"shuffle_prob", c.shuffle_prob},
       {"shuffle_max_frames", c.shuffle_max_frames},
       {"replace_prob", c.replace_prob},
       {"replace_max_frames", c.replace_max_frames},
       {"temporal_enabled", c.temporal_enabled}};
}

void from_json(const json& j, AugmentationConfig& c) {
  reject_unknown(j,
                 {"scale_range", "translation_range", "rotation_range", "hflip_prob", "brightness", "contrast",
                  "noise_std", "erase_prob", "erase_area", "erase_aspect", "reverse_prob", "shuffle_prob",
                  "shuffle_max_frames", "replace_prob", "replace_max_frames", "temporal_enabled"},
                 "augmentation");
  read(j, "scale_range", c.scale_range);
  read(j, "translation_range", c.translation_range);
  read(j, "rotation_range", c.rotation_range);
  read(j, "hflip_prob", c.hflip_prob);
  read(j, "brightness", c.brightness);
  read(j, "contrast", c.contrast);
  read(j, "noise_std", c.noise_std);
  read(j, "erase_prob", c.erase_prob);
  read(j, "erase_area", c.erase_area);
  read(j, "erase_aspect", c.erase_aspect);
  read(j, "reverse_prob", c.reverse_prob);
  read(j, "shuffle_prob", c.shuffle_prob);
  read(j, "shuffle_max_frames", c.shuffle_max_frames);
  read(j, "replace_prob", c.replace_prob);
  read(j, "replace_max_frames", c.replace_max_frames);
  read(j, "temporal_enabled", c.temporal_enabled);
  for (double p : {c.hflip_prob, c.erase_prob, c.reverse_prob, c.shuffle_prob, c.replace_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augmentation probabilities must lie in [0, 1]");
  }
  if (c.scale_range < 0 || c.scale_range >= 1 || c.translation_range < 0 || c.rotation_range < 0 ||
      c.brightness < 0 || c.brightness >= 1 || c.contrast < 0 || c.noise_std < 0) {
    throw ConfigError("augmentation ranges out of bounds");
  }
}

void to_json(json& j, const EncoderConfig& c) {
  j = {{"stage_channels", c.stage_channels},
       {"blocks_per_stage", c.blocks_per_stage},
       {"representation_dim", c.representation_dim},
       {"leaky_slope", c.leaky_slope},
       {"input_shape", c.input_shape}};
}

void from_json(const json& j, EncoderConfig& c) {
  reject_unknown(j, {"stage_channels", "blocks_per_stage", "representation_dim", "leaky_slope", "input_shape"},
                 "encoder");
  read(j, "stage_channels", c.stage_channels);
  read(j, "blocks_per_stage", c.blocks_per_stage);
  read(j, "representation_dim", c.representation_dim);
  read(j, "leaky_slope", c.leaky_slope);
  read(j, "input_shape", c.input_shape);
}

void to_json(json& j, const HeadConfig& c) {
  j = {{"projector_hidden", c.projector_hidden},
       {"projector_out", c.projector_out},
       {"predictor_hidden", c.predictor_hidden},
       {"n_classes", c.n_classes}};
}

void from_json(const json& j, HeadConfig& c) {
  reject_unknown(j, {"projector_hidden", "projector_out", "predictor_hidden", "n_classes"}, "heads");
  read(j, "projector_hidden", c.projector_hidden);
  read(j, "projector_out", c.projector_out);
  read(j, "predictor_hidden", c.predictor_hidden);
  read(j, "n_classes", c.n_classes);
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate},
       {"ema_momentum", c.ema_momentum},
       {"batch_size", c.batch_size},
       {"steps", c.steps},
       {"classifier_steps", c.classifier_steps},
       {"seed", c.seed},
       {"ssl_variant", variant_name(c.ssl_variant)},
       {"temperature", c.temperature},
       {"temporal_aug_enabled", c.temporal_aug_enabled},
       {"augment_enabled", c.augment_enabled},
       {"window_length", c.window_length}};
}

void from_json(const json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"learning_rate", "ema_momentum", "batch_size", "steps", "classifier_steps", "seed", "ssl_variant",
                  "temperature", "temporal_aug_enabled", "augment_enabled", "window_length"},
                 "train");
  read(j, "learning_rate", c.learning_rate);
  read(j, "ema_momentum", c.ema_momentum);
  read(j, "batch_size", c.batch_size);
  read(j, "steps", c.steps);
  read(j, "classifier_steps", c.classifier_steps);
  read(j, "seed", c.seed);
  if (j.contains("ssl_variant")) c.ssl_variant = parse_variant(j.at("ssl_variant").get<std::string>());
  read(j, "temperature", c.temperature);
  read(j, "temporal_aug_enabled", c.temporal_aug_enabled);
  read(j, "augment_enabled", c.augment_enabled);
  read(j, "window_length", c.window_length);
}

void to_json(json& j, const OcclusionConfig& c) {
  j = {{"window", c.window}, {"stride", c.stride}, {"top_fraction", c.top_fraction}};
}

void from_json(const json& j, OcclusionConfig& c) {
  reject_unknown(j, {"window", "stride", "top_fraction"}, "occlusion");
  read(j, "window", c.window);
  read(j, "stride", c.stride);
  read(j, "top_fraction", c.top_fraction);
}

void ExperimentConfig::validate() const {
  if (fractions.empty()) throw ConfigError("fractions must not be empty");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
    if (i > 0 && fractions[i] >= fractions[i - 1]) throw ConfigError("fractions must be sorted in descending order");
  }
  if (regimes.empty()) throw ConfigError("regimes must not be empty");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!dataset.synthetic && dataset.directory.empty()) throw ConfigError("dataset needs 'synthetic' or 'directory'");
  if (saliency_clips < 0) throw ConfigError("saliency_clips must be >= 0");
  if (ablation_fraction && !(*ablation_fraction > 0.0 && *ablation_fraction <= 1.0)) {
    throw ConfigError("ablation_fraction must lie in (0, 1]");
  }
  train.validate();
  encoder.validate();
  heads.validate();
  if (train.window_length != encoder.input_shape[0]) {
    throw ConfigError("train.window_length must equal encoder.input_shape[0]");
  }
}

ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"dataset", "train", "augmentation", "encoder", "heads", "fractions", "regimes", "seeds",
                    "occlusion", "saliency_clips", "ablation_fraction"},
                   "experiment config");
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      reject_unknown(d, {"synthetic", "directory", "data_seed", "split"}, "dataset");
      if (d.contains("directory")) {
        c.dataset.directory = d.at("directory").get<std::string>();
        c.dataset.synthetic.reset();
      }
      if (d.contains("synthetic")) c.dataset.synthetic = d.at("synthetic").get<SynthConfig>();
      read(d, "data_seed", c.dataset.data_seed);
      if (d.contains("split")) {
        const auto& s = d.at("split");
        reject_unknown(s, {"train", "val", "test"}, "dataset.split");
        read(s, "train", c.dataset.split.train);
        read(s, "val", c.dataset.split.val);
        read(s, "test", c.dataset.split.test);
      }
    }
    read(j, "train", c.train);
    read(j, "augmentation", c.augmentation);
    read(j, "encoder", c.encoder);
    read(j, "heads", c.heads);
    read(j, "fractions", c.fractions);
    if (j.contains("regimes")) {
      c.regimes.clear();
      for (const auto& r : j.at("regimes")) c.regimes.push_back(parse_mode(r.get<std::string>()));
    }
    read(j, "seeds", c.seeds);
    read(j, "occlusion", c.occlusion);
    read(j, "saliency_clips", c.saliency_clips);
    if (j.contains("ablation_fraction") && !j.at("ablation_fraction").is_null()) {
      c.ablation_fraction = j.at("ablation_fraction").get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(j);
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json dataset = {{"data_seed", c.dataset.data_seed},
                  {"split", {{"train", c.dataset.split.train}, {"val", c.dataset.split.val}, {"test", c.dataset.split.test}}}};
  if (c.dataset.synthetic) dataset["synthetic"] = *c.dataset.synthetic;
  if (!c.dataset.directory.empty()) dataset["directory"] = c.dataset.directory;
  json regimes = json::array();
  for (auto r : c.regimes) regimes.push_back(mode_name(r));
  json j = {{"dataset", dataset},          {"train", c.train},       {"augmentation", c.augmentation},
            {"encoder", c.encoder},        {"heads", c.heads},       {"fractions", c.fractions},
            {"regimes", regimes},          {"seeds", c.seeds},       {"occlusion", c.occlusion},
            {"saliency_clips", c.saliency_clips}};
  if (c.ablation_fraction) j["ablation_fraction"] = *c.ablation_fraction;
  return j;
}

}  // namespace stssl

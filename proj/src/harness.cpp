// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/harness.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "stssl/checkpoint.hpp"
#include "stssl/errors.hpp"
#include "stssl/random.hpp"
#include "stssl/trainer.hpp"

namespace stssl {

namespace {

std::string run_context(std::uint64_t seed, double fraction, TrainMode regime) {
  return fmt::format("seed {} fraction {} regime {}", seed, fraction, mode_name(regime));
}

// Rethrows the active exception as the same category with context prepended.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const TrainingError& e) {
    throw TrainingError(context + ": " + e.what(), e.step());
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(context + ": " + e.what());
  } catch (const ComputationError& e) {
    throw ComputationError(context + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(context + ": " + e.what());
  }
}

TrainConfig seeded(const TrainConfig& train, std::uint64_t seed) {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

std::vector<LabeledClip> saliency_subset(const std::vector<LabeledClip>& clips, std::int64_t limit) {
  std::vector<LabeledClip> out;
  for (const auto& c : clips) {
    if (static_cast<std::int64_t>(out.size()) >= limit) break;
    if (c.label == 1 && !c.boxes.empty()) out.push_back(c);
  }
  return out;
}

ExperimentResult train_and_evaluate(const ExperimentConfig& config, const DatasetManifest& data,
                                    const std::vector<LabeledClip>& train_subset, TrainMode regime,
                                    double fraction, std::uint64_t seed, const ModelParams* pretrained) {
  const TrainConfig t = seeded(config.train, seed);
  const ModelParams* init = mode_uses_pretraining(regime) ? pretrained : nullptr;
  ClassifierResult trained =
      train_classifier(train_subset, regime, init, t, config.augmentation, config.encoder, config.heads);

  const auto test = data.labeled_in(Split::kTest);
  const EvalScores scores = evaluate_model(trained.params, config.encoder, test, t.window_length, t.batch_size);
  const ConfusionMetrics cm = confusion_metrics(scores.scores, scores.labels);

  ExperimentResult r;
  r.regime = regime;
  r.fraction = fraction;
  r.seed = seed;
  r.accuracy = cm.accuracy;
  r.sensitivity = cm.sensitivity;
  r.specificity = cm.specificity;
  r.auc = roc_auc(scores.scores, scores.labels);
  r.trainable_params = count_parameters(trained.params, true);
  r.total_params = count_parameters(trained.params, false);
  r.init_digest = init ? params_digest(*init) : 0;
  r.n_train = static_cast<std::int64_t>(train_subset.size());

  if (config.saliency_clips > 0) {
    const auto positives = saliency_subset(test, config.saliency_clips);
    if (!positives.empty()) {
      r.weighted_iou =
          run_saliency_eval(trained.params, config.encoder, test, positives, config.occlusion, t.batch_size)
              .mean_weighted_iou;
    }
  }

  const auto val = data.labeled_in(Split::kVal);
  if (!val.empty()) {
    const EvalScores vs = evaluate_model(trained.params, config.encoder, val, t.window_length, t.batch_size);
    try {
      spdlog::info("{}: val auc {:.4f}, test auc {:.4f}", run_context(seed, fraction, regime),
                   roc_auc(vs.scores, vs.labels), r.auc);
    } catch (const MetricError&) {
      spdlog::info("{}: val split is single-class, test auc {:.4f}", run_context(seed, fraction, regime), r.auc);
    }
  }
  return r;
}

ModelParams pretrain_encoder(const ExperimentConfig& config, const DatasetManifest& data, const TrainConfig& t) {
  PretrainResult pre =
      ssl_pretrain(data.unlabeled_clips(), t, config.augmentation, config.encoder, config.heads);
  return pre.online.subset("encoder.");
}

std::string format_row(const ExperimentResult& r) {
  return fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{}", mode_name(r.regime), r.fraction, r.seed,
                     r.accuracy, r.sensitivity, r.specificity, r.auc,
                     r.weighted_iou ? fmt::format("{:.6f}", *r.weighted_iou) : std::string(), r.trainable_params,
                     r.total_params);
}

}  // namespace

DatasetManifest prepare_dataset(const ExperimentConfig& config) {
  if (!config.dataset.directory.empty()) return load_dataset(config.dataset.directory);
  DatasetManifest data = generate_synthetic_dataset(*config.dataset.synthetic, config.dataset.data_seed);
  return split_by_source(std::move(data), config.dataset.split, mix_seed(config.dataset.data_seed, 0x5917));
}

std::vector<ExperimentResult> run_fraction_sweep(const ExperimentConfig& config, const DatasetManifest& data) {
  config.validate();
  const bool needs_pretraining = std::any_of(config.regimes.begin(), config.regimes.end(), mode_uses_pretraining);
  const auto train = data.labeled_in(Split::kTrain);

  std::vector<ExperimentResult> rows;
  for (std::uint64_t seed : config.seeds) {
    ModelParams pretrained;
    if (needs_pretraining) {
      try {
        spdlog::info("seed {}: self-supervised pretraining on {} clips", seed, data.unlabeled.size());
        pretrained = pretrain_encoder(config, data, seeded(config.train, seed));
      } catch (...) {
        rethrow_with_context(fmt::format("seed {} pretraining", seed));
      }
    }
    for (double fraction : config.fractions) {
      std::vector<LabeledClip> subset;
      for (TrainMode regime : config.regimes) {
        try {
          if (subset.empty()) subset = subsample_fraction(train, fraction, seed);
          rows.push_back(train_and_evaluate(config, data, subset, regime, fraction, seed,
                                            needs_pretraining ? &pretrained : nullptr));
        } catch (...) {
          rethrow_with_context(run_context(seed, fraction, regime));
        }
      }
    }
  }
  return rows;
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
}

AblationResult run_ablation_temporal(const ExperimentConfig& config, const DatasetManifest& data) {
  config.validate();
  auto regime = std::find_if(config.regimes.begin(), config.regimes.end(), mode_uses_pretraining);
  if (regime == config.regimes.end()) throw ConfigError("the temporal ablation needs an ssl_* regime");
  const std::uint64_t seed = config.seeds.front();
  const double fraction = config.ablation_fraction.value_or(config.fractions.back());
  const auto subset = subsample_fraction(data.labeled_in(Split::kTrain), fraction, seed);

  AblationResult result;
  for (bool temporal : {true, false}) {
    ExperimentConfig c = config;
    c.train.temporal_aug_enabled = temporal;
    c.augmentation.temporal_enabled = temporal;
    try {
      const ModelParams pretrained = pretrain_encoder(c, data, seeded(c.train, seed));
      // Downstream training uses the unmodified config in both arms.
      (temporal ? result.with_temporal : result.without_temporal) =
          train_and_evaluate(config, data, subset, *regime, fraction, seed, &pretrained);
    } catch (...) {
      rethrow_with_context(fmt::format("temporal ablation ({})", temporal ? "on" : "off"));
    }
  }
  result.auc_difference = result.with_temporal.auc - result.without_temporal.auc;
  return result;
}

void write_ablation_csv(std::ostream& out, const AblationResult& result) {
  out << "temporal_aug," << kResultsHeader << '\n';
  out << "true," << format_row(result.with_temporal) << '\n';
  out << "false," << format_row(result.without_temporal) << '\n';
}

std::vector<PredBox> saliency_boxes(const SaliencyMap& map, double top_fraction) {
  const auto mask = threshold_top_fraction(map, top_fraction);
  const std::size_t plane = static_cast<std::size_t>(map.height * map.width);
  std::vector<PredBox> boxes;
  for (std::int64_t t = 0; t < map.frames; ++t) {
    std::span<const std::uint8_t> frame_mask(mask.data() + static_cast<std::size_t>(t) * plane, plane);
    for (auto& b : extract_boxes(frame_mask, map.frame(t), map.height, map.width, t)) {
      if (b.mass > 0.0) boxes.push_back(b);
    }
  }
  return boxes;
}

SaliencyEvalResult run_saliency_eval(const ScorerFactory& scorer, const std::vector<LabeledClip>& clips,
                                     const OcclusionConfig& occlusion, std::int64_t window_length,
                                     bool keep_maps) {
  SaliencyEvalResult result;
  std::int64_t positives = 0;
  for (const auto& lc : clips) {
    if (lc.label != 1) continue;
    ++positives;
    if (lc.boxes.empty()) {
      ++result.skipped;
      continue;
    }
    const std::int64_t start = center_offset(lc.clip.frames, window_length);
    LabeledClip window = lc;
    window.clip = crop_window(lc.clip, start, window_length);
    window.boxes = crop_boxes(lc.boxes, start, window_length);
    const SaliencyMap map = occlusion_saliency(scorer(window), window.clip, occlusion);
    ClipSaliency cs;
    cs.clip_id = lc.clip_id;
    cs.boxes = saliency_boxes(map, occlusion.top_fraction);
    cs.weighted_iou = weighted_iou(cs.boxes, window.boxes);
    result.clips.push_back(std::move(cs));
    if (keep_maps) result.maps.push_back(map);
  }
  if (positives == 0) throw InputError("saliency evaluation needs at least one positive clip");
  if (result.skipped > 0) spdlog::warn("{} positive clip(s) without ground-truth boxes skipped", result.skipped);
  if (!result.clips.empty()) {
    double sum = 0.0;
    for (const auto& c : result.clips) sum += c.weighted_iou;
    result.mean_weighted_iou = sum / static_cast<double>(result.clips.size());
  }
  return result;
}

SaliencyEvalResult run_saliency_eval(const ModelParams& params, const EncoderConfig& encoder,
                                     const std::vector<LabeledClip>& context_pool,
                                     const std::vector<LabeledClip>& clips, const OcclusionConfig& occlusion,
                                     std::int64_t batch_size, bool keep_maps) {
  const std::int64_t length = encoder.input_shape[0];
  auto factory = [&](const LabeledClip& target) {
    std::vector<VideoClip> context;
    for (const auto& c : context_pool) {
      if (static_cast<std::int64_t>(context.size()) + 1 >= batch_size) break;
      if (c.clip_id == target.clip_id) continue;
      context.push_back(crop_window(c.clip, center_offset(c.clip.frames, length), length));
    }
    return model_scorer(params, encoder, 1, std::move(context));
  };
  return run_saliency_eval(factory, clips, occlusion, length, keep_maps);
}

namespace {

nlohmann::json boxes_to_json(const std::vector<PredBox>& boxes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : boxes) {
    arr.push_back({{"frame", b.frame_index}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}, {"mass", b.mass}});
  }
  return arr;
}

}  // namespace

std::string boxes_json(const std::vector<PredBox>& boxes) { return boxes_to_json(boxes).dump(2); }

std::string saliency_json(const SaliencyEvalResult& result) {
  nlohmann::json clips = nlohmann::json::array();
  for (const auto& c : result.clips) {
    clips.push_back({{"clip_id", c.clip_id}, {"weighted_iou", c.weighted_iou}, {"boxes", boxes_to_json(c.boxes)}});
  }
  nlohmann::json j = {
      {"mean_weighted_iou", result.mean_weighted_iou}, {"skipped", result.skipped}, {"clips", clips}};
  return j.dump(2);
}

void write_saliency_map(const std::filesystem::path& path, const SaliencyMap& map) { write_f32(path, map.values); }

}  // namespace stssl

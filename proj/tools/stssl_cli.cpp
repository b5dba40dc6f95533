// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: dataset generation, pretraining, supervised
// training, evaluation, saliency and the experiment sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "stssl/checkpoint.hpp"
#include "stssl/config.hpp"
#include "stssl/errors.hpp"
#include "stssl/harness.hpp"
#include "stssl/metrics.hpp"
#include "stssl/trainer.hpp"

namespace fs = std::filesystem;
using namespace stssl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_experiment_config(path);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig config = config_or_default(config_path);
  if (!config.dataset.synthetic) throw ConfigError("gen-data needs a synthetic dataset config");
  const DatasetManifest data = prepare_dataset(config);
  save_dataset(data, out_dir);
  spdlog::info("wrote {} labeled and {} unlabeled clips to {}", data.labeled.size(), data.unlabeled.size(), out_dir);
}

void cmd_pretrain(const std::string& config_path, const std::string& data_dir, const std::string& out,
                  const std::string& trace) {
  const ExperimentConfig config = config_or_default(config_path);
  const DatasetManifest data = load_dataset(data_dir);
  const PretrainResult result = ssl_pretrain(data.unlabeled_clips(), config.train, config.augmentation,
                                             config.encoder, config.heads);
  Checkpoint ck;
  ck.encoder = config.encoder;
  ck.heads = config.heads;
  ck.params = result.online;
  ck.provenance = {"pretrain", variant_name(config.train.ssl_variant), "", config.train.steps, config.train.seed};
  save_checkpoint(ck, out);
  if (!trace.empty()) {
    auto f = open_output(trace);
    write_loss_trace(f, result.loss_trace);
  }
  spdlog::info("final loss {:.6f}, checkpoint {}", result.loss_trace.back(), out);
}

void cmd_train(const std::string& config_path, const std::string& mode_text, const std::string& data_dir,
               const std::string& init_path, const std::string& out, const std::string& trace) {
  ExperimentConfig config = config_or_default(config_path);
  const TrainMode mode = parse_mode(mode_text);
  const DatasetManifest data = load_dataset(data_dir);
  Checkpoint init;
  if (!init_path.empty()) {
    init = load_checkpoint(init_path);
    if (init.encoder != config.encoder) {
      spdlog::info("using the encoder configuration stored in {}", init_path);
      config.encoder = init.encoder;
    }
  }
  const ClassifierResult result =
      train_classifier(data.labeled_in(Split::kTrain), mode, init_path.empty() ? nullptr : &init.params,
                       config.train, config.augmentation, config.encoder, config.heads);
  Checkpoint ck;
  ck.encoder = config.encoder;
  ck.heads = config.heads;
  ck.params = result.params;
  ck.provenance = {"classifier", init.provenance.variant, mode_name(mode), config.train.classifier_steps,
                   config.train.seed};
  save_checkpoint(ck, out);
  if (!trace.empty()) {
    auto f = open_output(trace);
    write_loss_trace(f, result.loss_trace);
  }
  spdlog::info("trainable {} of {} parameters, checkpoint {}", count_parameters(result.params, true),
               count_parameters(result.params, false), out);
}

void cmd_evaluate(const std::string& ckpt, const std::string& data_dir, const std::string& split_text,
                  std::int64_t batch_size) {
  const Checkpoint ck = load_checkpoint(ckpt);
  const DatasetManifest data = load_dataset(data_dir);
  const auto clips = data.labeled_in(parse_split(split_text));
  if (clips.empty()) throw InputError("split " + split_text + " has no labeled clips");
  const EvalScores s = evaluate_model(ck.params, ck.encoder, clips, ck.encoder.input_shape[0], batch_size);
  const ConfusionMetrics cm = confusion_metrics(s.scores, s.labels);
  std::cout << "accuracy,sensitivity,specificity,auc\n"
            << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f}\n", cm.accuracy, cm.sensitivity, cm.specificity,
                           roc_auc(s.scores, s.labels));
}

void cmd_saliency(const std::string& ckpt, const std::string& data_dir, const std::string& out_dir,
                  const std::string& config_path, const std::string& split_text) {
  const ExperimentConfig config = config_or_default(config_path);
  const Checkpoint ck = load_checkpoint(ckpt);
  const DatasetManifest data = load_dataset(data_dir);
  const auto clips = data.labeled_in(parse_split(split_text));
  const SaliencyEvalResult result =
      run_saliency_eval(ck.params, ck.encoder, clips, clips, config.occlusion, config.train.batch_size, true);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < result.clips.size(); ++i) {
    const auto& clip = result.clips[i];
    write_saliency_map(fs::path(out_dir) / (clip.clip_id + ".saliency.f32"), result.maps[i]);
    open_output(fs::path(out_dir) / (clip.clip_id + ".boxes.json")) << boxes_json(clip.boxes) << '\n';
  }
  open_output(fs::path(out_dir) / "saliency.json") << saliency_json(result) << '\n';
  std::cout << fmt::format("mean_weighted_iou,{:.6f}\n", result.mean_weighted_iou);
}

void cmd_sweep(const std::string& config_path, const std::string& out) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const DatasetManifest data = prepare_dataset(config);
  const auto rows = run_fraction_sweep(config, data);
  auto f = open_output(out);
  write_results_csv(f, rows);
}

void cmd_ablate(const std::string& config_path, const std::string& out) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const DatasetManifest data = prepare_dataset(config);
  const AblationResult result = run_ablation_temporal(config, data);
  auto f = open_output(out);
  write_ablation_csv(f, result);
  std::cout << fmt::format("auc_difference,{:.6f}\n", result.auc_difference);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stssl: self-supervised pretraining and evaluation on 2D+time video"};
  app.require_subcommand(1);
  std::string config, out, data, mode, init, ckpt, split = "test", trace;
  std::int64_t batch_size = TrainConfig{}.batch_size;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset directory");
  gen->add_option("--config", config, "Experiment config JSON");
  gen->add_option("--out", out, "Output directory")->required();

  auto* pre = app.add_subcommand("pretrain", "Self-supervised pretraining on the unlabeled pool");
  pre->add_option("--config", config, "Experiment config JSON");
  pre->add_option("--data", data, "Dataset directory")->required();
  pre->add_option("--out", out, "Output checkpoint")->required();
  pre->add_option("--trace", trace, "Loss trace CSV");

  auto* train = app.add_subcommand("train", "Supervised training in one regime");
  train->add_option("--config", config, "Experiment config JSON");
  train->add_option("--mode", mode, "fully_supervised | ssl_feature_extractor | ssl_fine_tuned | "
                                    "random_feature_extractor")
      ->required();
  train->add_option("--data", data, "Dataset directory")->required();
  train->add_option("--init", init, "Pretrained checkpoint (ssl_* modes)");
  train->add_option("--out", out, "Output checkpoint")->required();
  train->add_option("--trace", trace, "Loss trace CSV");

  auto* eval = app.add_subcommand("evaluate", "Classification metrics on one split");
  eval->add_option("--ckpt", ckpt, "Classifier checkpoint")->required();
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--split", split, "train | val | test");
  eval->add_option("--batch-size", batch_size, "Evaluation batch size (normalization statistics)");

  auto* sal = app.add_subcommand("saliency", "Occlusion saliency and weighted IOU on positive clips");
  sal->add_option("--ckpt", ckpt, "Classifier checkpoint")->required();
  sal->add_option("--data", data, "Dataset directory")->required();
  sal->add_option("--out", out, "Output directory")->required();
  sal->add_option("--config", config, "Experiment config JSON (occlusion settings)");
  sal->add_option("--split", split, "train | val | test");

  auto* sweep = app.add_subcommand("sweep", "Labeled-fraction sweep over all regimes");
  sweep->add_option("--config", config, "Experiment config JSON")->required();
  sweep->add_option("--out", out, "Results CSV")->required();

  auto* ablate = app.add_subcommand("ablate-temporal", "Pretraining with and without temporal augmentation");
  ablate->add_option("--config", config, "Experiment config JSON")->required();
  ablate->add_option("--out", out, "Results CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) cmd_gen_data(config, out);
    if (*pre) cmd_pretrain(config, data, out, trace);
    if (*train) cmd_train(config, mode, data, init, out, trace);
    if (*eval) cmd_evaluate(ckpt, data, split, batch_size);
    if (*sal) cmd_saliency(ckpt, data, out, config, split);
    if (*sweep) cmd_sweep(config, out);
    if (*ablate) cmd_ablate(config, out);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const InputError& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const TrainingError& e) {
    spdlog::error("training error: {}", e.what());
    return kExitTraining;
  } catch (const ComputationError& e) {
    spdlog::error("training error: {}", e.what());
    return kExitTraining;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

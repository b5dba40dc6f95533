// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <spdlog/spdlog.h>

#include "stssl/errors.hpp"

namespace stssl {

const char* variant_name(SslVariant variant) {
  return variant == SslVariant::kByol ? "byol" : "pairwise_contrastive";
}

SslVariant parse_variant(const std::string& name) {
  if (name == "byol") return SslVariant::kByol;
  if (name == "pairwise_contrastive") return SslVariant::kPairwiseContrastive;
  throw ConfigError("unknown ssl_variant '" + name + "'");
}

const char* mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kFullySupervised: return "fully_supervised";
    case TrainMode::kSslFeatureExtractor: return "ssl_feature_extractor";
    case TrainMode::kSslFineTuned: return "ssl_fine_tuned";
    case TrainMode::kRandomFeatureExtractor: return "random_feature_extractor";
  }
  return "unknown";
}

TrainMode parse_mode(const std::string& name) {
  for (auto m : {TrainMode::kFullySupervised, TrainMode::kSslFeatureExtractor, TrainMode::kSslFineTuned,
                 TrainMode::kRandomFeatureExtractor}) {
    if (name == mode_name(m)) return m;
  }
  throw ConfigError("unknown training mode '" + name + "'");
}

bool mode_uses_pretraining(TrainMode mode) {
  return mode == TrainMode::kSslFeatureExtractor || mode == TrainMode::kSslFineTuned;
}

bool mode_freezes_encoder(TrainMode mode) {
  return mode == TrainMode::kSslFeatureExtractor || mode == TrainMode::kRandomFeatureExtractor;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0)) throw ConfigError("ema_momentum must lie in [0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 0 || classifier_steps < 0) throw ConfigError("step counts must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (window_length < 1) throw ConfigError("window_length must be >= 1");
}

void adam_step(ModelParams& params, const std::map<std::string, Tensor>& grads, OptimizerState& state,
               double learning_rate) {
  for (const auto& [name, g] : grads) {
    const auto& p = params.at(name);
    if (p.value.shape() != g.shape()) throw UsageError("gradient shape mismatch for " + name);
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    auto& p = params.at(name);
    if (!p.trainable) continue;
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.empty()) m = Tensor(g.shape(), 0.0f);
    if (v.empty()) v = Tensor(g.shape(), 0.0f);
    if (m.shape() != g.shape() || v.shape() != g.shape()) throw UsageError("optimizer state shape mismatch for " + name);
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      const double gi = g[i];
      const double mi = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * gi;
      const double vi = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = learning_rate * (mi / correction1) / (std::sqrt(vi / correction2) + kAdamEpsilon);
      p.value[i] = static_cast<float>(p.value[i] - update);
    }
  }
}

void ema_update(ModelParams& target, const ModelParams& online, double tau) {
  if (target.entries().size() != online.entries().size()) throw UsageError("ema_update: parameter schemas differ");
  for (auto& [name, t] : target.entries()) {
    if (!online.contains(name)) throw UsageError("ema_update: online network lacks " + name);
    const auto& o = online.at(name).value;
    if (o.shape() != t.value.shape()) throw UsageError("ema_update: shape mismatch for " + name);
    if (tau == 1.0) continue;
    for (std::int64_t i = 0; i < o.numel(); ++i) {
      t.value[i] = static_cast<float>(tau * t.value[i] + (1.0 - tau) * o[i]);
    }
  }
}

namespace {

bool all_finite(const std::map<std::string, Tensor>& grads) {
  for (const auto& [name, g] : grads)
    for (float v : g.data())
      if (!std::isfinite(v)) return false;
  return true;
}

// Batch indices for one step: without replacement from the pool.
std::vector<std::size_t> draw_batch(std::size_t pool, std::int64_t batch, Rng& rng) {
  auto perm = rng.permutation(static_cast<std::int64_t>(pool));
  std::vector<std::size_t> idx;
  for (std::int64_t i = 0; i < batch; ++i) idx.push_back(static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]));
  return idx;
}

AugmentationConfig effective_augmentation(const AugmentationConfig& aug, const TrainConfig& train) {
  AugmentationConfig out = aug;
  out.temporal_enabled = train.temporal_aug_enabled;
  return out;
}

Var ssl_embedding(Binder& bind, const EncoderConfig& encoder, const Tensor& batch, double slope) {
  Var rep = encoder_forward(bind, encoder, bind.tape().constant(batch));
  return mlp_forward(bind, "projector", rep, slope);
}

}  // namespace

PretrainResult ssl_pretrain(const std::vector<VideoClip>& unlabeled, const TrainConfig& train,
                            const AugmentationConfig& augmentation, const EncoderConfig& encoder,
                            const HeadConfig& heads, const PretrainObserver& observer) {
  train.validate();
  encoder.validate();
  heads.validate();
  if (static_cast<std::int64_t>(unlabeled.size()) < train.batch_size) {
    throw ConfigError("pretraining needs at least batch_size (" + std::to_string(train.batch_size) + ") clips, got " +
                      std::to_string(unlabeled.size()));
  }
  if (train.ssl_variant == SslVariant::kPairwiseContrastive && train.batch_size < 2) {
    throw ConfigError("pairwise contrastive pretraining needs batch_size >= 2");
  }
  const auto aug = effective_augmentation(augmentation, train);
  const double slope = encoder.leaky_slope;

  PretrainResult result;
  result.online = make_ssl_params(encoder, heads, mix_seed(train.seed, 0x55));
  if (train.ssl_variant == SslVariant::kByol) result.target = result.online;
  OptimizerState opt;
  if (observer) observer(0, result.online, result.target, 0.0);

  const auto b = static_cast<std::size_t>(train.batch_size);
  for (std::int64_t step = 1; step <= train.steps; ++step) {
    const auto step_seed = mix_seed(train.seed, 0x100000 + static_cast<std::uint64_t>(step));
    Rng batch_rng(step_seed);
    const auto idx = draw_batch(unlabeled.size(), train.batch_size, batch_rng);

    std::vector<VideoClip> view1(b), view2(b);
    bool failed = false;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < b; ++i) {
      try {
        Rng rng(mix_seed(step_seed, i));
        const auto& src = unlabeled[idx[i]];
        const VideoClip window = sample_window(src, train.window_length, rng);
        view1[i] = apply_plan(window, draw_augmentation(aug, window.frames, window.height, window.width, rng));
        view2[i] = apply_plan(window, draw_augmentation(aug, window.frames, window.height, window.width, rng));
      } catch (...) {
#pragma omp atomic write
        failed = true;
      }
    }
    if (failed) throw InputError("could not assemble pretraining batch (window longer than a clip?)");
    const Tensor x1 = make_batch(view1);
    const Tensor x2 = make_batch(view2);

    Tape tape;
    Binder online(tape, result.online, true);
    Var loss;
    try {
      if (train.ssl_variant == SslVariant::kByol) {
        Binder target(tape, result.target, false);
        Var q1 = mlp_forward(online, "predictor", ssl_embedding(online, encoder, x1, slope), slope);
        Var q2 = mlp_forward(online, "predictor", ssl_embedding(online, encoder, x2, slope), slope);
        Var z1 = ssl_embedding(target, encoder, x1, slope);
        Var z2 = ssl_embedding(target, encoder, x2, slope);
        loss = ops::scale(ops::add(ops::byol_loss(q1, z2), ops::byol_loss(q2, z1)), 0.5);
      } else {
        Var z = ops::concat_rows(ssl_embedding(online, encoder, x1, slope), ssl_embedding(online, encoder, x2, slope));
        loss = ops::ntxent_loss(z, train.temperature);
      }
    } catch (const ComputationError& e) {
      throw TrainingError(std::string("degenerate embedding: ") + e.what(), step);
    }
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw TrainingError("non-finite self-supervised loss", step);
    const auto grads = tape.gradients(loss);
    if (!all_finite(grads)) throw TrainingError("non-finite gradient", step);
    adam_step(result.online, grads, opt, train.learning_rate);
    if (train.ssl_variant == SslVariant::kByol) ema_update(result.target, result.online, train.ema_momentum);
    result.loss_trace.push_back(value);
    if (observer) observer(step, result.online, result.target, value);
    if (step % 50 == 0 || step == train.steps) {
      spdlog::debug("pretrain step {}/{} loss {:.5f}", step, train.steps, value);
    }
  }
  return result;
}

ClassifierResult train_classifier(const std::vector<LabeledClip>& labeled, TrainMode mode, const ModelParams* init,
                                  const TrainConfig& train, const AugmentationConfig& augmentation,
                                  const EncoderConfig& encoder, const HeadConfig& heads) {
  train.validate();
  if (mode_uses_pretraining(mode) && init == nullptr) {
    throw ConfigError(std::string(mode_name(mode)) + " requires a pretrained checkpoint");
  }
  if (!mode_uses_pretraining(mode) && init != nullptr) {
    throw ConfigError(std::string(mode_name(mode)) + " must not be given a pretrained checkpoint");
  }
  if (labeled.empty()) throw ConfigError("no labeled clips to train on");

  ClassifierResult result;
  result.params = make_classifier_params(encoder, heads, mix_seed(train.seed, 0x77));
  if (init) {
    const auto pretrained = init->subset("encoder.");
    for (const auto& [name, p] : result.params.entries()) {
      if (name.starts_with("encoder.") && !pretrained.contains(name)) {
        throw ConfigError("pretrained checkpoint lacks " + name + " (encoder config mismatch?)");
      }
    }
    for (const auto& [name, p] : pretrained.entries()) {
      auto& dst = result.params.at(name);
      if (dst.value.shape() != p.value.shape()) throw ConfigError("pretrained tensor " + name + " has wrong shape");
      dst.value = p.value;
    }
  }
  result.params.set_trainable("encoder.", !mode_freezes_encoder(mode));
  result.params.set_trainable("classifier.", true);

  const auto aug = effective_augmentation(augmentation, train);
  const auto n = static_cast<std::int64_t>(labeled.size());
  const auto b = std::min(train.batch_size, n);
  OptimizerState opt;
  Rng order_rng(mix_seed(train.seed, 0x99));
  std::vector<std::int64_t> order;
  std::size_t cursor = 0;

  for (std::int64_t step = 1; step <= train.classifier_steps; ++step) {
    std::vector<std::size_t> idx;
    while (static_cast<std::int64_t>(idx.size()) < b) {
      if (cursor == order.size()) {
        order = order_rng.permutation(n);
        cursor = 0;
      }
      idx.push_back(static_cast<std::size_t>(order[cursor++]));
    }
    const auto step_seed = mix_seed(train.seed, 0x200000 + static_cast<std::uint64_t>(step));
    std::vector<VideoClip> views(idx.size());
    std::vector<int> labels(idx.size());
    bool failed = false;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < idx.size(); ++i) {
      try {
        Rng rng(mix_seed(step_seed, i));
        const auto& src = labeled[idx[i]];
        VideoClip window = sample_window(src.clip, train.window_length, rng);
        if (train.augment_enabled) {
          window = apply_plan(window, draw_augmentation(aug, window.frames, window.height, window.width, rng));
        }
        views[i] = std::move(window);
        labels[i] = src.label;
      } catch (...) {
#pragma omp atomic write
        failed = true;
      }
    }
    if (failed) throw InputError("could not assemble supervised batch (window longer than a clip?)");

    Tape tape;
    Binder bind(tape, result.params, true);
    Var logits = classifier_forward(bind, encoder_forward(bind, encoder, tape.constant(make_batch(views))));
    Var loss = ops::cross_entropy(logits, labels);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw TrainingError("non-finite classification loss", step);
    const auto grads = tape.gradients(loss);
    if (!all_finite(grads)) throw TrainingError("non-finite gradient", step);
    adam_step(result.params, grads, opt, train.learning_rate);
    result.loss_trace.push_back(value);
  }
  return result;
}

EvalScores evaluate_model(const ModelParams& params, const EncoderConfig& encoder,
                          const std::vector<LabeledClip>& clips, std::int64_t window_length,
                          std::int64_t batch_size) {
  if (!params.contains("classifier.weight")) throw UsageError("checkpoint has no classifier head");
  if (batch_size < 1) throw ConfigError("evaluation batch size must be >= 1");
  EvalScores out;
  out.scores.resize(clips.size());
  out.labels.resize(clips.size());
  const auto n = static_cast<std::int64_t>(clips.size());
  const auto n_batches = (n + batch_size - 1) / batch_size;
  std::vector<std::string> errors(static_cast<std::size_t>(n_batches));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < n_batches; ++b) {
    try {
      const auto begin = b * batch_size, end = std::min(n, begin + batch_size);
      std::vector<VideoClip> windows;
      for (auto i = begin; i < end; ++i) {
        const auto& c = clips[static_cast<std::size_t>(i)];
        windows.push_back(crop_window(c.clip, center_offset(c.clip.frames, window_length), window_length));
      }
      const auto probs = predict_probabilities(params, encoder, windows, 1);
      for (auto i = begin; i < end; ++i) {
        out.scores[static_cast<std::size_t>(i)] = probs[static_cast<std::size_t>(i - begin)];
        out.labels[static_cast<std::size_t>(i)] = clips[static_cast<std::size_t>(i)].label;
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(b)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw UsageError("evaluation failed: " + e);
  return out;
}

void write_loss_trace(std::ostream& out, const std::vector<double>& trace) {
  out << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i + 1, trace[i]);
    out << buf;
  }
}

}  // namespace stssl

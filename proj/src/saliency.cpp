// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "stssl/errors.hpp"

namespace stssl {

Scorer model_scorer(const ModelParams& params, const EncoderConfig& encoder, std::int64_t class_index,
                    std::vector<VideoClip> context) {
  if (!params.contains("classifier.weight")) throw UsageError("saliency needs a checkpoint with a classifier head");
  const auto classes = params.at("classifier.weight").value.dim(0);
  if (class_index < 0 || class_index >= classes) throw InputError("class index out of range");
  return [&params, encoder, class_index, context = std::move(context)](const VideoClip& clip) {
    std::vector<VideoClip> batch;
    batch.reserve(context.size() + 1);
    batch.push_back(clip);
    batch.insert(batch.end(), context.begin(), context.end());
    return predict_probabilities(params, encoder, batch, class_index).front();
  };
}

std::vector<std::int64_t> occlusion_positions(std::int64_t extent, std::int64_t window, std::int64_t stride) {
  std::vector<std::int64_t> pos;
  for (std::int64_t p = 0; p + window <= extent; p += stride) pos.push_back(p);
  if (pos.empty() || pos.back() + window < extent) pos.push_back(extent - window);
  return pos;
}

SaliencyMap occlusion_saliency(const Scorer& scorer, const VideoClip& clip, const OcclusionConfig& config) {
  const auto& w = config.window;
  const auto& s = config.stride;
  for (int a = 0; a < 3; ++a) {
    if (w[a] < 1 || s[a] < 1) throw ConfigError("occlusion window and stride must be positive");
  }
  if (w[0] > clip.frames || w[1] > clip.height || w[2] > clip.width) {
    throw ConfigError("occlusion window larger than the clip");
  }
  const auto pt = occlusion_positions(clip.frames, w[0], s[0]);
  const auto ph = occlusion_positions(clip.height, w[1], s[1]);
  const auto pw = occlusion_positions(clip.width, w[2], s[2]);
  const auto n_windows = static_cast<std::int64_t>(pt.size() * ph.size() * pw.size());

  double sum = 0.0;
  for (float v : clip.pixels) sum += v;
  const auto baseline = static_cast<float>(sum / static_cast<double>(clip.pixels.size()));
  const double reference = scorer(clip);

  std::vector<double> drops(static_cast<std::size_t>(n_windows));
  auto corner = [&](std::int64_t k) {
    const auto iw = static_cast<std::size_t>(k % static_cast<std::int64_t>(pw.size()));
    const auto rest = k / static_cast<std::int64_t>(pw.size());
    const auto ih = static_cast<std::size_t>(rest % static_cast<std::int64_t>(ph.size()));
    const auto it = static_cast<std::size_t>(rest / static_cast<std::int64_t>(ph.size()));
    return std::array<std::int64_t, 3>{pt[it], ph[ih], pw[iw]};
  };

#pragma omp parallel
  {
    VideoClip occluded = clip;
#pragma omp for schedule(dynamic)
    for (std::int64_t k = 0; k < n_windows; ++k) {
      const auto c = corner(k);
      for (std::int64_t t = c[0]; t < c[0] + w[0]; ++t)
        for (std::int64_t y = c[1]; y < c[1] + w[1]; ++y)
          for (std::int64_t x = c[2]; x < c[2] + w[2]; ++x) occluded.at(t, y, x) = baseline;
      drops[static_cast<std::size_t>(k)] = reference - scorer(occluded);
      for (std::int64_t t = c[0]; t < c[0] + w[0]; ++t)
        for (std::int64_t y = c[1]; y < c[1] + w[1]; ++y)
          for (std::int64_t x = c[2]; x < c[2] + w[2]; ++x) occluded.at(t, y, x) = clip.at(t, y, x);
    }
  }

  std::vector<double> total(static_cast<std::size_t>(clip.size()), 0.0);
  std::vector<std::int32_t> cover(static_cast<std::size_t>(clip.size()), 0);
  for (std::int64_t k = 0; k < n_windows; ++k) {
    const auto c = corner(k);
    const double d = drops[static_cast<std::size_t>(k)];
    for (std::int64_t t = c[0]; t < c[0] + w[0]; ++t)
      for (std::int64_t y = c[1]; y < c[1] + w[1]; ++y)
        for (std::int64_t x = c[2]; x < c[2] + w[2]; ++x) {
          const auto i = static_cast<std::size_t>((t * clip.height + y) * clip.width + x);
          total[i] += d;
          ++cover[i];
        }
  }
  SaliencyMap map{clip.frames, clip.height, clip.width, std::vector<float>(total.size())};
  for (std::size_t i = 0; i < total.size(); ++i) {
    map.values[i] = static_cast<float>(std::max(0.0, total[i] / cover[i]));
  }
  return map;
}

SaliencyMap occlusion_saliency(const ModelParams& params, const EncoderConfig& encoder, const VideoClip& clip,
                               std::int64_t class_index, const OcclusionConfig& config) {
  return occlusion_saliency(model_scorer(params, encoder, class_index), clip, config);
}

std::vector<std::uint8_t> threshold_top_fraction(const SaliencyMap& map, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("threshold fraction must lie in (0, 1]");
  const auto plane = map.height * map.width;
  const auto keep = std::min<std::int64_t>(
      plane, static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(plane) - 1e-9)));
  std::vector<std::uint8_t> mask(map.values.size(), 0);
  std::vector<std::int64_t> order(static_cast<std::size_t>(plane));
  for (std::int64_t t = 0; t < map.frames; ++t) {
    const auto values = map.frame(t);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](std::int64_t a, std::int64_t b) {
      const float va = values[static_cast<std::size_t>(a)];
      const float vb = values[static_cast<std::size_t>(b)];
      return va > vb || (va == vb && a < b);
    });
    for (std::int64_t i = 0; i < keep; ++i) mask[static_cast<std::size_t>(t * plane + order[static_cast<std::size_t>(i)])] = 1;
  }
  return mask;
}

std::vector<PredBox> extract_boxes(std::span<const std::uint8_t> mask, std::span<const float> saliency,
                                   std::int64_t height, std::int64_t width, std::int64_t frame_index) {
  const auto plane = static_cast<std::size_t>(height * width);
  if (mask.size() != plane || saliency.size() != plane) throw InputError("mask and saliency frame shapes differ");
  std::vector<std::uint8_t> seen(plane, 0);
  std::vector<std::int64_t> stack;
  std::vector<PredBox> boxes;
  for (std::int64_t start = 0; start < static_cast<std::int64_t>(plane); ++start) {
    if (!mask[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) continue;
    PredBox box{frame_index, width, height, 0, 0, 0.0};
    std::int64_t pixels = 0;
    stack.assign(1, start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      const auto y = p / width, x = p % width;
      ++pixels;
      box.mass += saliency[static_cast<std::size_t>(p)];
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= height || nx < 0 || nx >= width) continue;
          const auto q = static_cast<std::size_t>(ny * width + nx);
          if (mask[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(static_cast<std::int64_t>(q));
          }
        }
    }
    if (pixels >= 4) boxes.push_back(box);
  }
  return boxes;
}

double box_iou(std::int64_t ax0, std::int64_t ay0, std::int64_t ax1, std::int64_t ay1, std::int64_t bx0,
               std::int64_t by0, std::int64_t bx1, std::int64_t by1) {
  const auto iw = std::max<std::int64_t>(0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const auto ih = std::max<std::int64_t>(0, std::min(ay1, by1) - std::max(ay0, by0));
  const auto inter = iw * ih;
  const auto uni = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double box_iou(const PredBox& a, const GroundTruthBox& b) {
  return box_iou(a.x0, a.y0, a.x1, a.y1, b.x0, b.y0, b.x1, b.y1);
}

double weighted_iou(const std::vector<PredBox>& pred, const std::vector<GroundTruthBox>& gt) {
  std::map<std::int64_t, std::vector<const PredBox*>> pred_by_frame;
  std::map<std::int64_t, std::vector<const GroundTruthBox*>> gt_by_frame;
  std::set<std::int64_t> frames;
  for (const auto& p : pred) {
    pred_by_frame[p.frame_index].push_back(&p);
    frames.insert(p.frame_index);
  }
  for (const auto& g : gt) {
    gt_by_frame[g.frame_index].push_back(&g);
    frames.insert(g.frame_index);
  }
  double total = 0.0;
  std::int64_t scored = 0;
  for (auto f : frames) {
    ++scored;
    const auto pit = pred_by_frame.find(f);
    const auto git = gt_by_frame.find(f);
    if (pit == pred_by_frame.end() || git == gt_by_frame.end()) continue;
    double mass = 0.0;
    for (const auto* p : pit->second) mass += p->mass;
    if (!(mass > 0.0)) continue;
    double frame_score = 0.0;
    for (const auto* p : pit->second) {
      double best = 0.0;
      for (const auto* g : git->second) best = std::max(best, box_iou(*p, *g));
      frame_score += (p->mass / mass) * best;
    }
    total += frame_score;
  }
  return scored ? std::clamp(total / static_cast<double>(scored), 0.0, 1.0) : 0.0;
}

}  // namespace stssl

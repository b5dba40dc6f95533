// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "stssl/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "stssl/errors.hpp"

namespace stssl {

namespace {

void check_scored_set(std::span<const double> scores, std::span<const int> labels, std::size_t& positives,
                      std::size_t& negatives) {
  if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
  if (scores.empty()) throw MetricError("empty scored set");
  positives = negatives = 0;
  for (int l : labels) {
    if (l == 1) ++positives;
    else if (l == 0) ++negatives;
    else throw MetricError("labels must be 0 or 1");
  }
  if (positives == 0 || negatives == 0) throw MetricError("metric needs both classes present");
}

}  // namespace

ConfusionMetrics confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  std::size_t p = 0, n = 0;
  check_scored_set(scores, labels, p, n);
  std::size_t tp = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1 && predicted) ++tp;
    if (labels[i] == 0 && !predicted) ++tn;
  }
  return {static_cast<double>(tp + tn) / static_cast<double>(p + n), static_cast<double>(tp) / static_cast<double>(p),
          static_cast<double>(tn) / static_cast<double>(n)};
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t p = 0, n = 0;
  check_scored_set(scores, labels, p, n);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // sum of positive midranks (1-based); tied groups share their average rank
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum += midrank;
    i = j;
  }
  const double pd = static_cast<double>(p);
  const double u = rank_sum - pd * (pd + 1.0) / 2.0;
  return u / (pd * static_cast<double>(n));
}

}  // namespace stssl

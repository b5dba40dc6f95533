// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

namespace stssl {

struct ConfusionMetrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

/// Predicts positive when score >= threshold. Throws MetricError unless both
/// classes are present.
ConfusionMetrics confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                                   double threshold = 0.5);

/// Mann-Whitney estimate: fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Throws MetricError on single-class input.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace stssl

// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <vector>

#include "stssl/errors.hpp"
#include "stssl/metrics.hpp"
#include "stssl/random.hpp"

using namespace stssl;

namespace {

// Pairwise win counting with ties as half wins.
double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  return wins / pairs;
}

}  // namespace

TEST_CASE("confusion metrics") {
  {
    const std::vector<double> s{0.9, 0.8, 0.1, 0.2};
    const std::vector<int> y{1, 1, 0, 0};
    const auto m = confusion_metrics(s, y);
    CHECK(m.accuracy == 1.0);
    CHECK(m.sensitivity == 1.0);
    CHECK(m.specificity == 1.0);
  }
  {
    const std::vector<double> s{1.0, 1.0, 1.0, 1.0};
    const std::vector<int> y{1, 0, 1, 0};
    const auto m = confusion_metrics(s, y);
    CHECK(m.accuracy == 0.5);
    CHECK(m.sensitivity == 1.0);
    CHECK(m.specificity == 0.0);
  }
  {
    const std::vector<double> s{0.9, 0.2, 0.6, 0.4};
    const std::vector<int> y{1, 0, 0, 1};
    const auto m = confusion_metrics(s, y);
    CHECK(m.accuracy == 0.5);
    CHECK(m.sensitivity == 0.5);
    CHECK(m.specificity == 0.5);
  }
  {
    // threshold boundary: a score of exactly 0.5 is a positive call
    const std::vector<double> s{0.5, 0.49};
    const std::vector<int> y{1, 0};
    CHECK(confusion_metrics(s, y).accuracy == 1.0);
  }
}

TEST_CASE("confusion metrics stay consistent with class counts") {
  Rng rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 30));
    std::vector<double> s(n);
    std::vector<int> y(n);
    double p = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform(0.0, 1.0);
      y[i] = i < 2 ? static_cast<int>(i) : (rng.bernoulli(0.4) ? 1 : 0);
      p += y[i];
    }
    const auto m = confusion_metrics(s, y);
    for (double v : {m.accuracy, m.sensitivity, m.specificity}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const double neg = static_cast<double>(n) - p;
    CHECK(m.accuracy == doctest::Approx((m.sensitivity * p + m.specificity * neg) / static_cast<double>(n)));
  }
}

TEST_CASE("confusion metrics errors") {
  const std::vector<double> s{0.1, 0.2};
  CHECK_THROWS_AS(confusion_metrics(s, std::vector<int>{1, 1}), MetricError);
  CHECK_THROWS_AS(confusion_metrics(s, std::vector<int>{1}), MetricError);
  CHECK_THROWS_AS(confusion_metrics(s, std::vector<int>{0, 2}), MetricError);
  CHECK_THROWS_AS(roc_auc(s, std::vector<int>{0, 0}), MetricError);
}

TEST_CASE("roc auc examples") {
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<int>{0, 1, 0, 1}) == 0.5);
  CHECK(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == doctest::Approx(0.75));
}

TEST_CASE("roc auc agrees with pairwise counting and respects its symmetries") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 40));
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid so ties are common
      s[i] = static_cast<double>(rng.uniform_int(0, 6)) / 6.0;
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    const double auc = roc_auc(s, y);
    CHECK(auc == doctest::Approx(brute_auc(s, y)).epsilon(1e-12));
    CHECK(auc >= 0.0);
    CHECK(auc <= 1.0);

    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
    CHECK(roc_auc(s, flipped) == doctest::Approx(1.0 - auc).epsilon(1e-12));
    std::vector<double> negated(n);
    for (std::size_t i = 0; i < n; ++i) negated[i] = -s[i];
    CHECK(roc_auc(negated, flipped) == doctest::Approx(auc).epsilon(1e-12));

    // strictly increasing transform
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = 3.0 * s[i] * s[i] * s[i] + 0.1;
    CHECK(roc_auc(t, y) == doctest::Approx(auc).epsilon(1e-12));
  }
}

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

#include <boost/math/distributions/students_t.hpp>

namespace podtile {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

inline MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

struct PairedTTest {
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;  // two-sided
  std::size_t n = 0;
};

/// Two-sided paired Student t-test on a - b. Needs at least two pairs.
inline std::optional<PairedTTest> paired_t_test(std::span<const double> a,
                                                std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  PairedTTest out;
  out.n = n;
  out.mean_difference = mean;
  if (sd == 0.0) {
    out.t_statistic = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    out.p_value = mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t_statistic)));
  return out;
}

}  // namespace podtile

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "lpoison/error.hpp"

namespace lpoison::stats {

namespace detail {

// Sum over runs of equal values of t(t-1)/2; `order` must sort `key`.
template <typename Key>
std::int64_t tied_pairs(const std::vector<std::size_t>& order, Key key) {
  std::int64_t ties = 0, run = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (key(order[i]) == key(order[i - 1])) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties + run * (run - 1) / 2;
}

// Stable merge sort of `idx` by b, returning the number of inversions.
inline std::int64_t merge_count(std::vector<std::size_t>& idx, std::vector<std::size_t>& buf,
                                std::span<const double> b, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(idx, buf, b, lo, mid) + merge_count(idx, buf, b, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (b[idx[j]] < b[idx[i]]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = idx[j++];
    } else {
      buf[k++] = idx[i++];
    }
  }
  while (i < mid) buf[k++] = idx[i++];
  while (j < hi) buf[k++] = idx[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            idx.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace detail

/// Kendall tau-b (tie corrected), O(n log n) via Knight's merge-sort method.
/// Empty when either input is constant.
inline std::optional<double> kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("kendall_tau: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const std::size_t n = a.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]);
  });
  const std::int64_t total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t ties_a = detail::tied_pairs(idx, [&](std::size_t i) { return a[i]; });

  // Pairs tied in both a and b.
  std::int64_t ties_ab = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (a[idx[i]] == a[idx[i - 1]] && b[idx[i]] == b[idx[i - 1]]) {
      ++run;
    } else {
      ties_ab += run * (run - 1) / 2;
      run = 1;
    }
  }
  ties_ab += run * (run - 1) / 2;

  std::vector<std::size_t> buf(n);
  const std::int64_t swaps = detail::merge_count(idx, buf, b, 0, n);
  const std::int64_t ties_b = detail::tied_pairs(idx, [&](std::size_t i) { return b[i]; });

  const std::int64_t denom_a = total - ties_a;
  const std::int64_t denom_b = total - ties_b;
  if (denom_a == 0 || denom_b == 0) return std::nullopt;
  const double s = static_cast<double>(total - ties_a - ties_b + ties_ab - 2 * swaps);
  return s / std::sqrt(static_cast<double>(denom_a)) / std::sqrt(static_cast<double>(denom_b));
}

/// Pearson correlation, empty on zero variance.
inline std::optional<double> pearson_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("pearson_r: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

inline Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ValidationError("summarize: no values");
  Summary s;
  s.count = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

inline double median(std::span<const double> values) { return summarize(values).median; }

}  // namespace lpoison::stats

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scorematch {

// Pairwise (cascade) summation with a fixed split point. The result depends
// only on the values and their order, never on threading.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kBlock = 8;
  if (v.size() <= kBlock) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Mean of `terms`, or the weighted mean when `weights` is non-empty.
inline double pairwise_mean(std::span<const double> terms, std::span<const double> weights) {
  if (weights.empty()) return pairwise_sum(terms) / static_cast<double>(terms.size());
  std::vector<double> wt(terms.size());
  for (std::size_t n = 0; n < terms.size(); ++n) wt[n] = weights[n] * terms[n];
  return pairwise_sum(wt) / pairwise_sum(weights);
}

}  // namespace scorematch

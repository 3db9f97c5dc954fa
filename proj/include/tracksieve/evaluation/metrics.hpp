#pragma once

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "tracksieve/error.hpp"

namespace tracksieve {

// 1-based ranks of `v` in ascending order; tied values share their midrank.
inline std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double r = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Mann-Whitney AUC with midranks; labels are 1 (tracking) or 0.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double n_pos = 0, n_neg = 0, rank_sum = 0;
  std::vector<double> r = midranks(scores);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      n_pos += 1;
      rank_sum += r[i];
    } else {
      n_neg += 1;
    }
  }
  if (n_pos == 0 || n_neg == 0) throw Error(Errc::kSingleClassData, "AUC needs both classes");
  return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg);
}

struct SensSpec {
  double sensitivity = 0;
  double specificity = 0;
};

// Crisp rule: score >= threshold means tracking.
inline SensSpec sensitivity_specificity(const std::vector<double>& scores,
                                        const std::vector<int>& labels, double threshold) {
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool flagged = scores[i] >= threshold;
    if (labels[i] == 1) (flagged ? tp : fn) += 1;
    else (flagged ? fp : tn) += 1;
  }
  if (tp + fn == 0 || tn + fp == 0)
    throw Error(Errc::kSingleClassData, "sensitivity/specificity need both classes");
  return {tp / (tp + fn), tn / (tn + fp)};
}

// Largest observed score t whose sensitivity reaches `target`; the minimum
// score when none does (everything flagged).
inline double tune_threshold(const std::vector<double>& scores, const std::vector<int>& labels,
                             double target = 0.9999) {
  std::vector<double> pos;
  std::size_t n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) pos.push_back(scores[i]);
    else ++n_neg;
  }
  if (pos.empty() || n_neg == 0) throw Error(Errc::kSingleClassData, "threshold tuning needs both classes");
  std::vector<double> candidates = scores;
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::sort(pos.begin(), pos.end(), std::greater<>());
  const double n_pos = double(pos.size());
  std::size_t covered = 0;  // positives with score >= current candidate
  for (double t : candidates) {
    while (covered < pos.size() && pos[covered] >= t) ++covered;
    if (double(covered) / n_pos >= target) return t;
  }
  return candidates.back();
}

}  // namespace tracksieve

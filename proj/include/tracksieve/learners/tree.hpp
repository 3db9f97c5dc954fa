#pragma once

// CART with exact midpoint splits.
//
// Splits minimize the summed squared error of the children. For 0/1
// targets the squared error of a node equals half its size-weighted Gini
// impurity, so the same search serves classification (Gini) and the
// regression trees inside boosting.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tracksieve/rng.hpp"

namespace tracksieve {

enum class SplitCriterion { kGini, kSquaredError };

struct TreeParams {
  int max_depth = -1;  // -1: unlimited
  std::size_t min_leaf = 1;
  std::size_t mtry = 0;  // 0: every feature at every node
  SplitCriterion criterion = SplitCriterion::kGini;
};

// Flat node arrays; feature < 0 marks a leaf. Left child takes x <= threshold.
struct Tree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;
  std::vector<double> gain;

  std::size_t size() const { return feature.size(); }

  std::size_t add_leaf(double v) {
    feature.push_back(-1);
    threshold.push_back(0);
    left.push_back(-1);
    right.push_back(-1);
    value.push_back(v);
    gain.push_back(0);
    return feature.size() - 1;
  }

  std::size_t leaf_index(const double* x) const {
    std::size_t n = 0;
    while (feature[n] >= 0)
      n = std::size_t(x[feature[n]] <= threshold[n] ? left[n] : right[n]);
    return n;
  }

  double predict(const double* x) const { return value[leaf_index(x)]; }

  int depth() const {
    std::vector<int> d(size(), 0);
    int best = 0;
    for (std::size_t n = 0; n < size(); ++n) {
      best = std::max(best, d[n]);
      if (feature[n] >= 0) d[std::size_t(left[n])] = d[std::size_t(right[n])] = d[n] + 1;
    }
    return best;
  }
};

struct Split {
  int feature = -1;
  double threshold = 0;
  double gain = 0;  // reduction in squared error
};

inline constexpr double kMinSplitGain = 1e-12;

// Row-major design matrix with `cols` columns and a real target per row.
struct TreeData {
  const double* x = nullptr;
  std::size_t cols = 0;
  const double* target = nullptr;
  double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
};

namespace tree_detail {

inline double midpoint(double lo, double hi) {
  double m = lo + (hi - lo) / 2;
  return m >= hi ? lo : m;
}

}  // namespace tree_detail

// Best split of `rows` over `features` (scanned in the given order, which
// should be ascending). A candidate must beat the incumbent by more than
// 1e-12 relative, so ties keep the lowest feature and then the lowest
// threshold.
inline Split best_split(const TreeData& data, const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& features, std::size_t min_leaf = 1) {
  Split best;
  const std::size_t n = rows.size();
  if (n < 2 * std::max<std::size_t>(min_leaf, 1)) return best;
  double sum = 0, sumsq = 0;
  for (std::size_t r : rows) {
    sum += data.target[r];
    sumsq += data.target[r] * data.target[r];
  }
  const double parent_sse = sumsq - sum * sum / double(n);
  if (parent_sse <= kMinSplitGain) return best;

  std::vector<std::pair<double, double>> col(n);  // (feature value, target)
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) col[i] = {data.at(rows[i], f), data.target[rows[i]]};
    std::sort(col.begin(), col.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (col.front().first == col.back().first) continue;
    double left_sum = 0, left_sq = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += col[i].second;
      left_sq += col[i].second * col[i].second;
      if (col[i].first == col[i + 1].first) continue;
      std::size_t nl = i + 1, nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      double right_sum = sum - left_sum, right_sq = sumsq - left_sq;
      double sse = (left_sq - left_sum * left_sum / double(nl)) +
                   (right_sq - right_sum * right_sum / double(nr));
      double gain = parent_sse - sse;
      double margin = kMinSplitGain * std::max(1.0, std::abs(best.gain));
      if (gain > kMinSplitGain && (best.feature < 0 || gain > best.gain + margin)) {
        best.feature = int(f);
        best.threshold = tree_detail::midpoint(col[i].first, col[i + 1].first);
        best.gain = gain;
      }
    }
  }
  return best;
}

namespace tree_detail {

struct Builder {
  const TreeData& data;
  const TreeParams& params;
  Rng* rng;
  Tree tree;

  double mean(const std::vector<std::size_t>& rows) const {
    double s = 0;
    for (std::size_t r : rows) s += data.target[r];
    return rows.empty() ? 0.0 : s / double(rows.size());
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> f;
    if (params.mtry == 0 || params.mtry >= data.cols) {
      f.resize(data.cols);
      for (std::size_t j = 0; j < data.cols; ++j) f[j] = j;
    } else {
      f = sample_without_replacement(data.cols, params.mtry, *rng);
      std::sort(f.begin(), f.end());
    }
    return f;
  }

  std::size_t grow(const std::vector<std::size_t>& rows, int depth) {
    std::size_t node = tree.add_leaf(mean(rows));
    if (params.max_depth >= 0 && depth >= params.max_depth) return node;
    Split s = best_split(data, rows, candidate_features(), params.min_leaf);
    if (s.feature < 0) return node;
    std::vector<std::size_t> l, r;
    for (std::size_t row : rows)
      (data.at(row, std::size_t(s.feature)) <= s.threshold ? l : r).push_back(row);
    tree.feature[node] = s.feature;
    tree.threshold[node] = s.threshold;
    tree.gain[node] = params.criterion == SplitCriterion::kGini ? 2.0 * s.gain : s.gain;
    std::size_t li = grow(l, depth + 1);
    tree.left[node] = int(li);
    std::size_t ri = grow(r, depth + 1);
    tree.right[node] = int(ri);
    return node;
  }
};

}  // namespace tree_detail

// Grows a tree on `rows` (which may repeat, as in a bootstrap sample).
// `rng` is required only when params.mtry restricts the candidate features.
inline Tree fit_tree(const TreeData& data, const std::vector<std::size_t>& rows,
                     const TreeParams& params, Rng* rng = nullptr) {
  tree_detail::Builder b{data, params, rng, {}};
  if (rows.empty()) {
    b.tree.add_leaf(0.0);
    return b.tree;
  }
  b.grow(rows, 0);
  return b.tree;
}

}  // namespace tracksieve

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "tracksieve/error.hpp"
#include "tracksieve/evaluation/metrics.hpp"

namespace tracksieve {

// Ranks of one repetition's AUCs: best (highest) AUC gets rank 1, ties share
// the midrank.
inline std::vector<double> ranks_from_auc(const std::vector<double>& aucs) {
  std::vector<double> neg(aucs.size());
  for (std::size_t j = 0; j < aucs.size(); ++j) neg[j] = -aucs[j];
  return midranks(neg);
}

struct FriedmanResult {
  double statistic = 0;
  double p_value = 1;
  std::vector<double> average_ranks;
};

// rank_matrix: one row per repetition, one column per classifier. The
// statistic is the tie-corrected form
//   (k-1) [sum_j R_j^2 - N^2 k (k+1)^2 / 4] / [sum_ij r_ij^2 - N k (k+1)^2 / 4]
// with R_j the column rank sums, which reduces to
//   12N / (k(k+1)) * sum_j (Rbar_j - (k+1)/2)^2
// when no row has ties.
inline FriedmanResult friedman_test(const std::vector<std::vector<double>>& rank_matrix) {
  const std::size_t n = rank_matrix.size();
  const std::size_t k = n ? rank_matrix.front().size() : 0;
  if (k < 2 || n < 2) throw Error(Errc::kDegenerateInput, "Friedman test needs k >= 2 and N >= 2");
  for (const auto& row : rank_matrix)
    if (row.size() != k) throw Error(Errc::kDegenerateInput, "ragged rank matrix");
  FriedmanResult r;
  r.average_ranks.assign(k, 0.0);
  double sum_sq_cells = 0;
  for (const auto& row : rank_matrix)
    for (std::size_t j = 0; j < k; ++j) {
      r.average_ranks[j] += row[j];
      sum_sq_cells += row[j] * row[j];
    }
  const double N = double(n), K = double(k);
  double sum_sq_totals = 0;
  for (double total : r.average_ranks) sum_sq_totals += total * total;
  for (double& a : r.average_ranks) a /= N;
  const double c = N * K * (K + 1) * (K + 1) / 4.0;
  const double denom = sum_sq_cells - c;
  if (!(denom > 1e-12)) throw Error(Errc::kDegenerateInput, "all ranks tied in every row");
  r.statistic = (K - 1) * (sum_sq_totals - N * c) / denom;
  if (r.statistic < 0 && r.statistic > -1e-9) r.statistic = 0;
  boost::math::chi_squared dist(K - 1);
  r.p_value = r.statistic <= 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

// Rom (1990) critical constants c_1..c_m for level alpha:
//   c_1 = alpha, c_2 = alpha/2,
//   c_i = (sum_{j=1}^{i-1} alpha^j - sum_{j=1}^{i-2} C(i,j) c_{j+1}^{i-j}) / i.
inline std::vector<double> rom_constants(std::size_t m, double alpha) {
  std::vector<double> c(m + 1, 0.0);  // 1-based
  if (m >= 1) c[1] = alpha;
  if (m >= 2) c[2] = alpha / 2;
  for (std::size_t i = 3; i <= m; ++i) {
    double s = 0;
    for (std::size_t j = 1; j <= i - 1; ++j) s += std::pow(alpha, double(j));
    for (std::size_t j = 1; j <= i - 2; ++j) {
      double binom = std::exp(std::lgamma(double(i) + 1) - std::lgamma(double(j) + 1) -
                              std::lgamma(double(i - j) + 1));
      s -= binom * std::pow(c[j + 1], double(i - j));
    }
    c[i] = s / double(i);
  }
  return {c.begin() + 1, c.end()};
}

// Step-up decisions at level alpha: with p sorted ascending, find the
// largest i such that p_(i) <= c_{m-i+1}, and reject H_(1..i).
inline std::vector<bool> rom_reject(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  auto c = rom_constants(m, alpha);
  std::vector<bool> reject(m, false);
  for (std::size_t i = m; i >= 1; --i) {
    if (p[order[i - 1]] <= c[m - i]) {
      for (std::size_t r = 0; r < i; ++r) reject[order[r]] = true;
      break;
    }
  }
  return reject;
}

// Adjusted p-value of each hypothesis: the smallest alpha at which the Rom
// procedure rejects it, found by bisection (rejection is monotone in alpha).
inline std::vector<double> rom_adjust(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<double> adj(m, 1.0);
  if (m == 1) {
    adj[0] = std::min(1.0, p[0]);
    return adj;
  }
  for (std::size_t h = 0; h < m; ++h) {
    if (!rom_reject(p, 1.0)[h]) continue;
    double lo = 0, hi = 1;
    for (int it = 0; it < 100; ++it) {
      double mid = (lo + hi) / 2;
      (rom_reject(p, mid)[h] ? hi : lo) = mid;
    }
    adj[h] = hi;
  }
  return adj;
}

struct PairwiseComparison {
  std::size_t control = 0;  // index of the best (lowest) average rank
  std::vector<double> z;    // per classifier; 0 for the control
  std::vector<double> p_raw;
  std::vector<double> p_adjusted;
};

// z_j = (Rbar_j - Rbar_best) / sqrt(k(k+1)/(6N)), two-sided normal p-values,
// Rom adjustment over the k-1 comparisons with the control.
inline PairwiseComparison pairwise_vs_best(const std::vector<double>& average_ranks, std::size_t n) {
  const std::size_t k = average_ranks.size();
  if (k < 2 || n < 1) throw Error(Errc::kDegenerateInput, "need k >= 2 classifiers");
  PairwiseComparison out;
  out.control = std::size_t(std::min_element(average_ranks.begin(), average_ranks.end()) -
                            average_ranks.begin());
  const double se = std::sqrt(double(k) * double(k + 1) / (6.0 * double(n)));
  boost::math::normal normal;
  out.z.assign(k, 0.0);
  out.p_raw.assign(k, 1.0);
  out.p_adjusted.assign(k, 1.0);
  std::vector<double> p;
  std::vector<std::size_t> who;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == out.control) continue;
    out.z[j] = (average_ranks[j] - average_ranks[out.control]) / se;
    out.p_raw[j] = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(normal, std::abs(out.z[j]))));
    p.push_back(out.p_raw[j]);
    who.push_back(j);
  }
  auto adj = rom_adjust(p);
  for (std::size_t t = 0; t < who.size(); ++t) out.p_adjusted[who[t]] = adj[t];
  return out;
}

}  // namespace tracksieve

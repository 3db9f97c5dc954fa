#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/evaluation/metrics.hpp"
#include "tracksieve/learners/dataset.hpp"
#include "tracksieve/learners/model.hpp"
#include "tracksieve/rng.hpp"

namespace tracksieve {

inline constexpr std::size_t kPerClassPerEmail = 2;

// Per email (in email-id order) up to two tracking and up to two content
// rows, drawn uniformly without replacement. Each email draws from its own
// stream derived from the seed and its id.
inline Dataset resample_training(const Dataset& ds, std::uint64_t seed) {
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_email;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto& slot = by_email[ds.group[i]];
    (ds.y[i] == 1 ? slot.first : slot.second).push_back(i);
  }
  std::vector<std::size_t> keep;
  for (const auto& [email, rows] : by_email) {
    Rng rng(derive_seed(seed, hash_string(email)));
    for (const auto* cls : {&rows.first, &rows.second}) {
      auto pick = sample_without_replacement(cls->size(), kPerClassPerEmail, rng);
      std::sort(pick.begin(), pick.end());
      for (std::size_t p : pick) keep.push_back((*cls)[p]);
    }
  }
  return ds.subset(keep);
}

// Email-grouped folds: distinct email ids, shuffled, dealt round-robin.
// Returns the fold index of every row.
inline std::vector<std::size_t> grouped_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  std::set<std::string> ids(ds.group.begin(), ds.group.end());
  std::vector<std::string> order(ids.begin(), ids.end());
  Rng rng(seed);
  shuffle_in_place(order, rng);
  k = std::max<std::size_t>(1, std::min(k, order.size()));
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = i % k;
  std::vector<std::size_t> folds(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) folds[i] = fold_of[ds.group[i]];
  return folds;
}

// Sort key: smaller models first (fewer trees/units/depth, larger penalty).
inline std::vector<double> model_complexity(ModelKind kind, const nlohmann::json& hp) {
  auto num = [&](const char* key, double fallback) {
    return hp.contains(key) ? hp.at(key).get<double>() : fallback;
  };
  switch (kind) {
    case ModelKind::kRandomForest: return {num("n_trees", 0), num("mtry", 0)};
    case ModelKind::kGbm:
      return {num("n_trees", 0), num("max_depth", 0), num("learning_rate", 0)};
    case ModelKind::kMlp: return {num("hidden_units", 0), -num("l2", 0)};
    case ModelKind::kLogit: return {-num("l2", 0)};
    case ModelKind::kBaseline: return {num("max_depth", 0)};
    case ModelKind::kBlacklist: return {};
  }
  return {};
}

struct GridResult {
  nlohmann::json hyperparameters;
  double mean_auc = 0;
  std::size_t folds_used = 0;
};

struct CrossValidation {
  nlohmann::json best;
  std::vector<GridResult> grid;  // in complexity order
};

inline constexpr std::size_t kCvFolds = 5;

// Selects the grid point with the highest mean validation AUC over
// email-grouped folds. Folds whose training or validation part lacks a
// class are skipped. The grid is visited simplest-first and only a strictly
// higher mean replaces the incumbent.
inline CrossValidation cross_validate(const Dataset& ds, ModelKind kind,
                                      std::vector<nlohmann::json> grid, std::uint64_t seed) {
  if (grid.empty()) throw Error(Errc::kConfig, "empty hyperparameter grid");
  std::stable_sort(grid.begin(), grid.end(), [&](const auto& a, const auto& b) {
    return model_complexity(kind, a) < model_complexity(kind, b);
  });
  CrossValidation cv;
  if (grid.size() == 1) {
    cv.best = grid.front();
    cv.grid.push_back({grid.front(), std::numeric_limits<double>::quiet_NaN(), 0});
    return cv;
  }
  auto folds = grouped_folds(ds, kCvFolds, derive_seed(seed, 0xF01D));
  std::size_t k = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
  double best_auc = -std::numeric_limits<double>::infinity();
  cv.best = grid.front();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> tr, va;
      for (std::size_t i = 0; i < ds.rows(); ++i) (folds[i] == f ? va : tr).push_back(i);
      Dataset dtr = ds.subset(tr), dva = ds.subset(va);
      if (!dtr.has_both_classes() || !dva.has_both_classes()) continue;
      TrainedModel m = train_model(kind, dtr, grid[g], derive_seed(seed, 1000 + f));
      sum += auc(predict_proba(m, dva), dva.y);
      ++used;
    }
    double mean = used ? sum / double(used) : -std::numeric_limits<double>::infinity();
    cv.grid.push_back({grid[g], mean, used});
    if (mean > best_auc) {
      best_auc = mean;
      cv.best = grid[g];
    }
  }
  return cv;
}

// Fits on `train` and sets the decision threshold from the training scores.
inline TrainedModel fit_with_threshold(ModelKind kind, const Dataset& train,
                                       const nlohmann::json& hp, std::uint64_t seed,
                                       double target_sensitivity = 0.9999,
                                       const BlacklistRuleSet* rules = nullptr) {
  TrainedModel m = train_model(kind, train, hp, seed, rules);
  if (kind != ModelKind::kBlacklist) {
    require_both_classes(train);
    m.decision_threshold = tune_threshold(predict_proba(m, train), train.y, target_sensitivity);
  }
  return m;
}

// Expands {"a": [1,2], "b": [3]} into the cartesian product of points.
inline std::vector<nlohmann::json> expand_grid(const nlohmann::json& spec) {
  std::vector<nlohmann::json> points{nlohmann::json::object()};
  if (spec.is_null()) return points;
  if (spec.is_array()) return spec.get<std::vector<nlohmann::json>>();
  for (const auto& [key, values] : spec.items()) {
    std::vector<nlohmann::json> next;
    const nlohmann::json list = values.is_array() ? values : nlohmann::json::array({values});
    for (const auto& p : points)
      for (const auto& v : list) {
        nlohmann::json q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

}  // namespace tracksieve

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/blacklist.hpp"
#include "tracksieve/error.hpp"
#include "tracksieve/features/features.hpp"
#include "tracksieve/learners/dataset.hpp"
#include "tracksieve/learners/linear.hpp"
#include "tracksieve/learners/tree.hpp"
#include "tracksieve/rng.hpp"

namespace tracksieve {

enum class ModelKind { kBlacklist, kBaseline, kLogit, kMlp, kRandomForest, kGbm };

inline std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kBlacklist: return "blacklist";
    case ModelKind::kBaseline: return "baseline";
    case ModelKind::kLogit: return "logit";
    case ModelKind::kMlp: return "mlp";
    case ModelKind::kRandomForest: return "random_forest";
    case ModelKind::kGbm: return "gbm";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (ModelKind k : {ModelKind::kBlacklist, ModelKind::kBaseline, ModelKind::kLogit,
                      ModelKind::kMlp, ModelKind::kRandomForest, ModelKind::kGbm})
    if (model_kind_name(k) == s) return k;
  throw Error(Errc::kConfig, "unknown model kind: " + std::string(s));
}

struct TreeEnsemble {
  std::vector<Tree> trees;
  bool boosted = false;  // false: mean of leaves; true: sigmoid(init + sum)
  double init = 0;
};

struct BaselineParams {
  Tree tree;  // over (area_category, format_category)
};

struct BlacklistParams {
  BlacklistRuleSet rules;
};

using ModelParameters = std::variant<BlacklistParams, BaselineParams, LogitFit, MlpFit, TreeEnsemble>;

struct TrainedModel {
  ModelKind kind = ModelKind::kRandomForest;
  std::string schema_version;
  std::vector<std::string> features;  // input columns, by name, in model order
  nlohmann::json hyperparameters = nlohmann::json::object();
  ModelParameters parameters;
  double decision_threshold = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> importance;
};

// Names of the two inputs derived for the baseline rule.
inline constexpr std::array<std::string_view, 2> kBaselineInputs = {"area_category",
                                                                    "format_category"};
inline constexpr std::array<std::string_view, 4> kBaselineSources = {"area", "area_absent",
                                                                     "fmt_is_none", "fmt_is_php"};

// area_category: 1 when the area is below 3 px^2 or unspecified.
// format_category: 0 none, 1 php, 2 other.
inline std::array<double, 2> baseline_inputs(const double* src) {
  double area_cat = (src[1] > 0.5 || src[0] < 3) ? 1.0 : 0.0;
  double fmt_cat = src[2] > 0.5 ? 0.0 : (src[3] > 0.5 ? 1.0 : 2.0);
  return {area_cat, fmt_cat};
}

// --------------------------------------------------------------------------
// Column selection

// Columns of `ds` that models other than the baseline train on: every
// column of the resilient schema present in the dataset.
inline std::vector<std::string> resilient_columns(const Dataset& ds) {
  SchemaPtr resilient = make_feature_schema();
  std::vector<std::string> out;
  for (const auto& n : ds.feature_names)
    if (resilient->index(n)) out.push_back(n);
  return out;
}

inline std::vector<std::size_t> column_indices(const std::vector<std::string>& wanted,
                                               const std::vector<std::string>& available) {
  std::vector<std::size_t> idx;
  idx.reserve(wanted.size());
  for (const auto& w : wanted) {
    auto it = std::find(available.begin(), available.end(), w);
    if (it == available.end()) throw Error(Errc::kSchemaMismatch, "missing feature column " + w);
    idx.push_back(std::size_t(it - available.begin()));
  }
  return idx;
}

// Dense copy of the selected columns, row-major.
inline std::vector<double> project(const Dataset& ds, const std::vector<std::size_t>& cols) {
  std::vector<double> x(ds.rows() * cols.size());
  for (std::size_t i = 0; i < ds.rows(); ++i)
    for (std::size_t k = 0; k < cols.size(); ++k) x[i * cols.size() + k] = ds.at(i, cols[k]);
  return x;
}

inline void require_both_classes(const Dataset& ds) {
  if (ds.rows() == 0 || !ds.has_both_classes())
    throw Error(Errc::kSingleClassData, "training data must contain both classes");
}

// --------------------------------------------------------------------------
// Importance

// Per tree: sqrt of the summed squared gain shares of the splits on each
// feature; averaged over trees and normalized to sum to one.
inline std::vector<double> tree_importance(const std::vector<Tree>& trees, std::size_t n_features) {
  std::vector<double> imp(n_features, 0.0);
  for (const auto& t : trees) {
    double total = 0;
    for (std::size_t n = 0; n < t.size(); ++n)
      if (t.feature[n] >= 0) total += t.gain[n];
    if (total <= 0) continue;
    std::vector<double> sq(n_features, 0.0);
    for (std::size_t n = 0; n < t.size(); ++n)
      if (t.feature[n] >= 0) {
        double share = t.gain[n] / total;
        sq[std::size_t(t.feature[n])] += share * share;
      }
    for (std::size_t f = 0; f < n_features; ++f) imp[f] += std::sqrt(sq[f]);
  }
  double sum = 0;
  for (double v : imp) sum += v;
  if (sum > 0) {
    for (double& v : imp) v /= sum;
  } else if (n_features > 0) {
    std::fill(imp.begin(), imp.end(), 1.0 / double(n_features));
  }
  return imp;
}

inline std::vector<std::pair<std::string, double>> feature_importance(const TrainedModel& m) {
  std::vector<double> v;
  std::vector<std::string> names = m.features;
  if (const auto* e = std::get_if<TreeEnsemble>(&m.parameters)) {
    v = tree_importance(e->trees, names.size());
  } else if (const auto* b = std::get_if<BaselineParams>(&m.parameters)) {
    names.assign(kBaselineInputs.begin(), kBaselineInputs.end());
    v = tree_importance({b->tree}, 2);
  } else if (const auto* l = std::get_if<LogitFit>(&m.parameters)) {
    v.assign(names.size(), 0.0);
    for (std::size_t k = 0; k < l->standardizer.columns.size(); ++k)
      v[l->standardizer.columns[k]] = std::abs(l->beta[Eigen::Index(k) + 1]);
  } else if (const auto* p = std::get_if<MlpFit>(&m.parameters)) {
    v.assign(names.size(), 0.0);
    auto g = garson_importance(p->weights.w1, p->weights.w2);
    for (std::size_t k = 0; k < g.size(); ++k) v[p->standardizer.columns[k]] = g[k];
  } else {
    throw Error(Errc::kUnsupportedKind, "blacklist models have no feature importance");
  }
  double sum = 0;
  for (double x : v) sum += x;
  if (sum > 0) {
    for (double& x : v) x /= sum;
  } else if (!v.empty()) {
    std::fill(v.begin(), v.end(), 1.0 / double(v.size()));
  }
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.emplace_back(names[k], v[k]);
  return out;
}

// Descending by importance, ties by name.
inline std::vector<std::pair<std::string, double>> ranked_importance(const TrainedModel& m) {
  auto imp = m.importance.empty() ? feature_importance(m) : m.importance;
  std::stable_sort(imp.begin(), imp.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return imp;
}

// --------------------------------------------------------------------------
// Training

namespace model_detail {

inline double hp_double(const nlohmann::json& hp, const char* key, double fallback) {
  return hp.contains(key) ? hp.at(key).get<double>() : fallback;
}

inline std::int64_t hp_int(const nlohmann::json& hp, const char* key, std::int64_t fallback) {
  return hp.contains(key) ? hp.at(key).get<std::int64_t>() : fallback;
}

inline std::vector<double> targets(const Dataset& ds) {
  std::vector<double> t(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) t[i] = ds.y[i] == 1 ? 1.0 : 0.0;
  return t;
}

inline TrainedModel skeleton(ModelKind kind, const Dataset& ds, std::vector<std::string> features,
                             const nlohmann::json& hp, std::uint64_t seed) {
  TrainedModel m;
  m.kind = kind;
  m.schema_version = ds.schema_version;
  m.features = std::move(features);
  m.hyperparameters = hp.is_null() ? nlohmann::json::object() : hp;
  m.seed = seed;
  return m;
}

}  // namespace model_detail

inline TrainedModel train_random_forest(const Dataset& ds, const nlohmann::json& hp,
                                        std::uint64_t seed,
                                        std::optional<std::vector<std::string>> features = {}) {
  using namespace model_detail;
  require_both_classes(ds);
  auto names = features ? *features : resilient_columns(ds);
  auto cols = column_indices(names, ds.feature_names);
  std::int64_t n_trees = hp_int(hp, "n_trees", 2000);
  std::int64_t mtry = hp_int(hp, "mtry", std::int64_t(std::floor(std::sqrt(double(cols.size())))));
  if (n_trees < 1) throw Error(Errc::kInvalidHyperparameter, "n_trees must be >= 1");
  if (mtry < 1) throw Error(Errc::kInvalidHyperparameter, "mtry must be >= 1");
  if (std::size_t(mtry) > cols.size())
    throw Error(Errc::kMtryTooLarge, "mtry " + std::to_string(mtry) + " exceeds " +
                                         std::to_string(cols.size()) + " features");
  bool bootstrap = !hp.contains("bootstrap") || hp.at("bootstrap").get<bool>();

  TrainedModel m = skeleton(ModelKind::kRandomForest, ds, names, hp, seed);
  m.hyperparameters["n_trees"] = n_trees;
  m.hyperparameters["mtry"] = mtry;
  std::vector<double> x = project(ds, cols);
  std::vector<double> y = targets(ds);
  TreeData data{x.data(), cols.size(), y.data()};
  TreeParams params;
  params.mtry = std::size_t(mtry);
  params.min_leaf = 1;
  TreeEnsemble ens;
  const std::size_t n = ds.rows();
  for (std::int64_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, std::uint64_t(t)));
    std::vector<std::size_t> rows(n);
    if (bootstrap) {
      for (auto& r : rows) r = uniform_index(rng, n);
    } else {
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    }
    ens.trees.push_back(fit_tree(data, rows, params, &rng));
  }
  m.parameters = std::move(ens);
  m.importance = feature_importance(m);
  return m;
}

inline TrainedModel train_gbm(const Dataset& ds, const nlohmann::json& hp, std::uint64_t seed,
                              std::optional<std::vector<std::string>> features = {}) {
  using namespace model_detail;
  require_both_classes(ds);
  auto names = features ? *features : resilient_columns(ds);
  auto cols = column_indices(names, ds.feature_names);
  std::int64_t n_trees = hp_int(hp, "n_trees", 100);
  double lr = hp_double(hp, "learning_rate", 0.1);
  std::int64_t depth = hp_int(hp, "max_depth", 4);
  double subsample = hp_double(hp, "subsample", 0.5);
  std::int64_t min_leaf = hp_int(hp, "min_leaf", 10);
  if (n_trees < 1) throw Error(Errc::kInvalidHyperparameter, "n_trees must be >= 1");
  if (!(lr >= 0 && lr <= 1)) throw Error(Errc::kInvalidHyperparameter, "learning_rate outside [0,1]");
  if (depth < 1) throw Error(Errc::kInvalidHyperparameter, "max_depth must be >= 1");
  if (!(subsample > 0 && subsample <= 1))
    throw Error(Errc::kInvalidHyperparameter, "subsample outside (0,1]");
  if (min_leaf < 1) throw Error(Errc::kInvalidHyperparameter, "min_leaf must be >= 1");

  TrainedModel m = skeleton(ModelKind::kGbm, ds, names, hp, seed);
  m.hyperparameters["n_trees"] = n_trees;
  m.hyperparameters["learning_rate"] = lr;
  m.hyperparameters["max_depth"] = depth;
  m.hyperparameters["subsample"] = subsample;
  m.hyperparameters["min_leaf"] = min_leaf;

  std::vector<double> x = project(ds, cols);
  std::vector<double> y = targets(ds);
  const std::size_t n = ds.rows();
  double base = 0;
  for (double v : y) base += v;
  base /= double(n);
  TreeEnsemble ens;
  ens.boosted = true;
  ens.init = std::log(base / (1 - base));
  std::vector<double> f(n, ens.init), resid(n);
  TreeParams params;
  params.max_depth = int(depth);
  params.min_leaf = std::size_t(min_leaf);
  params.criterion = SplitCriterion::kSquaredError;
  const std::size_t n_sub = std::max<std::size_t>(
      1, std::size_t(std::llround(subsample * double(n))));
  for (std::int64_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, std::uint64_t(t)));
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - sigmoid(f[i]);
    std::vector<std::size_t> rows = n_sub >= n ? std::vector<std::size_t>() :
                                                 sample_without_replacement(n, n_sub, rng);
    if (n_sub >= n) {
      rows.resize(n);
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    }
    std::sort(rows.begin(), rows.end());
    TreeData data{x.data(), cols.size(), resid.data()};
    Tree tree = fit_tree(data, rows, params);
    // Newton step per leaf on the subsample.
    std::vector<double> num(tree.size(), 0.0), den(tree.size(), 0.0);
    for (std::size_t r : rows) {
      std::size_t leaf = tree.leaf_index(x.data() + r * cols.size());
      double p = sigmoid(f[r]);
      num[leaf] += resid[r];
      den[leaf] += p * (1 - p);
    }
    for (std::size_t k = 0; k < tree.size(); ++k)
      if (tree.feature[k] < 0) tree.value[k] = lr * num[k] / std::max(den[k], 1e-12);
    for (std::size_t i = 0; i < n; ++i) f[i] += tree.predict(x.data() + i * cols.size());
    ens.trees.push_back(std::move(tree));
  }
  m.parameters = std::move(ens);
  m.importance = feature_importance(m);
  return m;
}

inline TrainedModel train_logit(const Dataset& ds, const nlohmann::json& hp, std::uint64_t seed = 0,
                                std::optional<std::vector<std::string>> features = {}) {
  using namespace model_detail;
  require_both_classes(ds);
  auto names = features ? *features : resilient_columns(ds);
  auto cols = column_indices(names, ds.feature_names);
  double l2 = hp_double(hp, "l2", 1e-4);
  TrainedModel m = skeleton(ModelKind::kLogit, ds, names, hp, seed);
  m.hyperparameters["l2"] = l2;
  std::vector<double> x = project(ds, cols);
  std::vector<double> y = targets(ds);
  Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(y.data(), Eigen::Index(y.size()));
  m.parameters = fit_logit(to_matrix(x.data(), ds.rows(), cols.size()), yv, l2);
  m.importance = feature_importance(m);
  return m;
}

inline TrainedModel train_mlp(const Dataset& ds, const nlohmann::json& hp, std::uint64_t seed,
                              std::optional<std::vector<std::string>> features = {}) {
  using namespace model_detail;
  require_both_classes(ds);
  auto names = features ? *features : resilient_columns(ds);
  auto cols = column_indices(names, ds.feature_names);
  std::int64_t hidden = hp_int(hp, "hidden_units", 5);
  double l2 = hp_double(hp, "l2", 0.0625);
  std::int64_t iterations = hp_int(hp, "iterations", kMlpIterations);
  double step = hp_double(hp, "step", kMlpStep);
  if (iterations < 0 || !(step > 0))
    throw Error(Errc::kInvalidHyperparameter, "bad optimizer budget");
  TrainedModel m = skeleton(ModelKind::kMlp, ds, names, hp, seed);
  m.hyperparameters["hidden_units"] = hidden;
  m.hyperparameters["l2"] = l2;
  std::vector<double> x = project(ds, cols);
  std::vector<double> y = targets(ds);
  Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(y.data(), Eigen::Index(y.size()));
  m.parameters = fit_mlp(to_matrix(x.data(), ds.rows(), cols.size()), yv, int(hidden), l2, seed,
                         int(iterations), step);
  m.importance = feature_importance(m);
  return m;
}

inline TrainedModel train_baseline(const Dataset& ds, const nlohmann::json& hp = {},
                                   std::uint64_t seed = 0) {
  using namespace model_detail;
  std::vector<std::string> names(kBaselineSources.begin(), kBaselineSources.end());
  for (const auto& n : names)
    if (!ds.column(n))
      throw Error(Errc::kMissingExcludedFeatures,
                  "baseline needs the excluded feature group (missing " + n + ")");
  require_both_classes(ds);
  auto cols = column_indices(names, ds.feature_names);
  std::int64_t depth = hp.is_object() ? hp_int(hp, "max_depth", 3) : 3;
  if (depth < 1 || depth > 3) throw Error(Errc::kInvalidHyperparameter, "baseline depth must be 1..3");
  TrainedModel m = skeleton(ModelKind::kBaseline, ds, names, hp, seed);
  m.hyperparameters["max_depth"] = depth;
  std::vector<double> derived(ds.rows() * 2);
  std::vector<double> src(4);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) src[k] = ds.at(i, cols[k]);
    auto d = baseline_inputs(src.data());
    derived[2 * i] = d[0];
    derived[2 * i + 1] = d[1];
  }
  std::vector<double> y = targets(ds);
  std::vector<std::size_t> rows(ds.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  TreeParams params;
  params.max_depth = int(depth);
  m.parameters = BaselineParams{fit_tree(TreeData{derived.data(), 2, y.data()}, rows, params)};
  m.importance = feature_importance(m);
  return m;
}

inline TrainedModel make_blacklist_model(const BlacklistRuleSet& rules,
                                         std::string schema_version = {}) {
  TrainedModel m;
  m.kind = ModelKind::kBlacklist;
  m.schema_version = std::move(schema_version);
  m.parameters = BlacklistParams{rules};
  m.decision_threshold = 0.5;
  return m;
}

inline TrainedModel train_model(ModelKind kind, const Dataset& ds, const nlohmann::json& hp,
                                std::uint64_t seed, const BlacklistRuleSet* rules = nullptr) {
  switch (kind) {
    case ModelKind::kBlacklist:
      return make_blacklist_model(rules ? *rules : default_rules(), ds.schema_version);
    case ModelKind::kBaseline: return train_baseline(ds, hp, seed);
    case ModelKind::kLogit: return train_logit(ds, hp, seed);
    case ModelKind::kMlp: return train_mlp(ds, hp, seed);
    case ModelKind::kRandomForest: return train_random_forest(ds, hp, seed);
    case ModelKind::kGbm: return train_gbm(ds, hp, seed);
  }
  throw Error(Errc::kUnsupportedKind, "unknown kind");
}

// --------------------------------------------------------------------------
// Scoring

// Score of one row given the model's input columns (in model order) and the
// image URL (used by the blacklist only).
inline double score_inputs(const TrainedModel& m, const double* x, std::string_view url) {
  if (const auto* e = std::get_if<TreeEnsemble>(&m.parameters)) {
    double s = e->boosted ? e->init : 0.0;
    for (const auto& t : e->trees) s += t.predict(x);
    return e->boosted ? sigmoid(s) : (e->trees.empty() ? 0.0 : s / double(e->trees.size()));
  }
  if (const auto* b = std::get_if<BaselineParams>(&m.parameters)) {
    auto d = baseline_inputs(x);
    return b->tree.predict(d.data());
  }
  if (const auto* l = std::get_if<LogitFit>(&m.parameters)) return logit_score(*l, x);
  if (const auto* p = std::get_if<MlpFit>(&m.parameters)) return mlp_score(*p, x);
  const auto& bl = std::get<BlacklistParams>(m.parameters);
  return match_url(url, bl.rules) ? 1.0 : 0.0;
}

inline std::vector<double> predict_proba(const TrainedModel& m, const Dataset& ds) {
  if (m.kind != ModelKind::kBlacklist && m.schema_version != ds.schema_version)
    throw Error(Errc::kSchemaMismatch,
                "model schema " + m.schema_version + " vs data schema " + ds.schema_version);
  auto cols = column_indices(m.features, ds.feature_names);
  std::vector<double> scores(ds.rows());
  std::vector<double> buf(cols.size());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) buf[k] = ds.at(i, cols[k]);
    scores[i] = score_inputs(m, buf.data(), i < ds.url.size() ? ds.url[i] : std::string_view{});
  }
  return scores;
}

inline double predict_proba(const TrainedModel& m, const FeatureVector& fv) {
  if (m.kind == ModelKind::kBlacklist) return score_inputs(m, nullptr, fv.url);
  if (m.schema_version != fv.schema->version)
    throw Error(Errc::kSchemaMismatch,
                "model schema " + m.schema_version + " vs vector schema " + fv.schema->version);
  auto cols = column_indices(m.features, fv.schema->names);
  std::vector<double> buf(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) buf[k] = fv.values[cols[k]];
  return score_inputs(m, buf.data(), fv.url);
}

// Feature options that reproduce the schema a model was trained on.
inline FeatureOptions feature_options_for(std::string_view schema_version) {
  FeatureOptions opts;
  std::string v(schema_version);
  if (v.find("+excluded") != std::string::npos) opts.excluded_features = true;
  auto tok = v.find("+tokens");
  if (tok != std::string::npos) {
    for (auto part : strings::split(std::string_view(v).substr(tok + 7), ':'))
      if (!part.empty()) opts.token_flags.emplace_back(part);
  }
  return opts;
}

// --------------------------------------------------------------------------
// JSON

namespace model_detail {

inline nlohmann::json tree_to_json(const Tree& t) {
  return {{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left},
          {"right", t.right},     {"value", t.value},         {"gain", t.gain}};
}

inline Tree tree_from_json(const nlohmann::json& j) {
  Tree t;
  t.feature = j.at("feature").get<std::vector<int>>();
  t.threshold = j.at("threshold").get<std::vector<double>>();
  t.left = j.at("left").get<std::vector<int>>();
  t.right = j.at("right").get<std::vector<int>>();
  t.value = j.at("value").get<std::vector<double>>();
  t.gain = j.at("gain").get<std::vector<double>>();
  std::size_t n = t.feature.size();
  if (t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
      t.value.size() != n || t.gain.size() != n || n == 0)
    throw Error(Errc::kConfig, "inconsistent tree arrays");
  for (std::size_t k = 0; k < n; ++k)
    if (t.feature[k] >= 0 && (t.left[k] <= int(k) || t.right[k] <= int(k) ||
                              std::size_t(t.left[k]) >= n || std::size_t(t.right[k]) >= n))
      throw Error(Errc::kConfig, "bad child index in tree");
  return t;
}

inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vec_from(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

inline nlohmann::json standardizer_json(const Standardizer& s) {
  return {{"columns", s.columns}, {"mean", vec_json(s.mean)}, {"scale", vec_json(s.scale)}};
}

inline Standardizer standardizer_from(const nlohmann::json& j) {
  Standardizer s;
  s.columns = j.at("columns").get<std::vector<std::size_t>>();
  s.mean = vec_from(j.at("mean"));
  s.scale = vec_from(j.at("scale"));
  return s;
}

}  // namespace model_detail

inline nlohmann::json model_to_json(const TrainedModel& m) {
  using namespace model_detail;
  nlohmann::json params;
  params["features"] = m.features;
  if (const auto* e = std::get_if<TreeEnsemble>(&m.parameters)) {
    params["aggregation"] = e->boosted ? "boosted" : "mean";
    params["init"] = e->init;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : e->trees) trees.push_back(tree_to_json(t));
    params["trees"] = std::move(trees);
  } else if (const auto* b = std::get_if<BaselineParams>(&m.parameters)) {
    params["derived_inputs"] =
        std::vector<std::string>(kBaselineInputs.begin(), kBaselineInputs.end());
    params["tree"] = tree_to_json(b->tree);
  } else if (const auto* l = std::get_if<LogitFit>(&m.parameters)) {
    params["standardizer"] = standardizer_json(l->standardizer);
    params["coefficients"] = vec_json(l->beta);
  } else if (const auto* p = std::get_if<MlpFit>(&m.parameters)) {
    params["standardizer"] = standardizer_json(p->standardizer);
    params["hidden_units"] = p->weights.w1.rows();
    Eigen::VectorXd flat = p->weights.flatten();
    params["weights"] = vec_json(flat);
  } else {
    params["rules"] = rules_to_text(std::get<BlacklistParams>(m.parameters).rules);
  }
  nlohmann::json imp = nlohmann::json::array();
  for (const auto& [name, v] : m.importance) imp.push_back({{"feature", name}, {"importance", v}});
  return {{"kind", model_kind_name(m.kind)},
          {"schema_version", m.schema_version},
          {"hyperparameters", m.hyperparameters},
          {"parameters", params},
          {"decision_threshold", m.decision_threshold},
          {"seed", m.seed},
          {"importance", imp}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  using namespace model_detail;
  TrainedModel m;
  m.kind = parse_model_kind(j.at("kind").get<std::string>());
  m.schema_version = j.at("schema_version").get<std::string>();
  m.hyperparameters = j.at("hyperparameters");
  m.decision_threshold = j.at("decision_threshold").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& p = j.at("parameters");
  m.features = p.at("features").get<std::vector<std::string>>();
  switch (m.kind) {
    case ModelKind::kRandomForest:
    case ModelKind::kGbm: {
      TreeEnsemble e;
      e.boosted = p.at("aggregation").get<std::string>() == "boosted";
      e.init = p.at("init").get<double>();
      for (const auto& t : p.at("trees")) e.trees.push_back(tree_from_json(t));
      m.parameters = std::move(e);
      break;
    }
    case ModelKind::kBaseline:
      m.parameters = BaselineParams{tree_from_json(p.at("tree"))};
      break;
    case ModelKind::kLogit: {
      LogitFit l;
      l.standardizer = standardizer_from(p.at("standardizer"));
      l.beta = vec_from(p.at("coefficients"));
      m.parameters = std::move(l);
      break;
    }
    case ModelKind::kMlp: {
      MlpFit f;
      f.standardizer = standardizer_from(p.at("standardizer"));
      auto hidden = p.at("hidden_units").get<Eigen::Index>();
      f.weights = MlpWeights::unflatten(vec_from(p.at("weights")), hidden,
                                        Eigen::Index(f.standardizer.columns.size()));
      m.parameters = std::move(f);
      break;
    }
    case ModelKind::kBlacklist:
      m.parameters = BlacklistParams{parse_rules(p.at("rules").get<std::string>())};
      break;
  }
  for (const auto& e : j.at("importance"))
    m.importance.emplace_back(e.at("feature").get<std::string>(), e.at("importance").get<double>());
  return m;
}

inline void save_model(const std::filesystem::path& path, const TrainedModel& m) {
  write_file(path, model_to_json(m).dump() + "\n");
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  return model_from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace tracksieve

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

namespace ts = tracksieve;

namespace {

ts::Dataset toy(const std::vector<std::vector<double>>& rows, const std::vector<int>& y) {
  ts::Dataset ds;
  ds.schema_version = "toy";
  for (std::size_t j = 0; j < rows.front().size(); ++j) ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.x.insert(ds.x.end(), rows[i].begin(), rows[i].end());
    ds.y.push_back(y[i]);
    ds.group.push_back("e" + std::to_string(i / 3));
    ds.sender.push_back("s.com");
    ds.time.push_back(ts::make_timestamp(2015, 7, 1));
    ds.position.push_back(i % 3);
    ds.url.push_back("http://x/" + std::to_string(i));
  }
  return ds;
}

std::vector<std::string> all_features(const ts::Dataset& ds) { return ds.feature_names; }

double sse(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double m = 0;
  for (double x : v) m += x;
  m /= double(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

}  // namespace

// ---------------------------------------------------------------- Logit

TEST(Logit, SeparableToyHasPerfectAuc) {
  auto ds = toy({{0, 0}, {0, 1}, {1, 0}, {3, 3}, {3, 4}, {4, 3}}, {0, 0, 0, 1, 1, 1});
  auto m = ts::train_logit(ds, {{"l2", 1e-4}}, 0, all_features(ds));
  EXPECT_DOUBLE_EQ(ts::auc(ts::predict_proba(m, ds), ds.y), 1.0);
}

TEST(Logit, ConstantColumnIsDropped) {
  auto ds = toy({{0, 5}, {1, 5}, {2, 5}, {3, 5}}, {0, 0, 1, 1});
  auto m = ts::train_logit(ds, {}, 0, all_features(ds));
  const auto& fit = std::get<ts::LogitFit>(m.parameters);
  for (std::size_t c : fit.standardizer.columns) EXPECT_NE(c, 1u);
  EXPECT_EQ(m.importance[1].second, 0.0);
}

TEST(Logit, ConvergesOrHitsCap) {
  auto ds = toy({{0, 1}, {1, 0}, {2, 2}, {3, 1}, {1, 3}, {0, 0}}, {0, 1, 0, 1, 1, 0});
  auto m = ts::train_logit(ds, {{"l2", 0.01}}, 0, all_features(ds));
  const auto& fit = std::get<ts::LogitFit>(m.parameters);
  EXPECT_TRUE(fit.gradient_norm <= 1e-6 || fit.iterations == ts::kLogitMaxIterations);
}

TEST(Logit, ZeroWeightsScoreHalf) {
  ts::LogitFit fit;
  fit.beta = Eigen::VectorXd::Zero(3);
  fit.standardizer.columns = {0, 1};
  fit.standardizer.mean = Eigen::VectorXd::Zero(2);
  fit.standardizer.scale = Eigen::VectorXd::Ones(2);
  double row[2] = {3, -7};
  EXPECT_DOUBLE_EQ(ts::logit_score(fit, row), 0.5);
}

// ---------------------------------------------------------------- Trees

TEST(Tree, PureClassIsSingleLeaf) {
  std::vector<double> x = {1, 2, 3}, y = {1, 1, 1};
  auto t = ts::fit_tree({x.data(), 1, y.data()}, {0, 1, 2}, {});
  EXPECT_EQ(t.size(), 1u);
}

TEST(Tree, XorAtDepthTwo) {
  std::vector<double> x = {0, 0, 0, 1, 1, 0, 1, 1, 0, 0, 0, 1, 1, 0, 1, 1};
  std::vector<double> y = {0, 1, 1, 0, 0, 1, 1, 0};
  ts::TreeParams p;
  p.max_depth = 2;
  // Plain greedy CART finds no first split on exact XOR; duplicated rows with
  // one extra positive break the symmetry.
  x.insert(x.end(), {0, 1});
  y.push_back(1);
  std::vector<std::size_t> rows(9);
  for (std::size_t i = 0; i < 9; ++i) rows[i] = i;
  auto t = ts::fit_tree({x.data(), 2, y.data()}, rows, p);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 9; ++i) correct += (t.predict(&x[2 * i]) >= 0.5) == (y[i] > 0.5);
  EXPECT_EQ(correct, 9u);
  EXPECT_LE(t.depth(), 2);
}

TEST(Tree, BestSplitMatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> val(0, 4), bit(0, 1);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 10, d = 3;
    std::vector<double> x(n * d), y(n);
    for (auto& v : x) v = val(rng);
    for (auto& v : y) v = bit(rng);
    std::vector<std::size_t> rows(n), feats = {0, 1, 2};
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    auto s = ts::best_split({x.data(), d, y.data()}, rows, feats);
    double best = 0;
    for (std::size_t f = 0; f < d; ++f)
      for (int t = 0; t < 5; ++t) {
        std::vector<double> l, r;
        for (std::size_t i = 0; i < n; ++i) (x[i * d + f] <= t + 0.5 ? l : r).push_back(y[i]);
        if (l.empty() || r.empty()) continue;
        best = std::max(best, sse(y) - sse(l) - sse(r));
      }
    EXPECT_NEAR(s.gain, best, 1e-12);
  }
}

// ---------------------------------------------------------------- RF

TEST(RandomForest, SingleTreeWithoutBootstrapEqualsCart) {
  auto ds = toy({{0, 1}, {1, 0}, {2, 2}, {3, 1}, {1, 3}, {0, 0}, {0, 1}, {1, 0}},
                {0, 1, 0, 1, 1, 0, 0, 1});
  auto m = ts::train_random_forest(ds, {{"n_trees", 1}, {"mtry", 2}, {"bootstrap", false}}, 1,
                                   all_features(ds));
  std::vector<double> y(ds.y.begin(), ds.y.end());
  std::vector<std::size_t> rows(ds.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  auto cart = ts::fit_tree({ds.x.data(), 2, y.data()}, rows, {});
  auto scores = ts::predict_proba(m, ds);
  for (std::size_t i = 0; i < ds.rows(); ++i) EXPECT_DOUBLE_EQ(scores[i], cart.predict(ds.row(i)));
}

TEST(RandomForest, ScoresInUnitIntervalAndDeterministic) {
  const auto& ds = ts::testing::shared_dataset();
  auto a = ts::train_random_forest(ds, {{"n_trees", 10}}, 9);
  auto b = ts::train_random_forest(ds, {{"n_trees", 10}}, 9);
  EXPECT_EQ(ts::model_to_json(a).dump(), ts::model_to_json(b).dump());
  for (double s : ts::predict_proba(a, ds)) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(RandomForest, MtryTooLarge) {
  auto ds = toy({{0, 1}, {1, 0}, {2, 2}, {3, 1}}, {0, 1, 0, 1});
  try {
    ts::train_random_forest(ds, {{"mtry", 3}}, 0, all_features(ds));
    FAIL();
  } catch (const ts::Error& e) {
    EXPECT_EQ(e.code(), ts::Errc::kMtryTooLarge);
  }
}

TEST(RandomForest, SingleClassRejected) {
  auto ds = toy({{0, 1}, {1, 0}}, {1, 1});
  try {
    ts::train_random_forest(ds, {}, 0, all_features(ds));
    FAIL();
  } catch (const ts::Error& e) {
    EXPECT_EQ(e.code(), ts::Errc::kSingleClassData);
  }
}

TEST(RandomForest, SaveLoadRoundTrip) {
  ts::testing::TempDir dir("model");
  const auto& ds = ts::testing::shared_dataset();
  auto m = ts::train_random_forest(ds, {{"n_trees", 5}}, 2);
  ts::save_model(dir / "m.json", m);
  auto back = ts::load_model(dir / "m.json");
  EXPECT_EQ(ts::predict_proba(m, ds), ts::predict_proba(back, ds));
}

// ---------------------------------------------------------------- GBM

TEST(Gbm, ZeroLearningRateGivesBaseRate) {
  auto ds = toy({{0, 1}, {1, 0}, {2, 2}, {3, 1}, {4, 4}}, {0, 1, 0, 1, 1});
  auto m = ts::train_gbm(ds, {{"n_trees", 5}, {"learning_rate", 0.0}}, 0, all_features(ds));
  for (double s : ts::predict_proba(m, ds)) EXPECT_NEAR(s, 0.6, 1e-12);
}

TEST(Gbm, TrainingLossNonIncreasing) {
  const auto& ds = ts::testing::shared_dataset();
  double prev = std::numeric_limits<double>::infinity();
  for (int stages = 1; stages <= 6; ++stages) {
    auto m = ts::train_gbm(ds, {{"n_trees", stages}, {"subsample", 1.0}, {"max_depth", 2}}, 4);
    auto p = ts::predict_proba(m, ds);
    double loss = 0;
    for (std::size_t i = 0; i < p.size(); ++i) loss -= ds.y[i] ? std::log(p[i]) : std::log(1 - p[i]);
    EXPECT_LE(loss, prev + 1e-9);
    prev = loss;
  }
}

TEST(Gbm, TwoStumpsMatchHandRolledBoosting) {
  std::vector<double> xs = {0.1, 0.4, 0.5, 0.9, 1.3, 1.7, 2.2, 2.9};
  std::vector<int> ys = {0, 0, 1, 0, 1, 1, 0, 1};
  std::vector<std::vector<double>> rows;
  for (double v : xs) rows.push_back({v});
  auto ds = toy(rows, ys);
  auto m = ts::train_gbm(ds, {{"n_trees", 2}, {"learning_rate", 0.5}, {"max_depth", 1},
                              {"subsample", 1.0}, {"min_leaf", 1}},
                         0, all_features(ds));

  const std::size_t n = xs.size();
  double base = 0.5;
  std::vector<double> f(n, std::log(base / (1 - base)));
  for (int stage = 0; stage < 2; ++stage) {
    std::vector<double> r(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 1 / (1 + std::exp(-f[i]));
      r[i] = ys[i] - p[i];
    }
    double best_gain = -1, best_t = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      double t = (xs[k] + xs[k + 1]) / 2;
      std::vector<double> l, rr;
      for (std::size_t i = 0; i < n; ++i) (xs[i] <= t ? l : rr).push_back(r[i]);
      double gain = sse(r) - sse(l) - sse(rr);
      if (gain > best_gain + 1e-12) best_gain = gain, best_t = t;
    }
    double nl = 0, dl = 0, nr = 0, dr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double h = p[i] * (1 - p[i]);
      if (xs[i] <= best_t) nl += r[i], dl += h;
      else nr += r[i], dr += h;
    }
    for (std::size_t i = 0; i < n; ++i) f[i] += 0.5 * (xs[i] <= best_t ? nl / dl : nr / dr);
  }
  auto scores = ts::predict_proba(m, ds);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(scores[i], 1 / (1 + std::exp(-f[i])), 1e-12);
}

// ---------------------------------------------------------------- MLP

TEST(Mlp, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Eigen::MatrixXd z(12, 3);
  Eigen::VectorXd y(12);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = g(rng);
    y[i] = i % 2;
  }
  for (int rep = 0; rep < 5; ++rep) {
    ts::MlpWeights w;
    w.w1 = Eigen::MatrixXd(4, 4);
    w.w2 = Eigen::VectorXd(5);
    for (Eigen::Index k = 0; k < w.w1.size(); ++k) w.w1.data()[k] = g(rng);
    for (Eigen::Index k = 0; k < w.w2.size(); ++k) w.w2[k] = g(rng);
    Eigen::VectorXd analytic = ts::mlp_gradient(w, z, y, 0.1).flatten();
    Eigen::VectorXd theta = w.flatten(), numeric(theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double h = 1e-6;
      Eigen::VectorXd up = theta, dn = theta;
      up[k] += h;
      dn[k] -= h;
      numeric[k] = (ts::mlp_objective(ts::MlpWeights::unflatten(up, 4, 3), z, y, 0.1) -
                    ts::mlp_objective(ts::MlpWeights::unflatten(dn, 4, 3), z, y, 0.1)) / (2 * h);
    }
    EXPECT_LE((analytic - numeric).norm() / std::max(1e-12, numeric.norm()), 1e-4);
  }
}

TEST(Mlp, ZeroWeightsScoreHalf) {
  ts::MlpFit fit;
  fit.standardizer.columns = {0};
  fit.standardizer.mean = Eigen::VectorXd::Zero(1);
  fit.standardizer.scale = Eigen::VectorXd::Ones(1);
  fit.weights.w1 = Eigen::MatrixXd::Zero(2, 2);
  fit.weights.w2 = Eigen::VectorXd::Zero(3);
  double row[1] = {42};
  EXPECT_DOUBLE_EQ(ts::mlp_score(fit, row), 0.5);
}

TEST(Mlp, OutputsInOpenUnitInterval) {
  auto ds = toy({{0, 1}, {1, 0}, {2, 2}, {3, 1}, {4, 4}, {5, 0}}, {0, 1, 0, 1, 1, 0});
  auto m = ts::train_mlp(ds, {{"iterations", 200}}, 3, all_features(ds));
  for (double s : ts::predict_proba(m, ds)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Mlp, GarsonOneHiddenUnit) {
  Eigen::MatrixXd w1(1, 3);
  w1 << 0.3, 2.0, -1.0;
  Eigen::VectorXd w2(2);
  w2 << 0.1, 0.7;
  auto imp = ts::garson_importance(w1, w2);
  EXPECT_NEAR(imp[0], 2.0 / 3, 1e-12);
  EXPECT_NEAR(imp[1], 1.0 / 3, 1e-12);
}

// ---------------------------------------------------------------- Baseline

TEST(Baseline, PixelWithoutExtensionScoresHigh) {
  const auto& ds = ts::testing::shared_dataset();
  auto m = ts::train_baseline(ds);
  std::vector<double> pixel(ds.cols(), 0.0), banner(ds.cols(), 0.0);
  auto set = [&](std::vector<double>& v, const char* name, double value) { v[*ds.column(name)] = value; };
  set(pixel, "area", 1);
  set(pixel, "fmt_is_none", 1);
  set(banner, "area", 400);
  std::vector<double> in_p, in_b;
  for (const auto& name : m.features) {
    in_p.push_back(pixel[*ds.column(name)]);
    in_b.push_back(banner[*ds.column(name)]);
  }
  EXPECT_GE(ts::score_inputs(m, in_p.data(), ""), 0.5);
  EXPECT_LT(ts::score_inputs(m, in_b.data(), ""), 0.5);
  for (const auto& [name, _] : m.importance)
    EXPECT_TRUE(name == "area_category" || name == "format_category");
}

TEST(Baseline, NeedsExcludedFeatures) {
  auto ds = toy({{0, 1}, {1, 0}}, {0, 1});
  try {
    ts::train_baseline(ds);
    FAIL();
  } catch (const ts::Error& e) {
    EXPECT_EQ(e.code(), ts::Errc::kMissingExcludedFeatures);
  }
}

// ---------------------------------------------------------------- Tuning

TEST(Tuning, SingleGridPointReturnedUnchanged) {
  const auto& ds = ts::testing::shared_dataset();
  nlohmann::json hp = {{"n_trees", 3}};
  auto cv = ts::cross_validate(ds, ts::ModelKind::kRandomForest, {hp}, 1);
  EXPECT_EQ(cv.best, hp);
}

TEST(Tuning, FoldsPartitionEmails) {
  const auto& ds = ts::testing::shared_dataset();
  auto folds = ts::grouped_folds(ds, 5, 3);
  std::map<std::string, std::set<std::size_t>> seen;
  for (std::size_t i = 0; i < ds.rows(); ++i) seen[ds.group[i]].insert(folds[i]);
  for (const auto& [email, f] : seen) EXPECT_EQ(f.size(), 1u) << email;
}

TEST(Tuning, DominantPointChosen) {
  const auto& ds = ts::testing::shared_dataset();
  nlohmann::json weak = {{"l2", 1e6}}, strong = {{"l2", 1e-4}};
  auto cv = ts::cross_validate(ds, ts::ModelKind::kLogit, {weak, strong}, 1);
  EXPECT_EQ(cv.best, strong);
}

TEST(Tuning, ResampleTakesAtMostTwoPerClass) {
  const auto& ds = ts::testing::shared_dataset();
  auto r = ts::resample_training(ds, 7);
  std::map<std::pair<std::string, int>, int> count;
  for (std::size_t i = 0; i < r.rows(); ++i) ++count[{r.group[i], r.y[i]}];
  for (const auto& [k, c] : count) EXPECT_LE(c, 2);
}

TEST(Tuning, ExpandGrid) {
  auto pts = ts::expand_grid({{"a", {1, 2}}, {"b", {3}}});
  EXPECT_EQ(pts.size(), 2u);
}

// ---------------------------------------------------------------- Scoring

TEST(Scoring, BlacklistScoresOne) {
  auto m = ts::make_blacklist_model(ts::default_rules());
  EXPECT_EQ(ts::score_inputs(m, nullptr, "http://m1e.net/c?AbC123"), 1.0);
  EXPECT_EQ(ts::score_inputs(m, nullptr, "http://shop.com/logo.png"), 0.0);
}

TEST(Scoring, AllZeroLeavesScoreZero) {
  ts::TrainedModel m;
  ts::TreeEnsemble e;
  ts::Tree t;
  t.add_leaf(0.0);
  e.trees = {t, t};
  m.parameters = e;
  double row[1] = {1};
  EXPECT_EQ(ts::score_inputs(m, row, ""), 0.0);
}

TEST(Importance, SingleSplitTreeGetsAll) {
  std::vector<double> x = {5, 0, 5, 1, 5, 0, 5, 1}, y = {0, 1, 0, 1};
  auto t = ts::fit_tree({x.data(), 2, y.data()}, {0, 1, 2, 3}, {});
  auto imp = ts::tree_importance({t}, 2);
  EXPECT_DOUBLE_EQ(imp[1], 1.0);
  EXPECT_DOUBLE_EQ(imp[0], 0.0);
}

#pragma once

// Repeated train/test evaluation of a classifier roster under the four
// regimes, with rank statistics per regime.

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/evaluation/metrics.hpp"
#include "tracksieve/evaluation/splits.hpp"
#include "tracksieve/evaluation/stats.hpp"
#include "tracksieve/learners/tuning.hpp"
#include "tracksieve/strings.hpp"

namespace tracksieve {

struct ClassifierSpec {
  ModelKind kind;
  std::vector<nlohmann::json> grid;
};

struct RegimeSpec {
  Regime regime;
  double fraction = 0.10;
  std::size_t n_companies = 30;
  std::size_t repetitions = 10;
  int window_months = 3;
  std::size_t n_windows = 5;
};

struct BenchmarkConfig {
  std::uint64_t seed = 1;
  std::optional<Timestamp> train_end;
  double target_sensitivity = 0.9999;
  double alpha = 0.05;
  std::vector<ClassifierSpec> classifiers;  // canonical kind order
  std::vector<RegimeSpec> regimes;
  BlacklistRuleSet rules = default_rules();
  nlohmann::json source = nlohmann::json::object();

  bool needs_excluded_features() const {
    for (const auto& c : classifiers)
      if (c.kind == ModelKind::kBaseline) return true;
    return false;
  }
};

inline BenchmarkConfig parse_benchmark_config(const nlohmann::json& j) {
  BenchmarkConfig c;
  c.source = j;
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("train_end")) {
    c.train_end = parse_iso8601(j.at("train_end").get<std::string>());
    if (!c.train_end) throw Error(Errc::kConfig, "bad train_end");
  }
  if (j.contains("target_sensitivity")) c.target_sensitivity = j.at("target_sensitivity").get<double>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (!j.contains("classifiers")) throw Error(Errc::kConfig, "config lists no classifiers");
  const auto& cl = j.at("classifiers");
  for (ModelKind k : {ModelKind::kBlacklist, ModelKind::kBaseline, ModelKind::kLogit,
                      ModelKind::kMlp, ModelKind::kRandomForest, ModelKind::kGbm}) {
    std::string name(model_kind_name(k));
    if (!cl.contains(name)) continue;
    const auto& spec = cl.at(name);
    c.classifiers.push_back({k, expand_grid(spec.contains("grid") ? spec.at("grid") : nlohmann::json())});
  }
  for (const auto& [key, _] : cl.items()) parse_model_kind(key);  // reject unknown names
  if (c.classifiers.empty()) throw Error(Errc::kConfig, "config lists no classifiers");
  if (j.contains("rules")) c.rules = compile_rules(j.at("rules").get<std::string>());

  const auto regimes = j.contains("regimes") ? j.at("regimes") : nlohmann::json::object();
  for (Regime r : {Regime::kOutOfSample, Regime::kOutOfUniverse, Regime::kOutOfTime,
                   Regime::kOutOfUniverseAndTime}) {
    std::string name(regime_name(r));
    if (!regimes.contains(name)) continue;
    const auto& s = regimes.at(name);
    RegimeSpec spec{r};
    spec.fraction = s.value("fraction", spec.fraction);
    spec.n_companies = s.value("n_companies", spec.n_companies);
    spec.repetitions = s.value("repetitions", spec.repetitions);
    spec.window_months = s.value("window_months", spec.window_months);
    spec.n_windows = s.value("n_windows", spec.n_windows);
    if ((r == Regime::kOutOfTime || r == Regime::kOutOfUniverseAndTime) && !c.train_end)
      throw Error(Errc::kConfig, std::string(name) + " needs train_end");
    c.regimes.push_back(spec);
  }
  return c;
}

struct ClassifierOutcome {
  std::optional<double> auc;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  double threshold = 0;
  nlohmann::json hyperparameters;
  std::optional<CrossValidation> cv;
};

namespace bench_detail {

inline nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::vector<SplitPlan> plans_for(const RegimeSpec& spec, const BenchmarkConfig& cfg,
                                        const std::vector<EmailMeta>& emails) {
  std::uint64_t seed = derive_seed(cfg.seed, 0x5EED0000ULL + std::uint64_t(spec.regime));
  switch (spec.regime) {
    case Regime::kOutOfSample:
      return split_out_of_sample(emails, spec.fraction, spec.repetitions, seed, cfg.train_end);
    case Regime::kOutOfUniverse:
      return split_out_of_universe(emails, spec.n_companies, spec.repetitions, seed, cfg.train_end);
    case Regime::kOutOfTime:
      return split_out_of_time(emails, *cfg.train_end, spec.window_months, spec.n_windows);
    case Regime::kOutOfUniverseAndTime:
      return split_out_of_universe_and_time(emails, *cfg.train_end, spec.n_companies,
                                            spec.repetitions, seed);
  }
  return {};
}

inline ClassifierOutcome score_test(const TrainedModel& m, const Dataset& test) {
  ClassifierOutcome o;
  o.threshold = m.decision_threshold;
  if (!test.has_both_classes()) return o;
  auto scores = predict_proba(m, test);
  o.auc = auc(scores, test.y);
  auto ss = sensitivity_specificity(scores, test.y, m.decision_threshold);
  o.sensitivity = ss.sensitivity;
  o.specificity = ss.specificity;
  return o;
}

inline nlohmann::json cv_json(const CrossValidation& cv) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& g : cv.grid)
    grid.push_back({{"hyperparameters", g.hyperparameters},
                    {"mean_auc", std::isfinite(g.mean_auc) ? nlohmann::json(g.mean_auc) : nlohmann::json(nullptr)},
                    {"folds", g.folds_used}});
  return {{"best", cv.best}, {"grid", grid}};
}

}  // namespace bench_detail

struct RegimeReport {
  Regime regime;
  std::vector<SplitPlan> plans;
  // outcomes[row][classifier]; for out_of_time a row is a window.
  std::vector<std::vector<ClassifierOutcome>> outcomes;
};

// Trains the roster on one plan's training data: resample, tune, fit,
// threshold on the resampled training rows.
inline std::vector<std::pair<TrainedModel, std::optional<CrossValidation>>> train_roster(
    const Dataset& train_all, const BenchmarkConfig& cfg, std::uint64_t seed) {
  Dataset train = resample_training(train_all, derive_seed(seed, 1));
  std::vector<std::pair<TrainedModel, std::optional<CrossValidation>>> out;
  for (std::size_t c = 0; c < cfg.classifiers.size(); ++c) {
    const auto& spec = cfg.classifiers[c];
    std::uint64_t s = derive_seed(seed, 100 + std::uint64_t(spec.kind));
    std::optional<CrossValidation> cv;
    nlohmann::json hp = spec.grid.empty() ? nlohmann::json::object() : spec.grid.front();
    if (spec.kind != ModelKind::kBlacklist && spec.grid.size() > 1) {
      cv = cross_validate(train, spec.kind, spec.grid, s);
      hp = cv->best;
    }
    out.emplace_back(fit_with_threshold(spec.kind, train, hp, s, cfg.target_sensitivity, &cfg.rules),
                     std::move(cv));
  }
  return out;
}

class Benchmark {
 public:
  Benchmark(const Dataset& ds, BenchmarkConfig cfg) : ds_(ds), cfg_(std::move(cfg)) {
    emails_ = email_index(ds_);
  }

  // Runs every regime. When `partial_path` is set the report is rewritten
  // after each repetition so that a failure leaves the finished part behind.
  nlohmann::json run(const std::optional<std::filesystem::path>& partial_path = {},
                     const std::function<void(const std::string&)>& progress = {}) {
    reports_.clear();
    for (const auto& spec : cfg_.regimes) {
      RegimeReport rep{spec.regime, bench_detail::plans_for(spec, cfg_, emails_), {}};
      reports_.push_back(std::move(rep));
      RegimeReport& r = reports_.back();
      std::uint64_t regime_seed = derive_seed(cfg_.seed, 0xBE70000ULL + std::uint64_t(spec.regime));
      if (spec.regime == Regime::kOutOfTime) {
        // One model per classifier, scored on each window.
        Dataset train = ds_.select_groups(r.plans.front().train);
        auto models = train_roster(train, cfg_, derive_seed(regime_seed, 0));
        for (const auto& plan : r.plans) {
          Dataset test = ds_.select_groups(plan.test);
          std::vector<ClassifierOutcome> row;
          for (auto& [m, cv] : models) {
            auto o = bench_detail::score_test(m, test);
            o.hyperparameters = m.hyperparameters;
            if (&plan == &r.plans.front()) o.cv = cv;
            row.push_back(std::move(o));
          }
          r.outcomes.push_back(std::move(row));
          checkpoint(partial_path, progress, spec.regime, plan.repetition);
        }
        continue;
      }
      for (const auto& plan : r.plans) {
        Dataset train = ds_.select_groups(plan.train);
        Dataset test = ds_.select_groups(plan.test);
        std::vector<ClassifierOutcome> row;
        if (train.has_both_classes()) {
          auto models = train_roster(train, cfg_, derive_seed(regime_seed, plan.repetition));
          for (auto& [m, cv] : models) {
            auto o = bench_detail::score_test(m, test);
            o.hyperparameters = m.hyperparameters;
            o.cv = std::move(cv);
            row.push_back(std::move(o));
          }
        } else {
          row.resize(cfg_.classifiers.size());
        }
        r.outcomes.push_back(std::move(row));
        checkpoint(partial_path, progress, spec.regime, plan.repetition);
      }
    }
    nlohmann::json report = build_report(true);
    if (partial_path) write_file(*partial_path, report.dump(2) + "\n");
    return report;
  }

  const std::vector<RegimeReport>& regimes() const { return reports_; }

  nlohmann::json build_report(bool complete) const {
    nlohmann::json out;
    out["complete"] = complete;
    out["config"] = cfg_.source;
    std::vector<std::string> names;
    for (const auto& c : cfg_.classifiers) names.emplace_back(model_kind_name(c.kind));
    out["classifiers"] = names;
    std::size_t tracking = ds_.positives();
    out["data"] = {{"emails", emails_.size()}, {"images", ds_.rows()}, {"tracking_images", tracking},
                   {"schema_version", ds_.schema_version}};
    nlohmann::json regimes = nlohmann::json::object();
    for (const auto& r : reports_) regimes[std::string(regime_name(r.regime))] = regime_json(r, names);
    out["regimes"] = regimes;
    return out;
  }

 private:
  void checkpoint(const std::optional<std::filesystem::path>& path,
                  const std::function<void(const std::string&)>& progress, Regime regime,
                  std::size_t repetition) {
    if (path) write_file(*path, build_report(false).dump(2) + "\n");
    if (progress)
      progress(std::string(regime_name(regime)) + " repetition " + std::to_string(repetition + 1) + " done");
  }

  nlohmann::json regime_json(const RegimeReport& r, const std::vector<std::string>& names) const {
    using bench_detail::opt;
    const std::size_t k = names.size();
    nlohmann::json reps = nlohmann::json::array();
    std::vector<std::vector<double>> rank_rows;
    std::vector<double> sum_auc(k, 0), sum_sens(k, 0), sum_spec(k, 0);
    std::size_t complete_rows = 0;
    for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
      const SplitPlan& plan = r.plans[i];
      const auto& row = r.outcomes[i];
      nlohmann::json rj;
      rj["index"] = plan.repetition;
      rj["train_emails"] = plan.train.size();
      rj["test_emails"] = plan.test.size();
      if (plan.window)
        rj["window"] = {{"start_exclusive", to_iso8601(plan.window->first)},
                        {"end_inclusive", to_iso8601(plan.window->second)}};
      nlohmann::json results = nlohmann::json::object();
      nlohmann::json cvs = nlohmann::json::object();
      bool all_scored = row.size() == k;
      std::vector<double> aucs;
      for (std::size_t c = 0; c < row.size(); ++c) {
        const auto& o = row[c];
        results[names[c]] = {{"auc", opt(o.auc)},
                             {"sensitivity", opt(o.sensitivity)},
                             {"specificity", opt(o.specificity)},
                             {"threshold", o.threshold},
                             {"hyperparameters", o.hyperparameters}};
        if (o.cv) cvs[names[c]] = bench_detail::cv_json(*o.cv);
        if (!o.auc) all_scored = false;
        else aucs.push_back(*o.auc);
      }
      rj["results"] = results;
      if (!cvs.empty()) rj["cross_validation"] = cvs;
      if (all_scored && k > 0) {
        auto ranks = ranks_from_auc(aucs);
        nlohmann::json rk = nlohmann::json::object();
        for (std::size_t c = 0; c < k; ++c) {
          rk[names[c]] = ranks[c];
          sum_auc[c] += *row[c].auc;
          sum_sens[c] += *row[c].sensitivity;
          sum_spec[c] += *row[c].specificity;
        }
        rj["ranks"] = rk;
        rank_rows.push_back(std::move(ranks));
        ++complete_rows;
      } else {
        rj["note"] = "test or training data lacks a class; excluded from ranking";
      }
      reps.push_back(std::move(rj));
    }
    nlohmann::json out;
    out["repetitions"] = reps;
    if (complete_rows > 0) {
      nlohmann::json summary = nlohmann::json::object();
      for (std::size_t c = 0; c < k; ++c)
        summary[names[c]] = {{"mean_auc", sum_auc[c] / double(complete_rows)},
                             {"mean_sensitivity", sum_sens[c] / double(complete_rows)},
                             {"mean_specificity", sum_spec[c] / double(complete_rows)}};
      out["summary"] = summary;
    }
    if (rank_rows.size() >= 2 && k >= 2) {
      nlohmann::json avg = nlohmann::json::object();
      try {
        FriedmanResult f = friedman_test(rank_rows);
        for (std::size_t c = 0; c < k; ++c) avg[names[c]] = f.average_ranks[c];
        out["average_ranks"] = avg;
        out["friedman"] = {{"statistic", f.statistic}, {"p_value", f.p_value}, {"rows", rank_rows.size()}};
        if (f.p_value < cfg_.alpha) {
          auto pw = pairwise_vs_best(f.average_ranks, rank_rows.size());
          nlohmann::json cmp = nlohmann::json::object();
          for (std::size_t c = 0; c < k; ++c)
            if (c != pw.control)
              cmp[names[c]] = {{"z", pw.z[c]}, {"p_raw", pw.p_raw[c]}, {"p_adjusted", pw.p_adjusted[c]}};
          out["posthoc"] = {{"control", names[pw.control]}, {"comparisons", cmp}};
        } else {
          out["posthoc_note"] = "Friedman test not rejected at alpha; pairwise comparisons skipped";
        }
      } catch (const Error& e) {
        if (e.code() != Errc::kDegenerateInput) throw;
        std::vector<double> mean(k, 0.0);
        for (const auto& row : rank_rows)
          for (std::size_t c = 0; c < k; ++c) mean[c] += row[c] / double(rank_rows.size());
        for (std::size_t c = 0; c < k; ++c) avg[names[c]] = mean[c];
        out["average_ranks"] = avg;
        out["friedman_note"] = e.what();
      }
    } else if (rank_rows.size() == 1) {
      nlohmann::json avg = nlohmann::json::object();
      for (std::size_t c = 0; c < k; ++c) avg[names[c]] = rank_rows[0][c];
      out["average_ranks"] = avg;
      out["friedman_note"] = "a single ranked row; no test";
    }
    return out;
  }

  const Dataset& ds_;
  BenchmarkConfig cfg_;
  std::vector<EmailMeta> emails_;
  std::vector<RegimeReport> reports_;
};

inline nlohmann::json run_benchmark(const Dataset& ds, const BenchmarkConfig& cfg,
                                    const std::optional<std::filesystem::path>& partial_path = {}) {
  Benchmark b(ds, cfg);
  return b.run(partial_path);
}

// Flat metric table: regime, repetition, classifier, auc, sensitivity,
// specificity, threshold.
inline std::string report_csv(const nlohmann::json& report) {
  std::string out = "regime,repetition,classifier,auc,sensitivity,specificity,threshold\n";
  auto cell = [](const nlohmann::json& v) {
    return v.is_null() ? std::string() : strings::format_double(v.get<double>());
  };
  for (const auto& [regime, body] : report.at("regimes").items())
    for (const auto& rep : body.at("repetitions"))
      for (const auto& [clf, res] : rep.at("results").items())
        out += regime + "," + std::to_string(rep.at("index").get<std::size_t>()) + "," + clf + "," +
               cell(res.at("auc")) + "," + cell(res.at("sensitivity")) + "," +
               cell(res.at("specificity")) + "," + cell(res.at("threshold")) + "\n";
  return out;
}

}  // namespace tracksieve

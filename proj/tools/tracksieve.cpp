// tracksieve command line: corpus generation, labeling, features, training,
// evaluation and sanitizing, with every intermediate artifact on disk.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tracksieve/tracksieve.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tracksieve;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;

json read_json_file(const fs::path& p) { return json::parse(read_file(p)); }

// Inline JSON, or "@path" for a file.
json json_argument(const std::string& text) {
  if (!text.empty() && text.front() == '@') return read_json_file(text.substr(1));
  return json::parse(text);
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

BlacklistRuleSet rules_or_default(const std::string& path) {
  return path.empty() ? default_rules() : compile_rules(path);
}

Dataset labeled_rows(const Dataset& ds) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.rows(); ++i)
    if (ds.y[i] >= 0) keep.push_back(i);
  return ds.subset(keep);
}

struct Options {
  // gen-corpus
  std::string config, out_a, out_b, manifest;
  std::optional<std::uint64_t> seed;
  bool adversarial = false;
  // label / featurize / stats
  std::string dir_a, dir_b, labels, out, corpus;
  bool excluded_features = false;
  std::size_t token_flags = 0;
  // train
  std::string features, kind = "random_forest", hyperparameters, grid, rules;
  bool no_resample = false;
  double target_sensitivity = 0.9999;
  // evaluate
  std::string csv;
  // importance / sanitize
  std::string model, mode = "strip", in, report;
  std::size_t top = 0;
  bool fail_closed = false;
  // blacklist-check
  std::string url;
};

int gen_corpus(const Options& o) {
  GenConfig cfg = parse_gen_config(o.config.empty() ? json::object() : read_json_file(o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.adversarial) cfg.adversarial = true;
  auto summary = generate_corpus(cfg, o.out_a, o.out_b, o.manifest);
  std::cout << to_json(summary).dump() << "\n";
  return kOk;
}

int label(const Options& o) {
  LabeledCorpus c = label_corpus(o.dir_a, o.dir_b);
  write_labels_jsonl(o.out, c.labels);
  std::cout << to_json(c).dump() << "\n";
  return kOk;
}

int featurize(const Options& o) {
  Mailbox box = load_mailbox(o.dir_a);
  auto docs = attach_labels(std::move(box.documents), read_labels_jsonl(o.labels));
  FeatureOptions opts;
  opts.excluded_features = o.excluded_features;
  if (o.token_flags > 0) {
    if (!opts.excluded_features) throw Error(Errc::kConfig, "--token-flags needs --excluded-features");
    std::vector<std::string> urls;
    std::vector<Label> ys;
    for (const auto& d : docs)
      for (const auto& img : d.images)
        if (img.label) {
          urls.push_back(img.url);
          ys.push_back(*img.label);
        }
    opts.token_flags = discover_tokens(urls, ys, o.token_flags);
  }
  SchemaPtr schema = make_feature_schema(opts);
  std::vector<FeatureVector> rows;
  for (const auto& d : docs) {
    auto v = featurize_email(d, opts, schema);
    rows.insert(rows.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  write_features_csv(o.out, *schema, rows);
  std::cout << json{{"rows", rows.size()}, {"schema_version", schema->version}}.dump() << "\n";
  return kOk;
}

int train(const Options& o) {
  const ModelKind kind = parse_model_kind(o.kind);
  const std::uint64_t seed = o.seed.value_or(1);
  const BlacklistRuleSet rules = rules_or_default(o.rules);
  if (kind == ModelKind::kBlacklist && o.features.empty()) {
    save_model(o.out, make_blacklist_model(rules));
    return kOk;
  }
  if (o.features.empty()) throw Error(Errc::kConfig, "--features is required for " + o.kind);
  Dataset ds = labeled_rows(read_features_csv(o.features));
  if (!o.no_resample) ds = resample_training(ds, derive_seed(seed, 1));

  json hp = o.hyperparameters.empty() ? json::object() : json_argument(o.hyperparameters);
  json cv_report;
  if (!o.grid.empty() && kind != ModelKind::kBlacklist) {
    CrossValidation cv = cross_validate(ds, kind, expand_grid(json_argument(o.grid)), derive_seed(seed, 2));
    hp = cv.best;
    cv_report = json::array();
    for (const auto& g : cv.grid)
      cv_report.push_back({{"hyperparameters", g.hyperparameters},
                           {"mean_auc", std::isfinite(g.mean_auc) ? json(g.mean_auc) : json(nullptr)},
                           {"folds", g.folds_used}});
  }
  TrainedModel m = fit_with_threshold(kind, ds, hp, derive_seed(seed, 3), o.target_sensitivity, &rules);
  m.seed = seed;
  save_model(o.out, m);
  json summary = {{"kind", o.kind}, {"rows", ds.rows()}, {"decision_threshold", m.decision_threshold}};
  if (!cv_report.is_null()) summary["cross_validation"] = cv_report;
  std::cout << summary.dump() << "\n";
  return kOk;
}

int evaluate(const Options& o) {
  BenchmarkConfig cfg = parse_benchmark_config(read_json_file(o.config));
  if (o.seed) cfg.seed = *o.seed;
  LabeledCorpus corpus = label_corpus(o.corpus);
  FeatureOptions opts;
  opts.excluded_features = cfg.needs_excluded_features();
  Dataset ds = build_dataset(corpus.documents, opts);
  Benchmark bench(ds, cfg);
  json report = bench.run(fs::path(o.out), [](const std::string& line) { std::cerr << line << "\n"; });
  write_json(o.out, report);
  if (!o.csv.empty()) write_file(o.csv, report_csv(report));
  return kOk;
}

int importance(const Options& o) {
  TrainedModel m = load_model(o.model);
  auto ranked = ranked_importance(m);
  if (o.top > 0 && ranked.size() > o.top) ranked.resize(o.top);
  json out = json::array();
  for (const auto& [name, value] : ranked) out.push_back({{"feature", name}, {"importance", value}});
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int sanitize_cmd(const Options& o) {
  TrainedModel m = load_model(o.model);
  SanitizeOptions opts;
  opts.mode = parse_sanitize_mode(o.mode);
  opts.fail_closed = o.fail_closed;
  SanitizeResult r = sanitize(read_file(o.in), m, rules_or_default(o.rules), opts);
  write_file(o.out, r.raw);
  if (!o.report.empty()) write_json(o.report, to_json(r));
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int blacklist_check(const Options& o) {
  const BlacklistRuleSet rules = rules_or_default(o.rules);
  std::cout << match_url(o.url, rules).value_or("none") << "\n";
  return kOk;
}

int stats(const Options& o) {
  LabeledCorpus corpus = o.corpus.empty() ? label_corpus(o.dir_a, o.dir_b) : label_corpus(o.corpus);
  json j = to_json(corpus_stats(corpus.documents));
  if (o.out.empty()) std::cout << j.dump(2) << "\n";
  else write_json(o.out, j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect and strip email tracking images"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-corpus", "Generate paired synthetic mailboxes");
  gen->add_option("--config", o.config, "Generator config (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--out-a", o.out_a, "Mailbox A directory")->required();
  gen->add_option("--out-b", o.out_b, "Mailbox B directory")->required();
  gen->add_option("--manifest", o.manifest, "Ground-truth manifest (JSON Lines)")->required();
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_flag("--adversarial", o.adversarial, "Randomize tracking image sizes and extensions");

  auto* lab = app.add_subcommand("label", "Label images by diffing two mailboxes");
  lab->add_option("--a", o.dir_a, "Mailbox A")->required()->check(CLI::ExistingDirectory);
  lab->add_option("--b", o.dir_b, "Mailbox B")->required()->check(CLI::ExistingDirectory);
  lab->add_option("--out", o.out, "Labels (JSON Lines)")->required();

  auto* feat = app.add_subcommand("featurize", "Compute image features");
  feat->add_option("--a", o.dir_a, "Mailbox A")->required()->check(CLI::ExistingDirectory);
  feat->add_option("--labels", o.labels, "Labels (JSON Lines)")->required()->check(CLI::ExistingFile);
  feat->add_option("--out", o.out, "Features CSV")->required();
  feat->add_flag("--excluded-features", o.excluded_features, "Also emit the non-resilient features");
  feat->add_option("--token-flags", o.token_flags, "Number of discovered URL token flags");

  auto* tr = app.add_subcommand("train", "Train a classifier");
  tr->add_option("--features", o.features, "Features CSV")->check(CLI::ExistingFile);
  tr->add_option("--kind", o.kind, "blacklist|baseline|logit|mlp|random_forest|gbm");
  tr->add_option("--hyperparameters", o.hyperparameters, "JSON object or @file");
  tr->add_option("--grid", o.grid, "Grid for cross-validation, JSON or @file");
  tr->add_option("--rules", o.rules, "Blacklist rule file")->check(CLI::ExistingFile);
  tr->add_option("--seed", o.seed, "Random seed");
  tr->add_option("--target-sensitivity", o.target_sensitivity, "Threshold tuning target");
  tr->add_flag("--no-resample", o.no_resample, "Train on all rows");
  tr->add_option("--out", o.out, "Model file")->required();

  auto* ev = app.add_subcommand("evaluate", "Run the benchmark");
  ev->add_option("--corpus", o.corpus, "Corpus directory holding a/ and b/")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--config", o.config, "Benchmark config (JSON)")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "Report (JSON)")->required();
  ev->add_option("--csv", o.csv, "Metric table (CSV)");
  ev->add_option("--seed", o.seed, "Random seed");

  auto* imp = app.add_subcommand("importance", "Print feature importances of a model");
  imp->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  imp->add_option("--top", o.top, "Show only the first N");

  auto* san = app.add_subcommand("sanitize", "Remove predicted tracking images from an email");
  san->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  san->add_option("--rules", o.rules, "Blacklist rule file")->check(CLI::ExistingFile);
  san->add_option("--mode", o.mode, "strip|neutralize")->check(CLI::IsMember({"strip", "neutralize"}));
  san->add_option("--in", o.in, "Input email")->required()->check(CLI::ExistingFile);
  san->add_option("--out", o.out, "Output email")->required();
  san->add_option("--report", o.report, "Report (JSON)");
  san->add_flag("--fail-closed", o.fail_closed, "Block every image of unparseable mail");

  auto* bl = app.add_subcommand("blacklist-check", "Match a URL against the blacklist");
  bl->add_option("--rules", o.rules, "Blacklist rule file")->check(CLI::ExistingFile);
  bl->add_option("--url", o.url, "Image URL")->required();

  auto* st = app.add_subcommand("stats", "Corpus statistics");
  st->add_option("--corpus", o.corpus, "Corpus directory holding a/ and b/");
  st->add_option("--a", o.dir_a, "Mailbox A");
  st->add_option("--b", o.dir_b, "Mailbox B");
  st->add_option("--out", o.out, "Output (JSON); stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  if (st->parsed() && o.corpus.empty() && (o.dir_a.empty() || o.dir_b.empty())) {
    std::cerr << "stats: give --corpus or both --a and --b\n" << app.help();
    return kUsage;
  }

  try {
    if (gen->parsed()) return gen_corpus(o);
    if (lab->parsed()) return label(o);
    if (feat->parsed()) return featurize(o);
    if (tr->parsed()) return train(o);
    if (ev->parsed()) return evaluate(o);
    if (imp->parsed()) return importance(o);
    if (san->parsed()) return sanitize_cmd(o);
    if (bl->parsed()) return blacklist_check(o);
    if (st->parsed()) return stats(o);
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return kDataError;
  } catch (const json::exception& e) {
    std::cerr << "error [json]: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

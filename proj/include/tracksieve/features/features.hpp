#pragma once

// Per-image predictors evaluated in the context of the image's email.
//
// The default ("resilient") schema deliberately contains nothing a tracker
// can change cosmetically: no image size (except the within-email ratio of
// smaller images), no presentational attributes, no keyword flags. Those
// live in the opt-in excluded group, which the baseline rule needs.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/email/document.hpp"
#include "tracksieve/features/similarity.hpp"
#include "tracksieve/features/tokens.hpp"
#include "tracksieve/strings.hpp"

namespace tracksieve {

inline constexpr std::string_view kSchemaBase = "tracksieve-features-1";

struct FeatureOptions {
  bool excluded_features = false;
  // Extra keyword-token flags for the excluded group ("tok_<token>").
  std::vector<std::string> token_flags;
};

struct FeatureSchema {
  std::string version;
  std::vector<std::string> names;
  bool excluded_features = false;

  std::optional<std::size_t> index(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }
};

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

// Named components in schema order for one group.
using Components = std::vector<std::pair<std::string_view, double>>;

inline double component(const Components& c, std::string_view name) {
  for (const auto& [n, v] : c)
    if (n == name) return v;
  throw std::out_of_range("no component " + std::string(name));
}

struct FeatureVector {
  std::string email_id;
  std::size_t position = 0;
  std::string url;  // carried for rule-based scoring; not a feature
  std::optional<Label> label;
  SchemaPtr schema;
  std::vector<double> values;
  bool malformed_url = false;

  double at(std::string_view name) const {
    auto i = schema->index(name);
    if (!i) throw std::out_of_range("feature not in schema: " + std::string(name));
    return values[*i];
  }
};

namespace feature_names {

inline constexpr std::array<std::string_view, 28> kReference = {
    "count_ids_filename",  "count_ids_path",        "count_number_strings",
    "count_number_letter_changes", "count_numbers", "count_punctuation",
    "count_strings",       "count_uppercase",       "fmt_is_jpg",
    "fmt_is_php",          "fmt_is_none",           "share_same_fileformat",
    "filename_length",     "link_sim_max",          "link_sim_mean",
    "link_sim_min",        "ref_length",            "rel_ref_length",
    "domain_length",       "longest_number",        "letter_dev_b",
    "letter_dev_f",        "letter_dev_m",          "letter_dev_w",
    "folder_count",        "rel_filename_length",   "rel_folder_count",
    "has_question_mark"};

inline constexpr std::array<std::string_view, 3> kStructure = {
    "count_identical_images", "ratio_smaller_images", "rel_image_position"};

inline constexpr std::array<std::string_view, 2> kServer = {
    "share_same_domain", "sender_domain_match"};

inline constexpr std::array<std::string_view, 5> kHeader = {
    "image_name_matches_sender", "unsubscribe_length", "match_list_unsubscribe",
    "match_received_spf", "match_return_path"};

inline constexpr std::array<std::string_view, 12> kExcludedStructure = {
    "align_set",    "area",          "area_eq_0",      "area_eq_1",
    "area_ge_101",  "area_11_100",   "area_absent",    "border_width",
    "class_length", "style_display", "image_width",    "title_length"};

inline constexpr std::array<std::string_view, 7> kKeywords = {
    "uid", "open", "track", "view", "click", "id", "@"};

inline std::string keyword_feature(std::string_view kw) {
  return kw == "@" ? "kw_at" : "kw_" + std::string(kw);
}

}  // namespace feature_names

inline SchemaPtr make_feature_schema(const FeatureOptions& opts = {}) {
  auto schema = std::make_shared<FeatureSchema>();
  schema->version = std::string(kSchemaBase);
  using namespace feature_names;
  for (auto n : kReference) schema->names.emplace_back(n);
  for (auto n : kStructure) schema->names.emplace_back(n);
  for (auto n : kServer) schema->names.emplace_back(n);
  for (auto n : kHeader) schema->names.emplace_back(n);
  if (opts.excluded_features) {
    schema->excluded_features = true;
    schema->version += "+excluded";
    for (auto n : kExcludedStructure) schema->names.emplace_back(n);
    for (auto kw : kKeywords) schema->names.push_back(keyword_feature(kw));
    if (!opts.token_flags.empty()) {
      schema->version += "+tokens";
      for (const auto& t : opts.token_flags) {
        schema->names.push_back("tok_" + t);
        schema->version += ":" + t;
      }
    }
  }
  return schema;
}

// --------------------------------------------------------------------------
// Email context

struct EmailContext {
  std::size_t image_count = 0;
  double mean_ref_length = 0;
  double mean_folder_count = 0;
  double mean_filename_length = 0;
  std::array<double, 4> mean_letter{};  // b, f, m, w
  std::map<std::string, std::size_t> host_histogram;       // "" = no host
  std::map<std::string, std::size_t> extension_histogram;  // "" = none
  std::map<std::string, std::size_t> url_counts;
  std::vector<std::optional<std::int64_t>> areas;
  std::vector<RefTokens> tokens;
  std::vector<bool> malformed;
  // Link similarity of each image to every other image of the email.
  std::vector<double> sim_min, sim_mean, sim_max;
};

namespace feature_detail {

inline constexpr std::array<char, 4> kLetters = {'b', 'f', 'm', 'w'};

inline std::size_t letter_count(std::string_view url, char letter) {
  std::size_t n = 0;
  for (char c : url) n += strings::to_lower(c) == letter;
  return n;
}

// ID token: a maximal alphanumeric run of at least 8 characters containing
// a digit (mixed letter/digit runs and pure digit runs qualify).
inline bool is_id_token(std::string_view run) {
  if (run.size() < 8) return false;
  for (char c : run)
    if (strings::is_digit(c)) return true;
  return false;
}

inline std::size_t count_ids(std::string_view s) {
  std::size_t n = 0;
  for (const auto& run : alnum_runs(s)) n += is_id_token(run);
  return n;
}

inline std::string_view after_host(std::string_view url) {
  std::size_t scheme = url.find("//");
  if (scheme == std::string_view::npos) return url;
  std::size_t slash = url.find_first_of("/?#", scheme + 2);
  return slash == std::string_view::npos ? std::string_view{} : url.substr(slash);
}

inline std::string extension_key(const RefTokens& t) {
  return t.extension ? *t.extension : std::string();
}

}  // namespace feature_detail

inline EmailContext build_email_context(const std::vector<ImageRecord>& images) {
  using namespace feature_detail;
  EmailContext ctx;
  const std::size_t n = images.size();
  ctx.image_count = n;
  ctx.tokens.resize(n);
  ctx.malformed.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      ctx.tokens[i] = tokenize_reference(images[i].url);
    } catch (const Error& e) {
      if (e.code() != Errc::kMalformedUrl) throw;
      ctx.tokens[i] = RefTokens{};
      ctx.malformed[i] = true;
    }
    const RefTokens& t = ctx.tokens[i];
    ctx.mean_ref_length += double(images[i].url.size());
    ctx.mean_folder_count += double(t.folders.size());
    ctx.mean_filename_length += double(t.filename.size());
    for (std::size_t k = 0; k < kLetters.size(); ++k)
      ctx.mean_letter[k] += double(letter_count(images[i].url, kLetters[k]));
    ctx.host_histogram[t.host.value_or("")]++;
    ctx.extension_histogram[extension_key(t)]++;
    ctx.url_counts[images[i].url]++;
    ctx.areas.push_back(images[i].area_px2);
  }
  if (n > 0) {
    ctx.mean_ref_length /= double(n);
    ctx.mean_folder_count /= double(n);
    ctx.mean_filename_length /= double(n);
    for (double& m : ctx.mean_letter) m /= double(n);
  }

  // Similarities are computed once per distinct URL pair.
  std::vector<std::string> unique;
  std::map<std::string, std::size_t> unique_index;
  std::vector<std::size_t> uid(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = unique_index.emplace(images[i].url, unique.size());
    if (inserted) unique.push_back(images[i].url);
    uid[i] = it->second;
  }
  const std::size_t u = unique.size();
  std::vector<double> sim(u * u, 1.0);
  for (std::size_t p = 0; p < u; ++p)
    for (std::size_t q = p + 1; q < u; ++q)
      sim[p * u + q] = sim[q * u + p] = ratcliff_obershelp(unique[p], unique[q]);

  ctx.sim_min.assign(n, 1.0);
  ctx.sim_mean.assign(n, 1.0);
  ctx.sim_max.assign(n, 1.0);
  if (n >= 2) {
    // Aggregate over distinct URLs weighted by multiplicity, excluding self.
    std::vector<std::size_t> mult(u, 0);
    for (std::size_t i = 0; i < n; ++i) mult[uid[i]]++;
    std::vector<double> umin(u), umean(u), umax(u);
    for (std::size_t p = 0; p < u; ++p) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
      for (std::size_t q = 0; q < u; ++q) {
        std::size_t m = mult[q] - (q == p ? 1 : 0);
        if (m == 0) continue;
        double s = sim[p * u + q];
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        sum += s * double(m);
      }
      umin[p] = lo;
      umax[p] = hi;
      umean[p] = sum / double(n - 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      ctx.sim_min[i] = umin[uid[i]];
      ctx.sim_mean[i] = umean[uid[i]];
      ctx.sim_max[i] = umax[uid[i]];
    }
  }
  return ctx;
}

// --------------------------------------------------------------------------
// Component groups

inline Components reference_features(const ImageRecord& img, std::size_t index,
                                     const EmailContext& ctx) {
  using namespace feature_detail;
  const RefTokens& t = ctx.tokens[index];
  const std::string& url = img.url;

  double digits = 0, uppercase = 0, punctuation = 0, changes = 0;
  double number_strings = 0, letter_strings = 0, longest_number = 0;
  std::size_t digit_run = 0;
  for (std::size_t i = 0; i < url.size(); ++i) {
    char c = url[i];
    bool d = strings::is_digit(c), a = strings::is_alpha(c);
    digits += d;
    uppercase += strings::is_upper(c);
    punctuation += !(d || a);
    if (d) {
      digit_run++;
      longest_number = std::max(longest_number, double(digit_run));
      if (i == 0 || !strings::is_digit(url[i - 1])) number_strings++;
    } else {
      digit_run = 0;
    }
    if (a && (i == 0 || !strings::is_alpha(url[i - 1]))) letter_strings++;
    if (i > 0) {
      char p = url[i - 1];
      if ((strings::is_digit(p) && a) || (strings::is_alpha(p) && d)) changes++;
    }
  }

  const std::string ext = extension_key(t);
  const double n = double(std::max<std::size_t>(ctx.image_count, 1));
  auto ext_it = ctx.extension_histogram.find(ext);
  double same_ext = ext_it == ctx.extension_histogram.end() ? 0 : double(ext_it->second);

  Components c;
  c.reserve(feature_names::kReference.size());
  c.emplace_back("count_ids_filename", double(count_ids(t.filename)));
  c.emplace_back("count_ids_path", double(count_ids(after_host(url))));
  c.emplace_back("count_number_strings", number_strings);
  c.emplace_back("count_number_letter_changes", changes);
  c.emplace_back("count_numbers", digits);
  c.emplace_back("count_punctuation", punctuation);
  c.emplace_back("count_strings", letter_strings);
  c.emplace_back("count_uppercase", uppercase);
  c.emplace_back("fmt_is_jpg", double(ext == "jpg" || ext == "jpeg"));
  c.emplace_back("fmt_is_php", double(ext == "php"));
  c.emplace_back("fmt_is_none", double(!t.extension.has_value()));
  c.emplace_back("share_same_fileformat", same_ext / n);
  c.emplace_back("filename_length", double(t.filename.size()));
  c.emplace_back("link_sim_max", ctx.sim_max[index]);
  c.emplace_back("link_sim_mean", ctx.sim_mean[index]);
  c.emplace_back("link_sim_min", ctx.sim_min[index]);
  c.emplace_back("ref_length", double(url.size()));
  c.emplace_back("rel_ref_length", double(url.size()) - ctx.mean_ref_length);
  c.emplace_back("domain_length", double(t.host ? t.host->size() : 0));
  c.emplace_back("longest_number", longest_number);
  for (std::size_t k = 0; k < kLetters.size(); ++k)
    c.emplace_back(feature_names::kReference[20 + k],
                   double(letter_count(url, kLetters[k])) - ctx.mean_letter[k]);
  c.emplace_back("folder_count", double(t.folders.size()));
  c.emplace_back("rel_filename_length", double(t.filename.size()) - ctx.mean_filename_length);
  c.emplace_back("rel_folder_count", double(t.folders.size()) - ctx.mean_folder_count);
  c.emplace_back("has_question_mark", double(url.find('?') != std::string::npos));
  return c;
}

inline Components structure_features(const ImageRecord& img, std::size_t index,
                                     const EmailContext& ctx) {
  double identical = double(ctx.url_counts.at(img.url)) - 1.0;
  double smaller = 0;
  if (img.area_px2) {
    for (std::size_t j = 0; j < ctx.areas.size(); ++j)
      if (j != index && ctx.areas[j] && *ctx.areas[j] < *img.area_px2) smaller++;
  }
  double n = double(std::max<std::size_t>(ctx.image_count, 1));
  double position = ctx.image_count <= 1 ? 0.0 : double(index) / double(ctx.image_count - 1);
  return {{"count_identical_images", identical},
          {"ratio_smaller_images", smaller / n},
          {"rel_image_position", position}};
}

inline Components server_features(const ImageRecord&, std::size_t index,
                                  const EmailContext& ctx, const EmailDocument& doc) {
  const RefTokens& t = ctx.tokens[index];
  double n = double(std::max<std::size_t>(ctx.image_count, 1));
  double same_host = double(ctx.host_histogram.at(t.host.value_or("")));
  std::string sender_reg = registrable_domain(doc.sender_domain);
  bool match = t.host && !sender_reg.empty() && t.registrable_domain == sender_reg;
  return {{"share_same_domain", same_host / n}, {"sender_domain_match", double(match)}};
}

inline Components header_features(const ImageRecord&, std::size_t index,
                                  const EmailContext& ctx, const EmailDocument& doc) {
  const RefTokens& t = ctx.tokens[index];
  auto header = [&](const char* name) -> std::string {
    auto it = doc.header_fields.find(name);
    return it == doc.header_fields.end() ? std::string() : it->second;
  };
  auto matches = [&](const std::string& value) {
    if (value.empty()) return 0.0;
    for (const auto& seg : t.alnum_segments)
      if (seg.size() >= 8 && value.find(seg) != std::string::npos) return 1.0;
    return 0.0;
  };
  std::string reg = registrable_domain(doc.sender_domain);
  std::string first_label = reg.substr(0, reg.find('.'));
  bool name_match = !first_label.empty() &&
                    strings::ifind(t.filename, first_label) != std::string_view::npos;
  std::string unsubscribe = header("list-unsubscribe");
  return {{"image_name_matches_sender", double(name_match)},
          {"unsubscribe_length", double(unsubscribe.size())},
          {"match_list_unsubscribe", matches(unsubscribe)},
          {"match_received_spf", matches(header("received-spf"))},
          {"match_return_path", matches(header("return-path"))}};
}

namespace feature_detail {

inline double pixel_attr(const ImageRecord& img, const char* key) {
  auto it = img.attrs.find(key);
  if (it == img.attrs.end()) return 0;
  auto d = area_detail::parse_dimension(std::string_view(it->second));
  return d.kind == area_detail::Dim::kPixels ? double(d.px) : 0;
}

inline double attr_length(const ImageRecord& img, const char* key) {
  auto it = img.attrs.find(key);
  return it == img.attrs.end() ? 0 : double(it->second.size());
}

}  // namespace feature_detail

// Size, presentational and keyword predictors. Only computed when the
// excluded group is requested.
inline Components excluded_features(const ImageRecord& img, const FeatureOptions& opts) {
  using namespace feature_detail;
  Components c;
  const auto area = img.area_px2;
  auto style = img.attrs.count("style") ? img.attrs.at("style") : std::string();
  c.emplace_back("align_set", double(img.attrs.count("align") > 0));
  c.emplace_back("area", area ? double(*area) : 0.0);
  c.emplace_back("area_eq_0", double(area && *area == 0));
  c.emplace_back("area_eq_1", double(area && *area == 1));
  c.emplace_back("area_ge_101", double(area && *area >= 101));
  c.emplace_back("area_11_100", double(area && *area >= 11 && *area <= 100));
  c.emplace_back("area_absent", double(!area));
  c.emplace_back("border_width", pixel_attr(img, "border"));
  c.emplace_back("class_length", attr_length(img, "class"));
  c.emplace_back("style_display", double(strings::ifind(style, "display") != std::string_view::npos));
  c.emplace_back("image_width", pixel_attr(img, "width"));
  c.emplace_back("title_length", attr_length(img, "title"));
  static const std::vector<std::string> kKeywordNames = [] {
    std::vector<std::string> v;
    for (auto kw : feature_names::kKeywords) v.push_back(feature_names::keyword_feature(kw));
    return v;
  }();
  for (std::size_t k = 0; k < feature_names::kKeywords.size(); ++k) {
    std::string_view kw = feature_names::kKeywords[k];
    bool hit = strings::ifind(img.url, kw) != std::string_view::npos ||
               (kw == "@" && strings::ifind(img.url, "%40") != std::string_view::npos);
    c.emplace_back(kKeywordNames[k], double(hit));
  }
  if (!opts.token_flags.empty()) {
    std::set<std::string> tokens;
    for (const auto& run : alnum_runs(img.url)) tokens.insert(strings::to_lower(run));
    for (const auto& t : opts.token_flags) c.emplace_back(t, double(tokens.count(t) > 0));
  }
  return c;
}

// Keyword tokens with the highest tracking/content occurrence ratio among
// tokens present in at least `min_share` of the images.
inline std::vector<std::string> discover_tokens(const std::vector<std::string>& urls,
                                                const std::vector<Label>& labels,
                                                std::size_t k, double min_share = 0.01) {
  std::map<std::string, std::pair<double, double>> counts;  // tracking, content
  double n_track = 0, n_content = 0;
  for (std::size_t i = 0; i < urls.size(); ++i) {
    bool tracking = labels[i] == Label::kTracking;
    (tracking ? n_track : n_content) += 1;
    std::set<std::string> seen;
    for (const auto& run : alnum_runs(urls[i])) {
      std::string tok = strings::to_lower(run);
      bool alpha = std::all_of(tok.begin(), tok.end(), strings::is_alpha);
      if (!alpha || tok.size() < 2 || tok.size() > 12 || !seen.insert(tok).second) continue;
      auto& cnt = counts[tok];
      (tracking ? cnt.first : cnt.second) += 1;
    }
  }
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [tok, cnt] : counts) {
    if (cnt.first + cnt.second < min_share * double(urls.size())) continue;
    double ratio = ((cnt.first + 1) / (n_track + 1)) / ((cnt.second + 1) / (n_content + 1));
    ranked.emplace_back(-ratio, tok);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && out.size() < k; ++i) out.push_back(ranked[i].second);
  return out;
}

// --------------------------------------------------------------------------
// Featurization

inline std::vector<FeatureVector> featurize_email(const EmailDocument& doc,
                                                  const FeatureOptions& opts,
                                                  const SchemaPtr& schema) {
  std::vector<FeatureVector> out;
  if (!doc.is_html || doc.images.empty()) return out;
  EmailContext ctx = build_email_context(doc.images);
  out.reserve(doc.images.size());
  for (std::size_t i = 0; i < doc.images.size(); ++i) {
    const ImageRecord& img = doc.images[i];
    FeatureVector fv;
    fv.email_id = doc.email_id;
    fv.position = img.position;
    fv.url = img.url;
    fv.label = img.label;
    fv.schema = schema;
    fv.malformed_url = ctx.malformed[i];
    fv.values.reserve(schema->names.size());
    auto append = [&](const Components& c) {
      for (const auto& [name, value] : c)
        fv.values.push_back(std::isfinite(value) ? value : 0.0);
    };
    append(reference_features(img, i, ctx));
    append(structure_features(img, i, ctx));
    append(server_features(img, i, ctx, doc));
    append(header_features(img, i, ctx, doc));
    if (schema->excluded_features) append(excluded_features(img, opts));
    out.push_back(std::move(fv));
  }
  return out;
}

inline std::vector<FeatureVector> featurize_email(const EmailDocument& doc,
                                                  const FeatureOptions& opts = {}) {
  return featurize_email(doc, opts, make_feature_schema(opts));
}

// --------------------------------------------------------------------------
// CSV: email_id, position, label, then the schema columns. The schema is
// written to "<csv>.schema.json".

inline std::filesystem::path schema_sidecar(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".schema.json");
}

inline std::string feature_csv_header(const FeatureSchema& schema) {
  std::string line = "email_id,position,label";
  for (const auto& n : schema.names) line += "," + n;
  return line;
}

inline std::string feature_csv_row(const FeatureVector& fv) {
  std::string line = strings::csv_quote(fv.email_id);
  line += "," + std::to_string(fv.position) + ",";
  if (fv.label) line += label_name(*fv.label);
  for (double v : fv.values) line += "," + strings::format_double(v);
  return line;
}

inline nlohmann::json schema_to_json(const FeatureSchema& schema) {
  return {{"schema_version", schema.version},
          {"features", schema.names},
          {"excluded_features", schema.excluded_features}};
}

inline void write_features_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                               const std::vector<FeatureVector>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << feature_csv_header(schema) << '\n';
  for (const auto& fv : rows) out << feature_csv_row(fv) << '\n';
  std::ofstream side(schema_sidecar(path), std::ios::binary);
  side << schema_to_json(schema).dump(2) << '\n';
}

}  // namespace tracksieve

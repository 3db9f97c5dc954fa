#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/email/document.hpp"
#include "tracksieve/error.hpp"
#include "tracksieve/features/features.hpp"
#include "tracksieve/strings.hpp"
#include "tracksieve/time.hpp"

namespace tracksieve {

// Row-major feature matrix with per-row label and keys. y is 1 for
// tracking, 0 for content.
struct Dataset {
  std::string schema_version;
  std::vector<std::string> feature_names;
  std::vector<double> x;
  std::vector<int> y;
  std::vector<std::string> group;   // email_id
  std::vector<std::string> sender;  // sender_domain
  std::vector<Timestamp> time;
  std::vector<std::size_t> position;
  std::vector<std::string> url;

  std::size_t rows() const { return y.size(); }
  std::size_t cols() const { return feature_names.size(); }
  const double* row(std::size_t i) const { return x.data() + i * cols(); }
  double at(std::size_t i, std::size_t j) const { return x[i * cols() + j]; }

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t j = 0; j < feature_names.size(); ++j)
      if (feature_names[j] == name) return j;
    return std::nullopt;
  }

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  }
  bool has_both_classes() const {
    std::size_t p = positives();
    return p > 0 && p < rows();
  }

  Dataset empty_like() const {
    Dataset d;
    d.schema_version = schema_version;
    d.feature_names = feature_names;
    return d;
  }

  void append_row(const Dataset& src, std::size_t i) {
    x.insert(x.end(), src.row(i), src.row(i) + src.cols());
    y.push_back(src.y[i]);
    group.push_back(src.group[i]);
    sender.push_back(i < src.sender.size() ? src.sender[i] : std::string());
    time.push_back(i < src.time.size() ? src.time[i] : Timestamp{});
    position.push_back(i < src.position.size() ? src.position[i] : 0);
    url.push_back(i < src.url.size() ? src.url[i] : std::string());
  }

  Dataset subset(const std::vector<std::size_t>& rows_) const {
    Dataset d = empty_like();
    d.x.reserve(rows_.size() * cols());
    for (std::size_t i : rows_) d.append_row(*this, i);
    return d;
  }

  // Rows whose email id is in `ids`.
  Dataset select_groups(const std::set<std::string>& ids) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < rows(); ++i)
      if (ids.count(group[i])) keep.push_back(i);
    return subset(keep);
  }
};

// Appends every labeled image of a featurized document.
inline void append_document(Dataset& ds, const EmailDocument& doc,
                            const std::vector<FeatureVector>& vectors) {
  for (const auto& fv : vectors) {
    if (!fv.label) continue;
    ds.x.insert(ds.x.end(), fv.values.begin(), fv.values.end());
    ds.y.push_back(*fv.label == Label::kTracking ? 1 : 0);
    ds.group.push_back(doc.email_id);
    ds.sender.push_back(doc.sender_domain);
    ds.time.push_back(doc.received_at);
    ds.position.push_back(fv.position);
    ds.url.push_back(fv.url);
  }
}

inline Dataset build_dataset(const std::vector<EmailDocument>& docs, const FeatureOptions& opts) {
  SchemaPtr schema = make_feature_schema(opts);
  Dataset ds;
  ds.schema_version = schema->version;
  ds.feature_names = schema->names;
  for (const auto& doc : docs) {
    if (!doc.is_html) continue;
    append_document(ds, doc, featurize_email(doc, opts, schema));
  }
  return ds;
}

// Reads a features CSV written by write_features_csv. Rows without a label
// are kept with y = -1 so that they can still be scored.
inline Dataset read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  Dataset ds;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::kSchemaMismatch, "empty features file");
  auto header = strings::csv_split(line);
  if (header.size() < 3 || header[0] != "email_id" || header[1] != "position" ||
      header[2] != "label")
    throw Error(Errc::kSchemaMismatch, "unexpected features header");
  ds.feature_names.assign(header.begin() + 3, header.end());

  auto sidecar = schema_sidecar(path);
  if (std::filesystem::exists(sidecar)) {
    auto j = nlohmann::json::parse(read_file(sidecar));
    ds.schema_version = j.at("schema_version").get<std::string>();
    if (j.at("features").get<std::vector<std::string>>() != ds.feature_names)
      throw Error(Errc::kSchemaMismatch, "features header disagrees with schema sidecar");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = strings::csv_split(line);
    if (cells.size() != header.size())
      throw Error(Errc::kSchemaMismatch, "wrong column count on line " + std::to_string(line_no));
    ds.group.push_back(cells[0]);
    ds.position.push_back(std::size_t(strings::parse_int(cells[1]).value_or(0)));
    auto label = parse_label(cells[2]);
    ds.y.push_back(label ? (*label == Label::kTracking ? 1 : 0) : -1);
    for (std::size_t c = 3; c < cells.size(); ++c) {
      auto v = strings::parse_double(cells[c]);
      if (!v) throw Error(Errc::kSchemaMismatch, "bad number on line " + std::to_string(line_no));
      ds.x.push_back(*v);
    }
    ds.sender.emplace_back();
    ds.time.emplace_back();
    ds.url.emplace_back();
  }
  return ds;
}

}  // namespace tracksieve

#pragma once

// Rewrites an email so that predicted tracking images are never fetched.
//
// Only the HTML part changes: it is transfer-decoded (charset bytes kept as
// they are), blocked <img> tags are removed or their src replaced, and the
// part is re-encoded with its original transfer encoding and newline style.
// Blocking repeats until no further image is blocked, because removing an
// image changes the email context of the others; the result is therefore a
// fixed point and sanitizing it again changes nothing.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/blacklist.hpp"
#include "tracksieve/email/document.hpp"
#include "tracksieve/email/html.hpp"
#include "tracksieve/email/mime.hpp"
#include "tracksieve/features/features.hpp"
#include "tracksieve/learners/model.hpp"

namespace tracksieve {

enum class SanitizeMode { kStrip, kNeutralize };
enum class BlockReason { kBlacklist, kModel, kFailClosed };

inline constexpr std::string_view kNeutralSrc = "cid:blocked-image";

inline std::string_view block_reason_name(BlockReason r) {
  switch (r) {
    case BlockReason::kBlacklist: return "blacklist";
    case BlockReason::kModel: return "model";
    case BlockReason::kFailClosed: return "fail_closed";
  }
  return "?";
}

inline SanitizeMode parse_sanitize_mode(std::string_view s) {
  if (s == "strip") return SanitizeMode::kStrip;
  if (s == "neutralize") return SanitizeMode::kNeutralize;
  throw Error(Errc::kConfig, "mode must be strip or neutralize");
}

struct SanitizeOptions {
  SanitizeMode mode = SanitizeMode::kStrip;
  bool fail_closed = false;
};

struct BlockedImage {
  std::size_t position = 0;  // in the original email
  std::string url;
  double score = 0;
  BlockReason reason = BlockReason::kModel;
};

struct SanitizeResult {
  std::string raw;
  std::vector<BlockedImage> blocked;
  std::size_t kept = 0;
  std::vector<std::string> warnings;
};

namespace sanitize_detail {

// External image tags of an HTML byte string, in extraction order.
inline std::vector<html::ImgTag> external_tags(std::string_view html_bytes) {
  std::vector<html::ImgTag> out;
  for (auto& tag : html::scan_img_tags(html_bytes).tags) {
    const html::Attribute* src = tag.find("src");
    if (!src || !is_external_reference(strings::trim(src->value))) continue;
    out.push_back(std::move(tag));
  }
  return out;
}

// Applies the edit to `bytes` for every tag whose index is in `targets`.
inline std::string rewrite_tags(std::string_view bytes, const std::vector<html::ImgTag>& tags,
                                const std::set<std::size_t>& targets, SanitizeMode mode) {
  std::string out;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!targets.count(i)) continue;
    const auto& tag = tags[i];
    if (mode == SanitizeMode::kStrip) {
      out.append(bytes.substr(cursor, tag.begin - cursor));
      cursor = tag.end;
    } else {
      const html::Attribute* src = tag.find("src");
      out.append(bytes.substr(cursor, src->value_begin - cursor));
      out.append(kNeutralSrc);
      cursor = src->value_end;
    }
  }
  out.append(bytes.substr(cursor));
  return out;
}

inline std::string_view newline_style(std::string_view body) {
  return body.find("\r\n") != std::string_view::npos ? "\r\n" : "\n";
}

inline SanitizeResult fail_closed(std::string_view raw, SanitizeMode mode, std::string warning) {
  SanitizeResult r;
  r.warnings.push_back(std::move(warning));
  auto tags = external_tags(raw);
  std::set<std::size_t> all;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    all.insert(i);
    r.blocked.push_back({i, std::string(strings::trim(tags[i].find("src")->value)), 1.0,
                         BlockReason::kFailClosed});
  }
  r.raw = rewrite_tags(raw, tags, all, mode);
  return r;
}

}  // namespace sanitize_detail

inline SanitizeResult sanitize(std::string_view raw, const TrainedModel& model,
                               const BlacklistRuleSet& rules, const SanitizeOptions& opts = {}) {
  using namespace sanitize_detail;
  const FeatureOptions feature_opts = feature_options_for(model.schema_version);
  const SchemaPtr schema = make_feature_schema(feature_opts);
  if (model.kind != ModelKind::kBlacklist && schema->version != model.schema_version)
    throw Error(Errc::kSchemaMismatch, "cannot rebuild model schema " + model.schema_version);

  SanitizeResult result;
  std::string current(raw);
  std::vector<std::size_t> original_index;  // remaining images -> original positions
  bool first_round = true;

  for (;;) {
    mime::Message msg;
    EmailDocument doc;
    try {
      msg = mime::parse(current);
      doc = parse_email(current);
    } catch (const Error& e) {
      if (e.code() != Errc::kUnparseableMessage) throw;
      std::string w = std::string("unparseable message: ") + e.what();
      if (opts.fail_closed) return fail_closed(raw, opts.mode, w);
      result.raw = std::string(raw);
      result.warnings.push_back(w + " (passed through unchanged)");
      return result;
    }
    const mime::Part* part = mime::find_html_part(msg.root);
    if (!part || doc.images.empty()) break;

    std::string_view body(current.data() + part->body_begin, part->body_end - part->body_begin);
    std::string decoded = mime::decode_transfer(body, part->transfer_encoding);
    auto tags = external_tags(decoded);
    if (tags.size() != doc.images.size()) {
      std::string w = "image tags could not be aligned with extracted images";
      if (opts.fail_closed) return fail_closed(raw, opts.mode, w);
      result.raw = std::string(raw);
      result.blocked.clear();
      result.warnings.push_back(w + " (passed through unchanged)");
      return result;
    }
    if (first_round) {
      original_index.resize(doc.images.size());
      for (std::size_t i = 0; i < original_index.size(); ++i) original_index[i] = i;
      first_round = false;
    }

    auto vectors = featurize_email(doc, feature_opts, schema);
    std::set<std::size_t> block;
    std::vector<BlockedImage> round;
    std::set<std::string> blocked_urls;
    for (std::size_t i = 0; i < doc.images.size(); ++i) {
      const auto& url = doc.images[i].url;
      double score = predict_proba(model, vectors[i]);
      std::optional<BlockReason> reason;
      if (match_url(url, rules)) reason = BlockReason::kBlacklist;
      else if (score >= model.decision_threshold) reason = BlockReason::kModel;
      if (!reason) continue;
      block.insert(i);
      blocked_urls.insert(url);
      round.push_back({original_index[i], url, score, *reason});
    }
    // Every occurrence of a blocked URL goes, so no copy can be fetched.
    for (std::size_t i = 0; i < doc.images.size(); ++i)
      if (!block.count(i) && blocked_urls.count(doc.images[i].url)) {
        block.insert(i);
        double score = predict_proba(model, vectors[i]);
        round.push_back({original_index[i], doc.images[i].url, score, BlockReason::kModel});
      }
    if (block.empty()) break;

    std::string edited = rewrite_tags(decoded, tags, block, opts.mode);
    std::string encoded = mime::encode_transfer(edited, part->transfer_encoding, newline_style(body));
    current = current.substr(0, part->body_begin) + encoded + current.substr(part->body_end);
    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < original_index.size(); ++i)
      if (!block.count(i)) remaining.push_back(original_index[i]);
    original_index = std::move(remaining);
    std::sort(round.begin(), round.end(),
              [](const BlockedImage& a, const BlockedImage& b) { return a.position < b.position; });
    result.blocked.insert(result.blocked.end(), round.begin(), round.end());
  }

  std::sort(result.blocked.begin(), result.blocked.end(),
            [](const BlockedImage& a, const BlockedImage& b) { return a.position < b.position; });
  result.kept = original_index.size();
  result.raw = result.blocked.empty() ? std::string(raw) : std::move(current);
  return result;
}

inline nlohmann::json to_json(const SanitizeResult& r) {
  nlohmann::json blocked = nlohmann::json::array();
  for (const auto& b : r.blocked)
    blocked.push_back({{"position", b.position},
                       {"url", b.url},
                       {"score", b.score},
                       {"reason", block_reason_name(b.reason)}});
  return {{"blocked", blocked}, {"kept", r.kept}, {"warnings", r.warnings}};
}

}  // namespace tracksieve

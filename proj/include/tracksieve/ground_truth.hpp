#pragma once

// Labels images by comparing the same newsletter as delivered to two
// recipient accounts: a reference that differs between the copies carries a
// per-recipient identifier.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/email/document.hpp"
#include "tracksieve/strings.hpp"
#include "tracksieve/time.hpp"

namespace tracksieve {

struct EmailPair {
  EmailDocument a;
  EmailDocument b;
  std::string match_key;  // "filename" or "fallback"
};

struct UnmatchedEmail {
  std::string email_id;
  char mailbox = 'a';  // 'a' or 'b'
  std::string reason;
};

struct PairingResult {
  std::vector<EmailPair> pairs;
  std::vector<UnmatchedEmail> unmatched;
};

struct LabeledImage {
  std::string email_id;
  std::string sender_domain;
  Timestamp received_at{};
  std::size_t position = 0;
  std::string url;
  std::map<std::string, std::string> attrs;
  std::optional<std::int64_t> area_px2;
  Label label = Label::kContent;
};

struct DiscardedPair {
  std::string email_id;
  std::size_t images_a = 0;
  std::size_t images_b = 0;
};

using LabelOutcome = std::variant<std::vector<LabeledImage>, DiscardedPair>;

inline std::string normalize_subject(std::string_view subject) {
  return strings::collapse_whitespace(subject);
}

namespace pairing_detail {

inline PairingResult pair_documents(std::vector<EmailDocument> docs_a,
                                    std::vector<EmailDocument> docs_b) {
  PairingResult result;
  std::map<std::string, std::size_t> b_by_id;
  for (std::size_t i = 0; i < docs_b.size(); ++i) b_by_id[docs_b[i].email_id] = i;
  std::vector<bool> used_b(docs_b.size(), false);
  std::vector<std::size_t> rest_a;

  for (std::size_t i = 0; i < docs_a.size(); ++i) {
    auto it = b_by_id.find(docs_a[i].email_id);
    if (it != b_by_id.end() && !used_b[it->second] &&
        docs_b[it->second].sender_domain == docs_a[i].sender_domain) {
      used_b[it->second] = true;
      result.pairs.push_back({std::move(docs_a[i]), std::move(docs_b[it->second]), "filename"});
    } else {
      rest_a.push_back(i);
    }
  }

  // Fallback: same sender domain, same normalized subject, dates within 24 h;
  // the closest date wins, then the lexically first file name.
  constexpr auto kWindow = std::chrono::hours(24);
  for (std::size_t i : rest_a) {
    const EmailDocument& a = docs_a[i];
    const std::string subject = normalize_subject(a.subject);
    std::optional<std::size_t> best;
    std::chrono::seconds best_gap{};
    for (std::size_t j = 0; j < docs_b.size(); ++j) {
      if (used_b[j]) continue;
      const EmailDocument& b = docs_b[j];
      if (b.sender_domain != a.sender_domain || normalize_subject(b.subject) != subject)
        continue;
      auto gap = a.received_at > b.received_at ? a.received_at - b.received_at
                                               : b.received_at - a.received_at;
      if (gap > kWindow) continue;
      if (!best || gap < best_gap) {
        best = j;
        best_gap = gap;
      }
    }
    if (best) {
      used_b[*best] = true;
      result.pairs.push_back({std::move(docs_a[i]), std::move(docs_b[*best]), "fallback"});
    } else {
      result.unmatched.push_back({a.email_id, 'a', "no counterpart"});
    }
  }
  for (std::size_t j = 0; j < docs_b.size(); ++j)
    if (!used_b[j]) result.unmatched.push_back({docs_b[j].email_id, 'b', "no counterpart"});
  return result;
}

}  // namespace pairing_detail

inline PairingResult pair_mailboxes(const std::filesystem::path& dir_a,
                                    const std::filesystem::path& dir_b) {
  Mailbox a = load_mailbox(dir_a);
  Mailbox b = load_mailbox(dir_b);
  PairingResult result =
      pairing_detail::pair_documents(std::move(a.documents), std::move(b.documents));
  for (const auto& id : a.unparseable) result.unmatched.push_back({id, 'a', "unparseable"});
  for (const auto& id : b.unparseable) result.unmatched.push_back({id, 'b', "unparseable"});
  return result;
}

// Position i is content iff both copies reference the byte-identical URL.
// Copies with different image counts cannot be aligned and are discarded.
inline LabelOutcome label_pair(const EmailPair& pair) {
  const auto& ia = pair.a.images;
  const auto& ib = pair.b.images;
  if (ia.size() != ib.size()) return DiscardedPair{pair.a.email_id, ia.size(), ib.size()};
  std::vector<LabeledImage> out;
  out.reserve(ia.size());
  for (std::size_t i = 0; i < ia.size(); ++i) {
    LabeledImage li;
    li.email_id = pair.a.email_id;
    li.sender_domain = pair.a.sender_domain;
    li.received_at = pair.a.received_at;
    li.position = ia[i].position;
    li.url = ia[i].url;
    li.attrs = ia[i].attrs;
    li.area_px2 = ia[i].area_px2;
    li.label = ia[i].url == ib[i].url ? Label::kContent : Label::kTracking;
    out.push_back(std::move(li));
  }
  return out;
}

// Applies labels to the account-a document in place (used by callers that
// featurize the document directly).
inline void apply_labels(EmailDocument& doc, const std::vector<LabeledImage>& labels) {
  for (const auto& li : labels)
    if (li.position < doc.images.size()) doc.images[li.position].label = li.label;
}

// --------------------------------------------------------------------------
// JSON Lines

inline nlohmann::json to_json(const LabeledImage& li) {
  nlohmann::json j;
  j["email_id"] = li.email_id;
  j["sender_domain"] = li.sender_domain;
  j["received_at"] = to_iso8601(li.received_at);
  j["position"] = li.position;
  j["url"] = li.url;
  j["attrs"] = li.attrs;
  j["area_px2"] = li.area_px2 ? nlohmann::json(*li.area_px2) : nlohmann::json(nullptr);
  j["label"] = std::string(label_name(li.label));
  return j;
}

inline LabeledImage labeled_image_from_json(const nlohmann::json& j) {
  LabeledImage li;
  li.email_id = j.at("email_id").get<std::string>();
  li.sender_domain = j.at("sender_domain").get<std::string>();
  li.received_at = parse_iso8601(j.at("received_at").get<std::string>()).value_or(Timestamp{});
  li.position = j.at("position").get<std::size_t>();
  li.url = j.at("url").get<std::string>();
  li.attrs = j.at("attrs").get<std::map<std::string, std::string>>();
  if (!j.at("area_px2").is_null()) li.area_px2 = j.at("area_px2").get<std::int64_t>();
  auto label = parse_label(j.at("label").get<std::string>());
  if (!label) throw Error(Errc::kConfig, "bad label in labels file");
  li.label = *label;
  return li;
}

inline void write_labels_jsonl(const std::filesystem::path& path,
                               const std::vector<LabeledImage>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  for (const auto& li : labels) out << to_json(li).dump() << '\n';
}

inline std::vector<LabeledImage> read_labels_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::vector<LabeledImage> out;
  std::string line;
  while (std::getline(in, line)) {
    if (strings::trim(line).empty()) continue;
    out.push_back(labeled_image_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace tracksieve

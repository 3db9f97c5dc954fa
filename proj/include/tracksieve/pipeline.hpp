#pragma once

// Mailbox pair -> labeled account-a documents.

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/email/document.hpp"
#include "tracksieve/ground_truth.hpp"

namespace tracksieve {

struct LabeledCorpus {
  std::vector<EmailDocument> documents;  // account-a copies of paired emails
  std::vector<LabeledImage> labels;
  std::vector<DiscardedPair> discarded;
  std::vector<UnmatchedEmail> unmatched;
  std::size_t pairs = 0;
};

inline LabeledCorpus label_corpus(const std::filesystem::path& dir_a,
                                  const std::filesystem::path& dir_b) {
  PairingResult paired = pair_mailboxes(dir_a, dir_b);
  LabeledCorpus out;
  out.pairs = paired.pairs.size();
  out.unmatched = std::move(paired.unmatched);
  for (auto& pair : paired.pairs) {
    auto outcome = label_pair(pair);
    if (auto* d = std::get_if<DiscardedPair>(&outcome)) {
      out.discarded.push_back(*d);
      // The email still counts for prevalence but carries no labels.
      for (auto& img : pair.a.images) img.label.reset();
    } else {
      auto& labels = std::get<std::vector<LabeledImage>>(outcome);
      apply_labels(pair.a, labels);
      out.labels.insert(out.labels.end(), labels.begin(), labels.end());
    }
    out.documents.push_back(std::move(pair.a));
  }
  return out;
}

// A corpus directory holds the two mailboxes as a/ and b/.
inline LabeledCorpus label_corpus(const std::filesystem::path& corpus_dir) {
  return label_corpus(corpus_dir / "a", corpus_dir / "b");
}

// Labels from a JSON Lines file applied to freshly parsed account-a
// documents, matched by email id and position.
inline std::vector<EmailDocument> attach_labels(std::vector<EmailDocument> docs,
                                                const std::vector<LabeledImage>& labels) {
  std::map<std::string, std::vector<const LabeledImage*>> by_email;
  for (const auto& li : labels) by_email[li.email_id].push_back(&li);
  for (auto& doc : docs) {
    auto it = by_email.find(doc.email_id);
    if (it == by_email.end()) continue;
    for (const LabeledImage* li : it->second) {
      if (li->position >= doc.images.size() || doc.images[li->position].url != li->url)
        throw Error(Errc::kSchemaMismatch,
                    "labels do not fit mailbox at " + doc.email_id + "#" + std::to_string(li->position));
      doc.images[li->position].label = li->label;
    }
  }
  return docs;
}

inline nlohmann::json to_json(const LabeledCorpus& c) {
  std::size_t tracking = 0;
  for (const auto& li : c.labels) tracking += li.label == Label::kTracking;
  nlohmann::json discarded = nlohmann::json::array();
  for (const auto& d : c.discarded)
    discarded.push_back({{"email_id", d.email_id}, {"images_a", d.images_a}, {"images_b", d.images_b}});
  nlohmann::json unmatched = nlohmann::json::array();
  for (const auto& u : c.unmatched)
    unmatched.push_back({{"email_id", u.email_id}, {"mailbox", std::string(1, u.mailbox)}, {"reason", u.reason}});
  return {{"pairs", c.pairs},
          {"labeled_images", c.labels.size()},
          {"tracking_images", tracking},
          {"discarded", discarded},
          {"unmatched", unmatched}};
}

}  // namespace tracksieve

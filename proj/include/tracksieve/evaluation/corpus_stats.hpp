#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/email/document.hpp"
#include "tracksieve/features/tokens.hpp"

namespace tracksieve {

inline constexpr std::array<std::string_view, 6> kAreaBuckets = {
    "0", "1", "2-10", "11-100", ">100", "unspecified"};

inline std::size_t area_bucket(const std::optional<std::int64_t>& area) {
  if (!area) return 5;
  if (*area == 0) return 0;
  if (*area == 1) return 1;
  if (*area <= 10) return 2;
  if (*area <= 100) return 3;
  return 4;
}

struct ClassHistograms {
  std::size_t images = 0;
  std::array<std::size_t, 6> area{};
  std::map<std::string, std::size_t> extension;  // "none" when absent
};

struct SenderStats {
  std::size_t emails = 0;
  std::size_t html_emails = 0;
  std::size_t tracked_emails = 0;
};

struct CorpusStats {
  std::size_t emails = 0;
  std::size_t html_emails = 0;
  std::size_t tracked_html_emails = 0;
  std::size_t images = 0;
  std::size_t labeled_images = 0;
  std::size_t tracking_images = 0;
  std::vector<std::size_t> images_per_html_email;
  std::map<std::string, SenderStats> senders;
  ClassHistograms tracking;
  ClassHistograms content;
};

// Prevalence over labeled documents. An email counts as tracked when any
// of its images is labeled tracking.
inline CorpusStats corpus_stats(const std::vector<EmailDocument>& docs) {
  CorpusStats s;
  for (const auto& doc : docs) {
    ++s.emails;
    SenderStats& sender = s.senders[doc.sender_domain];
    ++sender.emails;
    if (!doc.is_html) continue;
    ++s.html_emails;
    ++sender.html_emails;
    s.images += doc.images.size();
    s.images_per_html_email.push_back(doc.images.size());
    bool tracked = false;
    for (const auto& img : doc.images) {
      if (!img.label) continue;
      ++s.labeled_images;
      bool is_tracking = *img.label == Label::kTracking;
      tracked = tracked || is_tracking;
      s.tracking_images += is_tracking;
      ClassHistograms& h = is_tracking ? s.tracking : s.content;
      ++h.images;
      ++h.area[area_bucket(img.area_px2)];
      std::string ext = "none";
      try {
        auto t = tokenize_reference(img.url);
        if (t.extension) ext = *t.extension;
      } catch (const Error&) {
        ext = "malformed";
      }
      ++h.extension[ext];
    }
    if (tracked) {
      ++s.tracked_html_emails;
      ++sender.tracked_emails;
    }
  }
  return s;
}

namespace stats_detail {

inline double share(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : double(num) / double(den);
}

inline nlohmann::json histograms_json(const ClassHistograms& h) {
  nlohmann::json area = nlohmann::json::object(), area_share = nlohmann::json::object();
  for (std::size_t b = 0; b < kAreaBuckets.size(); ++b) {
    area[std::string(kAreaBuckets[b])] = h.area[b];
    area_share[std::string(kAreaBuckets[b])] = share(h.area[b], h.images);
  }
  nlohmann::json ext = nlohmann::json::object();
  for (const auto& [e, n] : h.extension) ext[e] = n;
  return {{"images", h.images}, {"area", area}, {"area_share", area_share}, {"extension", ext}};
}

}  // namespace stats_detail

inline nlohmann::json to_json(const CorpusStats& s) {
  using stats_detail::share;
  std::vector<std::size_t> counts = s.images_per_html_email;
  std::sort(counts.begin(), counts.end());
  double median = 0, mean = 0;
  if (!counts.empty()) {
    std::size_t m = counts.size() / 2;
    median = counts.size() % 2 ? double(counts[m]) : (double(counts[m - 1]) + double(counts[m])) / 2;
    for (auto c : counts) mean += double(c);
    mean /= double(counts.size());
  }
  nlohmann::json senders = nlohmann::json::object();
  for (const auto& [domain, st] : s.senders)
    senders[domain] = {{"emails", st.emails},
                       {"html_emails", st.html_emails},
                       {"tracked_emails", st.tracked_emails},
                       {"tracking_quota", share(st.tracked_emails, st.html_emails)}};
  return {{"emails", s.emails},
          {"html_emails", s.html_emails},
          {"html_share", share(s.html_emails, s.emails)},
          {"tracked_html_emails", s.tracked_html_emails},
          {"tracked_html_share", share(s.tracked_html_emails, s.html_emails)},
          {"images", s.images},
          {"labeled_images", s.labeled_images},
          {"tracking_images", s.tracking_images},
          {"tracking_share", share(s.tracking_images, s.labeled_images)},
          {"images_per_html_email", {{"mean", mean}, {"median", median}}},
          {"tracking", stats_detail::histograms_json(s.tracking)},
          {"content", stats_detail::histograms_json(s.content)},
          {"senders", senders}};
}

}  // namespace tracksieve

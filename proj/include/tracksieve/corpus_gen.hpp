#pragma once

// Synthetic paired mailboxes with a ground-truth manifest.
//
// Every email is rendered twice, once per recipient. Content image URLs are
// identical in both copies; tracking image URLs differ exactly in their
// per-recipient identifier spans.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "tracksieve/blacklist.hpp"
#include "tracksieve/email/document.hpp"
#include "tracksieve/email/mime.hpp"
#include "tracksieve/error.hpp"
#include "tracksieve/rng.hpp"
#include "tracksieve/strings.hpp"
#include "tracksieve/time.hpp"

namespace tracksieve {

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t n_senders = 100;
  std::size_t emails_per_sender_min = 10;
  std::size_t emails_per_sender_max = 20;
  double images_median = 18;
  double images_mean = 37;
  std::size_t images_max = 300;
  double p_html = 0.767;
  double p_images_given_html = 0.91;
  double p_tracked_given_html = 0.695;
  double p_third_party = 0.2;    // senders using a listed tracking service
  double p_single_tracking = 0.1;  // tracked emails with exactly one tracking image
  std::size_t max_tracking_per_email = 5;
  // Tracking image area mix; the remainder is small (0 or 2..100 px^2).
  double tracking_area_1 = 0.35;
  double tracking_area_unspecified = 0.13;
  double tracking_area_large = 0.38;
  double p_edge_position = 0.7;
  double p_header_id = 0.5;  // senders echoing the tracking id in headers
  Timestamp start = make_timestamp(2015, 6, 1);
  Timestamp end = make_timestamp(2017, 1, 31, 23, 59, 59);
  std::optional<Timestamp> split_at = make_timestamp(2015, 10, 31, 23, 59, 59);
  std::optional<double> share_before_split;  // default: proportional to time
  bool adversarial = false;
};

inline GenConfig parse_gen_config(const nlohmann::json& j) {
  GenConfig c;
  auto num = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  num("seed", c.seed);
  num("n_senders", c.n_senders);
  num("emails_per_sender_min", c.emails_per_sender_min);
  num("emails_per_sender_max", c.emails_per_sender_max);
  num("images_median", c.images_median);
  num("images_mean", c.images_mean);
  num("images_max", c.images_max);
  num("p_html", c.p_html);
  num("p_images_given_html", c.p_images_given_html);
  num("p_tracked_given_html", c.p_tracked_given_html);
  num("p_third_party", c.p_third_party);
  num("p_single_tracking", c.p_single_tracking);
  num("max_tracking_per_email", c.max_tracking_per_email);
  num("tracking_area_1", c.tracking_area_1);
  num("tracking_area_unspecified", c.tracking_area_unspecified);
  num("tracking_area_large", c.tracking_area_large);
  num("p_edge_position", c.p_edge_position);
  num("p_header_id", c.p_header_id);
  num("adversarial", c.adversarial);
  auto date = [&](const char* key) -> std::optional<Timestamp> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    auto t = parse_iso8601(j.at(key).get<std::string>());
    if (!t) throw Error(Errc::kConfig, std::string("bad date for ") + key);
    return t;
  };
  if (auto t = date("start")) c.start = *t;
  if (auto t = date("end")) c.end = *t;
  if (j.contains("split_at")) c.split_at = date("split_at");
  if (j.contains("share_before_split")) c.share_before_split = j.at("share_before_split").get<double>();

  for (double p : {c.p_html, c.p_images_given_html, c.p_tracked_given_html, c.p_third_party,
                   c.p_single_tracking, c.tracking_area_1, c.tracking_area_unspecified,
                   c.tracking_area_large, c.p_edge_position, c.p_header_id})
    if (!(p >= 0 && p <= 1)) throw Error(Errc::kConfig, "probabilities must lie in [0,1]");
  if (c.tracking_area_1 + c.tracking_area_unspecified + c.tracking_area_large > 1 + 1e-12)
    throw Error(Errc::kConfig, "tracking area mix exceeds 1");
  if (c.p_tracked_given_html > c.p_images_given_html)
    throw Error(Errc::kConfig, "p_tracked_given_html cannot exceed p_images_given_html");
  if (c.images_median < 1 || c.images_mean < c.images_median)
    throw Error(Errc::kConfig, "images_mean must be >= images_median >= 1");
  if (c.n_senders == 0 || c.emails_per_sender_min == 0 ||
      c.emails_per_sender_max < c.emails_per_sender_min)
    throw Error(Errc::kConfig, "invalid sender/email counts");
  if (c.max_tracking_per_email == 0 || c.images_max == 0)
    throw Error(Errc::kConfig, "invalid image caps");
  if (!(c.start < c.end)) throw Error(Errc::kConfig, "start must precede end");
  if (c.share_before_split && !(*c.share_before_split >= 0 && *c.share_before_split <= 1))
    throw Error(Errc::kConfig, "share_before_split must lie in [0,1]");
  return c;
}

struct GenSummary {
  std::size_t emails = 0;
  std::size_t html_emails = 0;
  std::size_t images = 0;
  std::size_t tracking_images = 0;
};

namespace gen_detail {

// A URL template piece: literal text or a per-recipient slot.
struct Piece {
  enum Kind { kLiteral, kId, kMail } kind = kLiteral;
  std::string text;
  std::size_t id_index = 0;
};

using UrlPattern = std::vector<Piece>;

struct Recipient {
  std::string address;
  std::vector<std::string> ids;  // per email
};

inline std::string render(const UrlPattern& p, const Recipient& r) {
  std::string out;
  for (const auto& piece : p) {
    switch (piece.kind) {
      case Piece::kLiteral: out += piece.text; break;
      case Piece::kId: out += r.ids[piece.id_index]; break;
      case Piece::kMail: {
        std::string m = r.address;
        auto at = m.find('@');
        out += m.substr(0, at) + "%40" + m.substr(at + 1);
        break;
      }
    }
  }
  return out;
}

inline constexpr std::string_view kAlnum =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

inline std::string random_token(Rng& rng, std::size_t len, std::string_view alphabet = kAlnum) {
  std::string s(len, ' ');
  for (auto& c : s) c = alphabet[uniform_index(rng, alphabet.size())];
  return s;
}

// Identifier alphabets used by different senders.
enum class IdStyle { kMixedCase, kLowerAlnum, kHex, kDigits };

inline std::string random_id(Rng& rng, IdStyle style = IdStyle::kMixedCase) {
  std::size_t len = 12 + uniform_index(rng, 21);
  switch (style) {
    case IdStyle::kMixedCase: return random_token(rng, len);
    case IdStyle::kLowerAlnum: return random_token(rng, len, "abcdefghijklmnopqrstuvwxyz0123456789");
    case IdStyle::kHex: return random_token(rng, len, "0123456789abcdef");
    case IdStyle::kDigits: return random_token(rng, len, "0123456789");
  }
  return {};
}

inline bool chance(Rng& rng, double p) { return uniform01(rng) < p; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform_index(rng, v.size())];
}

inline constexpr std::array<std::string_view, 24> kSyllables = {
    "ka", "lo", "mi", "ra", "ten", "vo", "sha", "pel", "dor", "fin", "gus", "hal",
    "jin", "ber", "cor", "nu",  "zel", "ta", "mar", "ven", "lux", "qui", "so", "bri"};
inline constexpr std::array<std::string_view, 4> kTlds = {"com", "de", "net", "org"};
inline constexpr std::array<std::string_view, 10> kWords = {
    "hero", "banner", "product", "teaser", "logo", "header", "footer", "promo", "article", "icon"};
inline constexpr std::array<std::string_view, 6> kEsps = {
    "mailsuite", "sendwave", "newsbeam", "postlane", "campaignly", "inboxflow"};
inline constexpr std::array<std::string_view, 4> kCdns = {
    "cdn.mailassets.net", "static.newsletter-cdn.com", "images.campaign-host.net", "media.mlcdn.org"};

enum class ContentStyle { kSiteFolders, kImageHost, kSharedCdn, kCmsHash, kCacheBuster, kResizer };

struct TrackingMechanism {
  std::string provider;  // empty for first-party patterns
  // Builds the pattern for one email; uses the sender slug and a campaign
  // token that is identical in both copies.
  int kind = 0;
};

struct Sender {
  std::string slug;
  std::string domain;
  ContentStyle content_style = ContentStyle::kSiteFolders;
  ContentStyle secondary_style = ContentStyle::kSharedCdn;  // for a share of content images
  std::string cdn;
  std::string esp;
  std::vector<TrackingMechanism> mechanisms;
  bool header_id = false;
  bool latin1 = false;
  int encoding = 0;  // 0 quoted-printable, 1 base64, 2 8bit
  int folder_depth = 2;
  IdStyle id_style = IdStyle::kMixedCase;
  bool capitalized_names = false;
};

inline std::string make_slug(Rng& rng, std::set<std::string>& used) {
  for (;;) {
    std::string s;
    std::size_t n = 2 + uniform_index(rng, 2);
    for (std::size_t i = 0; i < n; ++i) s += kSyllables[uniform_index(rng, kSyllables.size())];
    if (used.insert(s).second) return s;
  }
}

// Fixed literal values for the wildcards of a listed template.
inline UrlPattern instantiate_template(const BlacklistRule& rule, const std::string& slug,
                                       const std::string& campaign, std::size_t& next_id) {
  UrlPattern p;
  auto lit = [&](std::string s) { p.push_back({Piece::kLiteral, std::move(s), 0}); };
  lit(rule.source.substr(0, rule.source.find("://") + 3));
  auto emit = [&](const std::vector<PatternToken>& toks, bool host) {
    for (const auto& t : toks) {
      switch (t.wildcard) {
        case Wildcard::kNone: lit(t.literal); break;
        case Wildcard::kId: p.push_back({Piece::kId, {}, next_id++}); break;
        case Wildcard::kClient: lit(slug); break;
        case Wildcard::kMail: p.push_back({Piece::kMail, {}, 0}); break;
        case Wildcard::kAny: lit(host ? "us" + campaign.substr(0, 1) : campaign); break;
      }
    }
  };
  emit(rule.host_pattern, true);
  emit(rule.rest_pattern, false);
  return p;
}

inline constexpr int kFirstPartyKinds = 8;
// Relative frequency of each first-party pattern; most carry no extension.
inline constexpr std::array<double, kFirstPartyKinds> kFirstPartyWeights = {0.5, 2, 3, 2, 0.5, 3, 3, 0.5};

inline int pick_first_party(Rng& rng) {
  std::discrete_distribution<int> d(kFirstPartyWeights.begin(), kFirstPartyWeights.end());
  return d(rng);
}

inline UrlPattern first_party_pattern(int kind, const Sender& s, const std::string& campaign,
                                      std::size_t& next_id, bool adversarial, Rng& rng) {
  UrlPattern p;
  auto lit = [&](std::string t) { p.push_back({Piece::kLiteral, std::move(t), 0}); };
  auto id = [&] { p.push_back({Piece::kId, {}, next_id++}); };
  std::string ext = adversarial ? "." + std::string(pick(rng, std::vector<std::string>{"jpg", "png", "gif"})) : "";
  switch (kind) {
    case 0: lit("http://t." + s.domain + "/o/"); id(); lit(ext); break;
    case 1: lit("http://links." + s.domain + "/open.php?rid="); id(); lit("&c=" + campaign); break;
    case 2: lit("https://click." + s.domain + "/wf/open" + ext + "?upn="); id(); break;
    case 3: lit("http://www." + s.domain + "/track/open.aspx?u="); id(); lit("&m=" + campaign); break;
    case 4: lit("http://news." + s.domain + "/"); id(); lit("/spacer.gif"); break;
    case 5: lit("http://trk." + s.esp + ".com/imp" + ext + "?e="); id(); lit("&s=" + s.slug); break;
    case 6: lit("https://mail." + s.domain + "/pixel" + ext + "?id="); id(); lit("&cmp=" + campaign); break;
    default: lit("http://www." + s.domain + "/newsletter/" + campaign + "/img/o/"); id(); lit(ext.empty() ? ".gif" : ext); break;
  }
  return p;
}

inline std::string content_url(const Sender& s, ContentStyle style, Rng& rng,
                               const std::string& campaign, Timestamp when, std::string_view ext) {
  auto ymd = std::chrono::year_month_day(std::chrono::floor<std::chrono::days>(when));
  std::string year = std::to_string(int(ymd.year()));
  std::string month = std::to_string(unsigned(ymd.month()));
  if (month.size() < 2) month = "0" + month;
  const std::string sep = chance(rng, 0.5) ? "_" : "-";
  std::string name = std::string(kWords[uniform_index(rng, kWords.size())]);
  for (std::size_t w = uniform_index(rng, 3); w > 0; --w) name += sep + std::string(kWords[uniform_index(rng, kWords.size())]);
  if (chance(rng, 0.15)) name += sep + year + month + std::to_string(10 + uniform_index(rng, 19));
  else if (chance(rng, 0.7)) name += sep + std::to_string(1 + uniform_index(rng, 40));
  std::vector<std::string> parts = {"images", "newsletter", campaign, year + "/" + month, "assets", "img"};
  if (s.capitalized_names) {
    name[0] = char(name[0] - 'a' + 'A');
    parts = {"Images", "Newsletter", "KW" + month, year + "/" + month, "Assets", "IMG"};
  }
  // Occasional product shots named by a catalogue hash.
  if (chance(rng, 0.08)) name = "p" + random_token(rng, 10 + uniform_index(rng, 6), "0123456789abcdef");
  std::string folders;
  for (int d = 0; d < s.folder_depth; ++d) folders += parts[std::size_t(d) % parts.size()] + "/";
  switch (style) {
    case ContentStyle::kSiteFolders:
      return "http://www." + s.domain + "/" + folders + name + "." + std::string(ext);
    case ContentStyle::kImageHost:
      return "https://img." + s.domain + "/" + folders + name + "." + std::string(ext);
    case ContentStyle::kSharedCdn:
      return "https://" + s.cdn + "/" + s.slug + "/" + folders + name + "." + std::string(ext);
    case ContentStyle::kCmsHash:
      return "https://media." + s.domain + "/m/" + random_token(rng, 16, "0123456789abcdef") + "/" +
             name + "." + std::string(ext);
    case ContentStyle::kCacheBuster:
      return "http://www." + s.domain + "/" + folders + name + "." + std::string(ext) + "?v=" + year +
             month;
    case ContentStyle::kResizer:
      return "https://img." + s.domain + "/resize?w=" + std::to_string(100 * (1 + uniform_index(rng, 6))) +
             "&src=" + name + "." + std::string(ext);
  }
  return {};
}

struct ImageSpec {
  bool tracking = false;
  std::string provider;
  UrlPattern url;  // tracking; content uses `fixed_url`
  std::string fixed_url;
  std::optional<std::pair<int, int>> size;
  bool size_in_style = false;
  std::string alt;
};

inline std::optional<std::pair<int, int>> tracking_size(const GenConfig& cfg, Rng& rng) {
  if (cfg.adversarial) {
    if (chance(rng, 0.2)) return std::nullopt;
    return std::make_pair(int(20 + uniform_index(rng, 580)), int(20 + uniform_index(rng, 380)));
  }
  double u = uniform01(rng);
  if (u < cfg.tracking_area_1) return std::make_pair(1, 1);
  u -= cfg.tracking_area_1;
  if (u < cfg.tracking_area_unspecified) return std::nullopt;
  u -= cfg.tracking_area_unspecified;
  if (u < cfg.tracking_area_large)
    return pick(rng, std::vector<std::pair<int, int>>{{600, 1}, {1, 200}, {20, 20}, {300, 2}, {50, 50}});
  return pick(rng, std::vector<std::pair<int, int>>{{0, 0}, {1, 2}, {3, 3}, {10, 10}, {2, 2}, {5, 1}});
}

inline std::optional<std::pair<int, int>> content_size(Rng& rng) {
  double u = uniform01(rng);
  if (u < 0.18) return std::nullopt;
  if (u < 0.24) return std::make_pair(1, 1);  // layout spacers
  static const std::vector<std::pair<int, int>> sizes = {
      {600, 300}, {600, 200}, {300, 250}, {180, 120}, {140, 40}, {32, 32}, {24, 24}, {600, 80}, {200, 200}, {16, 16}};
  return pick(rng, sizes);
}

// Latin-1 encoding of a UTF-8 string whose code points are all below 256.
inline std::string utf8_to_latin1(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = std::uint8_t(s[i]);
    if (c < 0x80) {
      out.push_back(char(c));
    } else if ((c & 0xE0) == 0xC0 && i + 1 < s.size()) {
      out.push_back(char(((c & 0x1F) << 6) | (std::uint8_t(s[i + 1]) & 0x3F)));
      ++i;
    } else {
      out.push_back('?');
    }
  }
  return out;
}

inline std::string html_escape_attr(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out.push_back(c);
  }
  return out;
}

inline std::string render_img(const ImageSpec& img, const std::string& url, Rng& rng) {
  std::string src = html_escape_attr(url);
  int style = int(uniform_index(rng, 10));
  std::string tag = style == 0 ? "<IMG SRC=\"" + src + "\"" : "<img src=\"" + src + "\"";
  if (img.size) {
    std::string w = std::to_string(img.size->first), h = std::to_string(img.size->second);
    if (img.size_in_style) tag += " style=\"width:" + w + "px;height:" + h + "px;display:block\"";
    else if (style == 1) tag += " width=" + w + " height=" + h;
    else tag += " width=\"" + w + "\" height=\"" + h + "\"";
  }
  if (!img.alt.empty()) tag += " alt=\"" + img.alt + "\"";
  tag += style == 2 ? " border='0'>" : " border=\"0\" />";
  return tag;
}

}  // namespace gen_detail

inline void ensure_empty_dir(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir)) {
    if (!std::filesystem::is_directory(dir)) throw Error(Errc::kNonEmptyOutput, dir.string() + " is not a directory");
    if (!std::filesystem::is_empty(dir)) throw Error(Errc::kNonEmptyOutput, dir.string() + " is not empty");
  } else {
    std::filesystem::create_directories(dir);
  }
}

inline GenSummary generate_corpus(const GenConfig& cfg, const std::filesystem::path& out_a,
                                  const std::filesystem::path& out_b,
                                  const std::filesystem::path& manifest_path) {
  using namespace gen_detail;
  ensure_empty_dir(out_a);
  ensure_empty_dir(out_b);
  if (std::filesystem::exists(manifest_path) && std::filesystem::file_size(manifest_path) > 0)
    throw Error(Errc::kNonEmptyOutput, manifest_path.string() + " already exists");
  std::ofstream manifest(manifest_path, std::ios::binary);
  if (!manifest) throw Error(Errc::kIo, "cannot write " + manifest_path.string());

  const BlacklistRuleSet& listed = default_rules();
  GenSummary summary;
  Rng meta(derive_seed(cfg.seed, 0));
  std::set<std::string> used_slugs;

  const double sigma = std::sqrt(2.0 * std::log(cfg.images_mean / cfg.images_median));
  const double mu = std::log(cfg.images_median);
  const double p_images_untracked =
      cfg.p_tracked_given_html >= 1 ? 0.0
                                    : (cfg.p_images_given_html - cfg.p_tracked_given_html) /
                                          (1 - cfg.p_tracked_given_html);

  for (std::size_t si = 0; si < cfg.n_senders; ++si) {
    Rng rng(derive_seed(cfg.seed, 1000 + si));
    Sender s;
    s.slug = make_slug(meta, used_slugs);
    s.domain = s.slug + "." + std::string(kTlds[uniform_index(rng, kTlds.size())]);
    double cs = uniform01(rng);
    s.content_style = cs < 0.35 ? ContentStyle::kSiteFolders
                      : cs < 0.6 ? ContentStyle::kImageHost
                      : cs < 0.8 ? ContentStyle::kSharedCdn
                      : cs < 0.94 ? ContentStyle::kCmsHash
                      : cs < 0.97 ? ContentStyle::kCacheBuster
                                  : ContentStyle::kResizer;
    s.secondary_style = pick(rng, std::vector<ContentStyle>{ContentStyle::kSiteFolders, ContentStyle::kImageHost,
                                                            ContentStyle::kSharedCdn, ContentStyle::kCmsHash});
    s.id_style = IdStyle(uniform_index(rng, 4));
    s.capitalized_names = chance(rng, 0.3);
    s.cdn = std::string(kCdns[uniform_index(rng, kCdns.size())]);
    s.esp = std::string(kEsps[uniform_index(rng, kEsps.size())]);
    s.folder_depth = int(2 + uniform_index(rng, 3));
    s.header_id = chance(rng, cfg.p_header_id);
    s.latin1 = chance(rng, 0.25);
    s.encoding = int(uniform_index(rng, 4) % 3);
    std::size_t n_mech = 1 + uniform_index(rng, 2);
    for (std::size_t m = 0; m < n_mech; ++m) {
      TrackingMechanism mech;
      if (chance(rng, cfg.p_third_party)) {
        mech.kind = int(uniform_index(rng, listed.size()));
        mech.provider = listed.rules[std::size_t(mech.kind)].provider;
      } else {
        mech.kind = pick_first_party(rng);
      }
      s.mechanisms.push_back(mech);
    }

    std::size_t n_emails = cfg.emails_per_sender_min +
                           uniform_index(rng, cfg.emails_per_sender_max - cfg.emails_per_sender_min + 1);
    std::vector<Timestamp> dates;
    const auto span = [](Timestamp a, Timestamp b) { return double((b - a).count()); };
    for (std::size_t e = 0; e < n_emails; ++e) {
      Timestamp lo = cfg.start, hi = cfg.end;
      if (cfg.split_at && cfg.share_before_split && *cfg.split_at > cfg.start && *cfg.split_at < cfg.end) {
        if (chance(rng, *cfg.share_before_split)) hi = *cfg.split_at;
        else lo = *cfg.split_at + std::chrono::seconds(1);
      }
      dates.push_back(lo + std::chrono::seconds(std::int64_t(uniform01(rng) * span(lo, hi))));
    }
    std::sort(dates.begin(), dates.end());

    for (std::size_t ei = 0; ei < n_emails; ++ei) {
      Rng er(derive_seed(derive_seed(cfg.seed, 1000 + si), 1 + ei));
      std::string email_id = s.slug + "_" + std::to_string(10000 + ei).substr(1);
      std::string campaign = "c" + std::to_string(100 + uniform_index(er, 900));
      std::string subject = "Neuigkeiten von " + s.slug + " #" + std::to_string(ei + 1);
      if (chance(er, 0.3)) subject = "Angebote f\xC3\xBCr Sie \xE2\x80\x93 " + s.slug;
      bool is_html = chance(er, cfg.p_html);
      bool tracked = is_html && chance(er, cfg.p_tracked_given_html);
      bool has_images = tracked || (is_html && chance(er, p_images_untracked));

      std::vector<ImageSpec> images;
      std::size_t next_id = 0;
      if (has_images) {
        std::lognormal_distribution<double> lognormal(mu, sigma);
        std::size_t total = std::size_t(std::llround(lognormal(er)));
        total = std::clamp<std::size_t>(total, 1, cfg.images_max);
        std::size_t n_track = 0;
        if (tracked) {
          n_track = chance(er, cfg.p_single_tracking)
                        ? 1
                        : 2 + uniform_index(er, std::max<std::size_t>(cfg.max_tracking_per_email, 2) - 1);
          total = std::max(total, n_track);
        }
        std::vector<std::string> reuse;
        for (std::size_t k = 0; k + n_track < total; ++k) {
          ImageSpec img;
          auto ext = pick(er, std::vector<std::string>{"jpg", "jpg", "png", "gif", "png", "jpeg"});
          if (!reuse.empty() && chance(er, 0.12)) img.fixed_url = pick(er, reuse);
          else {
            double u = uniform01(er);
            if (u < 0.06) {
              img.fixed_url = "https://static.social-icons.net/" +
                              pick(er, std::vector<std::string>{"facebook", "twitter", "instagram", "youtube", "xing"}) +
                              (chance(er, 0.5) ? ".png" : "-32.png");
            } else if (u < 0.12) {
              img.fixed_url = "http://www." + s.domain + "/" + std::string(kWords[uniform_index(er, kWords.size())]) +
                              "." + ext;
            } else {
              ContentStyle style = u < 0.38 ? s.secondary_style : s.content_style;
              img.fixed_url = content_url(s, style, er, campaign, dates[ei], ext);
            }
            reuse.push_back(img.fixed_url);
          }
          img.size = content_size(er);
          img.size_in_style = chance(er, 0.1);
          img.alt = chance(er, 0.5) ? std::string(kWords[uniform_index(er, kWords.size())]) : "";
          if (chance(er, 0.1)) img.alt = "Sch\xC3\xB6ne Gr\xC3\xBC\xC3\x9F" "e";
          images.push_back(std::move(img));
        }
        for (std::size_t k = 0; k < n_track; ++k) {
          ImageSpec img;
          img.tracking = true;
          const auto& mech = s.mechanisms[uniform_index(er, s.mechanisms.size())];
          img.provider = mech.provider;
          img.url = mech.provider.empty()
                        ? first_party_pattern(mech.kind, s, campaign, next_id, cfg.adversarial, er)
                        : instantiate_template(listed.rules[std::size_t(mech.kind)], s.slug, campaign, next_id);
          img.size = tracking_size(cfg, er);
          img.size_in_style = chance(er, 0.1);
          std::size_t pos;
          if (chance(er, cfg.p_edge_position)) pos = chance(er, 0.5) ? 0 : images.size();
          else pos = uniform_index(er, images.size() + 1);
          images.insert(images.begin() + std::ptrdiff_t(pos), std::move(img));
        }
      }

      // Recipients: identical structure, distinct identifiers.
      std::array<Recipient, 2> recipients{Recipient{"reader.one@inbox-a.example", {}},
                                          Recipient{"reader.two@inbox-b.example", {}}};
      std::size_t n_ids = std::max<std::size_t>(next_id, 1);
      for (std::size_t k = 0; k < n_ids; ++k) {
        std::string ida = random_id(er, s.id_style), idb = random_id(er, s.id_style);
        while (idb == ida) idb = random_id(er, s.id_style);
        recipients[0].ids.push_back(ida);
        recipients[1].ids.push_back(idb);
      }
      std::array<std::string, 2> unsub_token{random_id(er, s.id_style), random_id(er, s.id_style)};
      std::array<std::string, 2> bounce_token{random_id(er, s.id_style), random_id(er, s.id_style)};
      int offset_seconds = int(60 + uniform_index(er, 600));
      std::string boundary = "=_b" + random_token(er, 20);
      std::string newline = chance(er, 0.8) ? "\r\n" : "\n";
      const std::uint64_t layout_seed = er();

      for (int box = 0; box < 2; ++box) {
        const Recipient& rcpt = recipients[std::size_t(box)];
        Rng layout(layout_seed);  // identical markup decisions in both copies
        std::vector<std::string> urls;
        for (const auto& img : images) urls.push_back(img.tracking ? render(img.url, rcpt) : img.fixed_url);
        std::string header_id = s.header_id && next_id > 0 ? rcpt.ids[0] : unsub_token[std::size_t(box)];
        std::string bounce_id = s.header_id && next_id > 0 ? rcpt.ids[0] : bounce_token[std::size_t(box)];
        Timestamp date = dates[ei] + std::chrono::seconds(box == 0 ? 0 : offset_seconds);

        std::string html = "<!DOCTYPE html>\n<html><head><meta http-equiv=\"Content-Type\" content=\"text/html; charset=" +
                           std::string(s.latin1 ? "iso-8859-1" : "utf-8") + "\"><title>" + subject +
                           "</title>\n<style>td{font-family:Arial}</style></head>\n<body>\n"
                           "<table width=\"600\" cellpadding=\"0\" cellspacing=\"0\">\n";
        for (std::size_t k = 0; k < images.size(); ++k) {
          html += "<tr><td>";
          bool link = !images[k].tracking && layout() % 3 == 0;
          if (link) html += "<a href=\"http://www." + s.domain + "/go/" + campaign + "/" + std::to_string(k) + "\">";
          html += render_img(images[k], urls[k], layout);
          if (link) html += "</a>";
          html += "</td></tr>\n";
          if (layout() % 4 == 0) html += "<tr><td><p>Gro\xC3\x9F" "artige Neuigkeiten f\xC3\xBCr Sie.</p></td></tr>\n";
        }
        if (is_html && images.empty()) html += "<tr><td><p>Hallo, dies ist ein Newsletter ohne Bilder.</p></td></tr>\n";
        html += "</table>\n<!-- <img src=\"http://www." + s.domain + "/commented.gif\"> -->\n</body></html>\n";

        std::string text = "Hallo,\nNeuigkeiten von " + s.slug + ".\nOnline lesen: http://www." + s.domain +
                           "/view/" + campaign + "\n";

        std::string charset = s.latin1 ? "iso-8859-1" : "utf-8";
        std::string html_bytes = s.latin1 ? utf8_to_latin1(html) : html;
        std::string text_bytes = s.latin1 ? utf8_to_latin1(text) : text;
        auto normalize = [&](std::string v) {
          std::string out;
          for (char c : v) {
            if (c == '\n') out += newline;
            else out.push_back(c);
          }
          return out;
        };
        const char* enc_name = s.encoding == 0 ? "quoted-printable" : s.encoding == 1 ? "base64" : "8bit";
        std::string html_body = normalize(html_bytes);
        if (s.encoding != 2) html_body = mime::encode_transfer(html_body, enc_name, newline);
        std::string text_body = mime::encode_transfer(normalize(text_bytes), "quoted-printable", newline);

        std::string m;
        auto h = [&](const std::string& line) { m += line + newline; };
        h("Return-Path: <bounce-" + bounce_id + "@bounce." + s.domain + ">");
        h("Received-SPF: pass (mx.inbox.example: domain of bounce." + s.domain +
          " designates 192.0.2." + std::to_string(1 + si % 250) + " as permitted sender)");
        h(" envelope-from=\"bounce-" + bounce_id + "@bounce." + s.domain + "\";");
        h("From: =?utf-8?Q?" + s.slug + "_Newsletter?= <news@" + s.domain + ">");
        h("To: <" + rcpt.address + ">");
        h("Subject: " + (subject.find('\xC3') != std::string::npos || subject.find('\xE2') != std::string::npos
                             ? "=?utf-8?B?" + mime::encode_base64(subject, "", 1000) + "?="
                             : subject));
        h("Date: " + format_rfc5322_date(date));
        h("Message-ID: <" + email_id + "." + std::to_string(box) + "@" + s.domain + ">");
        h("List-Unsubscribe: <mailto:unsubscribe-" + header_id + "@" + s.domain + ">, <http://www." +
          s.domain + "/unsubscribe?u=" + header_id + ">");
        h("MIME-Version: 1.0");
        if (!is_html) {
          h("Content-Type: text/plain; charset=" + charset);
          h("Content-Transfer-Encoding: quoted-printable");
          m += newline + text_body;
        } else {
          h("Content-Type: multipart/alternative; boundary=\"" + boundary + "\"");
          m += newline + "This is a multi-part message in MIME format." + newline + newline;
          m += "--" + boundary + newline;
          m += "Content-Type: text/plain; charset=" + charset + newline;
          m += "Content-Transfer-Encoding: quoted-printable" + newline + newline;
          m += text_body + newline;
          m += "--" + boundary + newline;
          m += "Content-Type: text/html; charset=\"" + charset + "\"" + newline;
          m += std::string("Content-Transfer-Encoding: ") + enc_name + newline + newline;
          m += html_body + newline;
          m += "--" + boundary + "--" + newline;
        }
        write_file((box == 0 ? out_a : out_b) / (email_id + ".eml"), m);

        if (box == 1) {
          std::vector<std::string> urls_a;
          for (const auto& img : images) urls_a.push_back(img.tracking ? render(img.url, recipients[0]) : img.fixed_url);
          for (std::size_t k = 0; k < images.size(); ++k) {
            nlohmann::json line = {{"email_id", email_id},
                                   {"sender_domain", s.domain},
                                   {"position", k},
                                   {"label", images[k].tracking ? "tracking" : "content"},
                                   {"url_a", urls_a[k]},
                                   {"url_b", urls[k]},
                                   {"provider", images[k].provider}};
            manifest << line.dump() << '\n';
          }
        }
      }
      ++summary.emails;
      summary.html_emails += is_html;
      summary.images += images.size();
      for (const auto& img : images) summary.tracking_images += img.tracking;
    }
  }
  return summary;
}

struct ManifestEntry {
  std::string email_id;
  std::size_t position = 0;
  Label label = Label::kContent;
  std::string url_a;
  std::string url_b;
  std::string provider;
};

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::vector<ManifestEntry> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (strings::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line);
    ManifestEntry e;
    e.email_id = j.at("email_id").get<std::string>();
    e.position = j.at("position").get<std::size_t>();
    e.label = *parse_label(j.at("label").get<std::string>());
    e.url_a = j.at("url_a").get<std::string>();
    e.url_b = j.at("url_b").get<std::string>();
    e.provider = j.at("provider").get<std::string>();
    out.push_back(std::move(e));
  }
  return out;
}

inline nlohmann::json to_json(const GenSummary& s) {
  return {{"emails", s.emails},
          {"html_emails", s.html_emails},
          {"images", s.images},
          {"tracking_images", s.tracking_images}};
}

}  // namespace tracksieve

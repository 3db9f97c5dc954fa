#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tracksieve/email/html.hpp"
#include "tracksieve/email/mime.hpp"
#include "tracksieve/error.hpp"
#include "tracksieve/strings.hpp"
#include "tracksieve/time.hpp"

namespace tracksieve {

enum class Label { kTracking, kContent };

inline std::string_view label_name(Label l) {
  return l == Label::kTracking ? "tracking" : "content";
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "tracking") return Label::kTracking;
  if (s == "content") return Label::kContent;
  return std::nullopt;
}

struct ImageRecord {
  std::size_t position = 0;
  std::string url;
  std::map<std::string, std::string> attrs;
  std::optional<std::int64_t> area_px2;
  std::optional<Label> label;
};

struct EmailDocument {
  std::string email_id;
  std::string sender_address;
  std::string sender_domain;
  std::string subject;
  Timestamp received_at{};
  bool is_html = false;
  std::map<std::string, std::string> header_fields;
  std::vector<ImageRecord> images;
};

// Counters for input that was tolerated rather than rejected.
struct ExtractStats {
  std::size_t malformed_tags = 0;
  std::size_t skipped_non_external = 0;
};

// --------------------------------------------------------------------------
// Image area

namespace area_detail {

enum class Dim { kMissing, kPixels, kOtherUnit };

struct Dimension {
  Dim kind = Dim::kMissing;
  std::int64_t px = 0;
};

// "1", "1px", "1.0px", " 600 " are pixels; "100%", "2em" are not.
inline Dimension parse_dimension(std::optional<std::string_view> raw) {
  if (!raw) return {};
  std::string_view s = strings::trim(*raw);
  if (s.empty()) return {};
  std::size_t i = 0;
  while (i < s.size() && strings::is_digit(s[i])) ++i;
  if (i == 0) return {Dim::kOtherUnit, 0};
  std::size_t int_end = i;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && strings::is_digit(s[i])) ++i;
  }
  std::string_view unit = strings::trim(s.substr(i));
  if (!unit.empty() && !strings::iequals(unit, "px")) return {Dim::kOtherUnit, 0};
  std::string_view digits = s.substr(0, std::min<std::size_t>(int_end, 12));
  return {Dim::kPixels, strings::parse_int(digits).value_or(0)};
}

inline std::optional<std::string> css_property(std::string_view style,
                                               std::string_view name) {
  for (auto decl : strings::split(style, ';')) {
    auto colon = decl.find(':');
    if (colon == std::string_view::npos) continue;
    if (strings::iequals(strings::trim(decl.substr(0, colon)), name))
      return std::string(strings::trim(decl.substr(colon + 1)));
  }
  return std::nullopt;
}

inline std::string filename_of(std::string_view url) {
  std::size_t cut = url.find_first_of("?#");
  std::string_view path = url.substr(0, cut);
  std::size_t slash = path.rfind('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

}  // namespace area_detail

// Width x height resolved by precedence: width/height attributes, then the
// style attribute, then a "<w>x<h>" token in the file name. The first rule
// that specifies both dimensions decides; a non-pixel unit there yields
// absent.
inline std::optional<std::int64_t> resolve_area(const ImageRecord& img) {
  using namespace area_detail;
  auto attr = [&](const char* key) -> std::optional<std::string_view> {
    auto it = img.attrs.find(key);
    if (it == img.attrs.end()) return std::nullopt;
    return std::string_view(it->second);
  };
  auto decide = [](Dimension w, Dimension h) -> std::optional<std::optional<std::int64_t>> {
    if (w.kind == Dim::kMissing || h.kind == Dim::kMissing) return std::nullopt;
    if (w.kind != Dim::kPixels || h.kind != Dim::kPixels)
      return std::optional<std::int64_t>{};
    return std::optional<std::int64_t>{w.px * h.px};
  };

  if (auto r = decide(parse_dimension(attr("width")), parse_dimension(attr("height"))))
    return *r;

  if (auto style = attr("style")) {
    auto w = css_property(*style, "width");
    auto h = css_property(*style, "height");
    auto as_view = [](const std::optional<std::string>& s) -> std::optional<std::string_view> {
      if (!s) return std::nullopt;
      return std::string_view(*s);
    };
    if (auto r = decide(parse_dimension(as_view(w)), parse_dimension(as_view(h))))
      return *r;
  }

  std::string name = filename_of(img.url);
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (!strings::is_digit(name[i]) || (i > 0 && strings::is_digit(name[i - 1]))) continue;
    std::size_t j = i;
    while (j < name.size() && strings::is_digit(name[j])) ++j;
    if (j + 1 < name.size() && (name[j] == 'x' || name[j] == 'X') &&
        strings::is_digit(name[j + 1])) {
      std::size_t k = j + 1;
      while (k < name.size() && strings::is_digit(name[k])) ++k;
      auto w = strings::parse_int(std::string_view(name).substr(i, std::min<std::size_t>(j - i, 9)));
      auto h = strings::parse_int(std::string_view(name).substr(j + 1, std::min<std::size_t>(k - j - 1, 9)));
      if (w && h) return *w * *h;
    }
  }
  return std::nullopt;
}

// --------------------------------------------------------------------------
// Extraction

// data: and cid: references never trigger a remote fetch and are not images
// of interest; everything else with a non-empty src is kept verbatim.
inline bool is_external_reference(std::string_view url) {
  if (url.empty()) return false;
  return !strings::istarts_with(url, "data:") && !strings::istarts_with(url, "cid:");
}

inline std::vector<ImageRecord> extract_images(std::string_view html,
                                               ExtractStats* stats = nullptr) {
  html::ScanResult scan = html::scan_img_tags(html);
  std::vector<ImageRecord> out;
  std::size_t skipped = 0;
  for (const auto& tag : scan.tags) {
    const html::Attribute* src = tag.find("src");
    if (!src) continue;
    std::string url(strings::trim(src->value));
    if (!is_external_reference(url)) {
      ++skipped;
      continue;
    }
    ImageRecord rec;
    rec.position = out.size();
    rec.url = std::move(url);
    for (const auto& a : tag.attrs)
      if (a.name != "src") rec.attrs.emplace(a.name, a.value);
    rec.area_px2 = resolve_area(rec);
    out.push_back(std::move(rec));
  }
  if (stats) {
    stats->malformed_tags += scan.malformed;
    stats->skipped_non_external += skipped;
  }
  return out;
}

// --------------------------------------------------------------------------
// Parsing

namespace email_detail {

inline std::string extract_address(std::string_view from) {
  std::size_t lt = from.rfind('<');
  if (lt != std::string_view::npos) {
    std::size_t gt = from.find('>', lt);
    return std::string(strings::trim(from.substr(lt + 1, gt == std::string_view::npos
                                                             ? std::string_view::npos
                                                             : gt - lt - 1)));
  }
  // Bare address, possibly followed by a "(comment)".
  std::string_view s = strings::trim(from);
  if (auto paren = s.find('('); paren != std::string_view::npos)
    s = strings::trim(s.substr(0, paren));
  for (auto token : strings::split(s, ' '))
    if (token.find('@') != std::string_view::npos) return std::string(token);
  return std::string(s);
}

}  // namespace email_detail

// Decoded HTML of the message, and where its part lives in the raw bytes.
struct HtmlBody {
  const mime::Part* part = nullptr;
  std::string text;  // transfer-decoded and converted to UTF-8
};

inline std::optional<HtmlBody> html_body(std::string_view raw, const mime::Message& msg) {
  const mime::Part* part = mime::find_html_part(msg.root);
  if (!part) return std::nullopt;
  std::string decoded = mime::decode_transfer(
      raw.substr(part->body_begin, part->body_end - part->body_begin),
      part->transfer_encoding);
  return HtmlBody{part, mime::to_utf8(decoded, part->content_type.param("charset"))};
}

inline EmailDocument parse_email(std::string_view raw, std::string email_id = {},
                                 ExtractStats* stats = nullptr) {
  mime::Message msg = mime::parse(raw);
  EmailDocument doc;
  doc.email_id = std::move(email_id);
  for (const auto& f : msg.root.headers.fields) doc.header_fields[f.name] = f.value;

  if (auto from = msg.root.headers.last("from")) {
    doc.sender_address = email_detail::extract_address(mime::decode_header_words(*from));
    auto at = doc.sender_address.rfind('@');
    if (at != std::string::npos)
      doc.sender_domain = strings::to_lower(doc.sender_address.substr(at + 1));
  }
  if (auto subject = msg.root.headers.last("subject"))
    doc.subject = mime::decode_header_words(*subject);
  if (auto date = msg.root.headers.last("date"))
    doc.received_at = parse_rfc5322_date(*date).value_or(Timestamp{});

  if (auto body = html_body(raw, msg)) {
    doc.is_html = true;
    doc.images = extract_images(body->text, stats);
  }
  return doc;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write(data.data(), std::streamsize(data.size()));
}

// Sorted list of the .eml files in a mailbox directory.
inline std::vector<std::filesystem::path> list_mailbox(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(Errc::kIo, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".eml")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

struct Mailbox {
  std::vector<EmailDocument> documents;
  std::vector<std::string> unparseable;  // email ids that were skipped
  ExtractStats stats;
};

inline Mailbox load_mailbox(const std::filesystem::path& dir) {
  Mailbox box;
  for (const auto& path : list_mailbox(dir)) {
    std::string id = path.stem().string();
    try {
      box.documents.push_back(parse_email(read_file(path), id, &box.stats));
    } catch (const Error& e) {
      if (e.code() != Errc::kUnparseableMessage) throw;
      box.unparseable.push_back(id);
    }
  }
  return box;
}

}  // namespace tracksieve

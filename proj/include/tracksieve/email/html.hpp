#pragma once

// Tag-soup scanner for <img> elements. It never throws: unterminated tags
// are counted and skipped, unterminated quotes end at the next '>'.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracksieve/email/mime.hpp"
#include "tracksieve/strings.hpp"

namespace tracksieve::html {

struct Attribute {
  std::string name;   // lowercase
  std::string value;  // entity-decoded
  std::size_t value_begin = 0;  // raw span of the value, quotes excluded
  std::size_t value_end = 0;
  bool has_value = false;
};

struct ImgTag {
  std::size_t begin = 0;  // offset of '<'
  std::size_t end = 0;    // one past '>'
  std::vector<Attribute> attrs;

  const Attribute* find(std::string_view name) const {
    for (const auto& a : attrs)
      if (a.name == name) return &a;
    return nullptr;
  }
};

struct ScanResult {
  std::vector<ImgTag> tags;
  std::size_t malformed = 0;
};

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    std::size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    std::string_view name = s.substr(i + 1, semi - i - 1);
    std::optional<std::uint32_t> cp;
    if (name == "amp") cp = '&';
    else if (name == "lt") cp = '<';
    else if (name == "gt") cp = '>';
    else if (name == "quot") cp = '"';
    else if (name == "apos") cp = '\'';
    else if (name == "nbsp") cp = 0xA0;
    else if (name.size() > 1 && name[0] == '#') {
      std::uint32_t v = 0;
      bool ok = true;
      bool hex = name[1] == 'x' || name[1] == 'X';
      std::string_view digits = name.substr(hex ? 2 : 1);
      if (digits.empty()) ok = false;
      for (char c : digits) {
        int d = strings::is_digit(c) ? c - '0'
                : hex && c >= 'a' && c <= 'f' ? c - 'a' + 10
                : hex && c >= 'A' && c <= 'F' ? c - 'A' + 10
                                               : -1;
        if (d < 0 || v > 0x10FFFF) {
          ok = false;
          break;
        }
        v = v * (hex ? 16 : 10) + std::uint32_t(d);
      }
      if (ok && v > 0 && v <= 0x10FFFF) cp = v;
    }
    if (!cp) {
      out.push_back('&');
      continue;
    }
    mime::detail::append_utf8(out, *cp);
    i = semi;
  }
  return out;
}

namespace detail {

inline bool name_terminator(char c) {
  return strings::is_space(c) || c == '=' || c == '>' || c == '/' || c == '<';
}

inline bool starts_tag(std::string_view html, std::size_t i, std::string_view name) {
  if (!strings::istarts_with(html.substr(i + 1), name)) return false;
  std::size_t after = i + 1 + name.size();
  return after >= html.size() || !strings::is_alnum(html[after]);
}

// Parses the attributes of a tag whose name ends at `pos`. Returns the tag
// end (one past '>') or nullopt when the tag is unterminated.
inline std::optional<std::size_t> parse_attributes(std::string_view html,
                                                   std::size_t pos,
                                                   std::vector<Attribute>& attrs) {
  const std::size_t n = html.size();
  while (true) {
    while (pos < n && (strings::is_space(html[pos]) || html[pos] == '/')) ++pos;
    if (pos >= n) return std::nullopt;
    if (html[pos] == '>') return pos + 1;
    if (html[pos] == '<') return std::nullopt;
    std::size_t name_begin = pos;
    while (pos < n && !name_terminator(html[pos])) ++pos;
    if (pos == name_begin) ++pos;  // stray '=' etc.
    Attribute attr;
    attr.name = strings::to_lower(html.substr(name_begin, pos - name_begin));
    std::size_t look = pos;
    while (look < n && strings::is_space(html[look])) ++look;
    attr.value_begin = attr.value_end = pos;
    if (look < n && html[look] == '=') {
      pos = look + 1;
      while (pos < n && strings::is_space(html[pos])) ++pos;
      if (pos >= n) return std::nullopt;
      attr.has_value = true;
      char q = html[pos];
      if (q == '"' || q == '\'') {
        std::size_t close = html.find(q, pos + 1);
        std::size_t gt = html.find('>', pos + 1);
        if (close == std::string_view::npos) {
          // Unterminated quote: the value runs to the next '>'.
          if (gt == std::string_view::npos) return std::nullopt;
          attr.value_begin = pos + 1;
          attr.value_end = gt;
          attr.value = decode_entities(html.substr(pos + 1, gt - pos - 1));
          bool dup = false;
          for (const auto& a : attrs) dup = dup || a.name == attr.name;
          if (!dup && !attr.name.empty()) attrs.push_back(std::move(attr));
          return gt + 1;
        }
        attr.value_begin = pos + 1;
        attr.value_end = close;
        pos = close + 1;
      } else {
        attr.value_begin = pos;
        while (pos < n && !strings::is_space(html[pos]) && html[pos] != '>') ++pos;
        attr.value_end = pos;
      }
      attr.value = decode_entities(
          html.substr(attr.value_begin, attr.value_end - attr.value_begin));
    } else {
      pos = std::max(pos, name_begin + 1);
    }
    bool dup = false;
    for (const auto& a : attrs) dup = dup || a.name == attr.name;
    if (!dup && !attr.name.empty()) attrs.push_back(std::move(attr));
  }
}

inline std::size_t skip_raw_text(std::string_view html, std::size_t pos,
                                 std::string_view name) {
  std::string closing = "</" + std::string(name);
  std::size_t close = strings::ifind(html, closing, pos);
  if (close == std::string_view::npos) return html.size();
  std::size_t gt = html.find('>', close);
  return gt == std::string_view::npos ? html.size() : gt + 1;
}

}  // namespace detail

inline ScanResult scan_img_tags(std::string_view html) {
  ScanResult result;
  const std::size_t n = html.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t lt = html.find('<', i);
    if (lt == std::string_view::npos) break;
    if (html.substr(lt, 4) == "<!--") {
      std::size_t close = html.find("-->", lt + 4);
      i = close == std::string_view::npos ? n : close + 3;
      continue;
    }
    if (detail::starts_tag(html, lt, "script") || detail::starts_tag(html, lt, "style")) {
      std::string_view name = detail::starts_tag(html, lt, "script") ? "script" : "style";
      std::size_t gt = html.find('>', lt);
      i = gt == std::string_view::npos ? n : detail::skip_raw_text(html, gt + 1, name);
      continue;
    }
    if (detail::starts_tag(html, lt, "img")) {
      ImgTag tag;
      tag.begin = lt;
      auto end = detail::parse_attributes(html, lt + 4, tag.attrs);
      if (!end) {
        ++result.malformed;
        i = lt + 4;
        continue;
      }
      tag.end = *end;
      i = tag.end;
      result.tags.push_back(std::move(tag));
      continue;
    }
    i = lt + 1;
  }
  return result;
}

}  // namespace tracksieve::html

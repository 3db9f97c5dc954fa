#pragma once

// Minimal RFC 5322 / MIME reader. Parts are kept as byte ranges into the
// original message so that a caller can rewrite one part and splice it back
// without touching any other byte.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracksieve/error.hpp"
#include "tracksieve/strings.hpp"

namespace tracksieve::mime {

struct HeaderField {
  std::string name;   // lowercase
  std::string value;  // unfolded, trimmed
};

struct Headers {
  std::vector<HeaderField> fields;

  // Last occurrence wins, matching how the labeler reads header context.
  std::optional<std::string> last(std::string_view name) const {
    for (auto it = fields.rbegin(); it != fields.rend(); ++it)
      if (it->name == name) return it->value;
    return std::nullopt;
  }
};

struct ContentType {
  std::string type = "text";
  std::string subtype = "plain";
  std::map<std::string, std::string> params;

  bool is(std::string_view t, std::string_view s) const {
    return type == t && subtype == s;
  }
  std::string param(const std::string& key) const {
    auto it = params.find(key);
    return it == params.end() ? std::string() : it->second;
  }
};

struct Part {
  Headers headers;
  ContentType content_type;
  std::string transfer_encoding = "7bit";
  std::string disposition;
  std::size_t body_begin = 0;
  std::size_t body_end = 0;
  std::vector<Part> children;

  bool is_multipart() const { return content_type.type == "multipart"; }
};

struct Message {
  Part root;  // root.headers are the message headers
};

namespace detail {

struct Line {
  std::size_t begin;    // first byte of the line
  std::size_t end;      // one past the last content byte (before CR/LF)
  std::size_t next;     // first byte of the following line
};

inline Line next_line(std::string_view s, std::size_t pos) {
  std::size_t nl = s.find('\n', pos);
  if (nl == std::string_view::npos) return {pos, s.size(), s.size()};
  std::size_t end = nl;
  if (end > pos && s[end - 1] == '\r') --end;
  return {pos, end, nl + 1};
}

inline bool is_field_name_char(char c) {
  return c > 32 && c < 127 && c != ':';
}

inline bool looks_like_header(std::string_view line) {
  std::size_t colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0) return false;
  for (std::size_t i = 0; i < colon; ++i)
    if (!is_field_name_char(line[i])) return false;
  return true;
}

// Splits a header block [begin, end) into unfolded fields.
inline Headers parse_header_block(std::string_view s, std::size_t begin,
                                  std::size_t end) {
  Headers h;
  std::size_t pos = begin;
  while (pos < end) {
    Line ln = next_line(s, pos);
    std::string_view text = s.substr(ln.begin, std::min(ln.end, end) - ln.begin);
    if (!text.empty() && (text[0] == ' ' || text[0] == '\t')) {
      if (!h.fields.empty()) {
        h.fields.back().value.push_back(' ');
        h.fields.back().value.append(strings::trim(text));
      }
    } else if (looks_like_header(text)) {
      std::size_t colon = text.find(':');
      h.fields.push_back({strings::to_lower(text.substr(0, colon)),
                          std::string(strings::trim(text.substr(colon + 1)))});
    }
    pos = ln.next;
  }
  for (auto& f : h.fields) f.value = std::string(strings::trim(f.value));
  return h;
}

// Returns the offset of the blank line that ends the header block starting
// at `begin`, and the offset of the body. nullopt when no blank line exists.
inline std::optional<std::pair<std::size_t, std::size_t>> find_header_end(
    std::string_view s, std::size_t begin, std::size_t end) {
  std::size_t pos = begin;
  while (pos < end) {
    Line ln = next_line(s, pos);
    if (ln.end == ln.begin && ln.next > ln.begin) return {{ln.begin, std::min(ln.next, end)}};
    if (ln.next == pos) break;
    pos = ln.next;
  }
  return std::nullopt;
}

inline std::vector<std::string_view> split_params(std::string_view v) {
  std::vector<std::string_view> out;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= v.size(); ++i) {
    if (i < v.size() && v[i] == '"') quoted = !quoted;
    if (i == v.size() || (v[i] == ';' && !quoted)) {
      out.push_back(strings::trim(v.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::string unquote(std::string_view v) {
  v = strings::trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) ++i;
      out.push_back(v[i]);
    }
    return out;
  }
  return std::string(v);
}

}  // namespace detail

inline ContentType parse_content_type(std::string_view value) {
  ContentType ct;
  auto parts = detail::split_params(value);
  if (parts.empty() || parts[0].empty()) return ct;
  auto slash = parts[0].find('/');
  if (slash != std::string_view::npos) {
    ct.type = strings::to_lower(strings::trim(parts[0].substr(0, slash)));
    ct.subtype = strings::to_lower(strings::trim(parts[0].substr(slash + 1)));
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) continue;
    ct.params[strings::to_lower(strings::trim(parts[i].substr(0, eq)))] =
        detail::unquote(parts[i].substr(eq + 1));
  }
  return ct;
}

namespace detail {

inline constexpr int kMaxDepth = 32;

inline void fill_part(std::string_view raw, Part& part, std::size_t header_begin,
                      std::size_t header_end, std::size_t body_begin,
                      std::size_t body_end, int depth);

inline void split_multipart(std::string_view raw, Part& part, int depth) {
  std::string boundary = part.content_type.param("boundary");
  if (boundary.empty() || depth >= kMaxDepth) return;
  const std::string delim = "--" + boundary;
  std::vector<std::pair<std::size_t, std::size_t>> sections;  // [start, end)
  std::optional<std::size_t> open;
  std::size_t pos = part.body_begin;
  while (pos < part.body_end) {
    Line ln = next_line(raw, pos);
    std::size_t line_end = std::min(ln.end, part.body_end);
    std::string_view text = raw.substr(ln.begin, line_end - ln.begin);
    std::string_view t = text;
    while (!t.empty() && (t.back() == ' ' || t.back() == '\t')) t.remove_suffix(1);
    bool is_close = t.size() == delim.size() + 2 &&
                    t.substr(0, delim.size()) == delim &&
                    t.substr(delim.size()) == "--";
    bool is_delim = t == delim;
    if (is_delim || is_close) {
      if (open) {
        // The line break before a delimiter belongs to the delimiter.
        std::size_t end = ln.begin;
        if (end > *open && raw[end - 1] == '\n') --end;
        if (end > *open && raw[end - 1] == '\r') --end;
        sections.push_back({*open, std::max(end, *open)});
      }
      open.reset();
      if (is_close) break;
      open = std::min(ln.next, part.body_end);
    }
    if (ln.next == pos) break;
    pos = ln.next;
  }
  if (open) sections.push_back({*open, part.body_end});

  for (auto [start, end] : sections) {
    Part child;
    auto split = find_header_end(raw, start, end);
    std::string_view first = raw.substr(start, next_line(raw, start).end - start);
    if (split) {
      fill_part(raw, child, start, split->first, split->second, end, depth + 1);
    } else if (looks_like_header(first)) {
      fill_part(raw, child, start, end, end, end, depth + 1);
    } else {
      fill_part(raw, child, start, start, start, end, depth + 1);
    }
    part.children.push_back(std::move(child));
  }
}

inline void fill_part(std::string_view raw, Part& part, std::size_t header_begin,
                      std::size_t header_end, std::size_t body_begin,
                      std::size_t body_end, int depth) {
  part.headers = parse_header_block(raw, header_begin, header_end);
  if (auto ct = part.headers.last("content-type")) part.content_type = parse_content_type(*ct);
  if (auto te = part.headers.last("content-transfer-encoding"))
    part.transfer_encoding = strings::to_lower(strings::trim(*te));
  if (auto cd = part.headers.last("content-disposition")) {
    auto params = split_params(*cd);
    if (!params.empty()) part.disposition = strings::to_lower(params[0]);
  }
  part.body_begin = body_begin;
  part.body_end = body_end;
  if (part.is_multipart()) split_multipart(raw, part, depth);
}

}  // namespace detail

inline Message parse(std::string_view raw) {
  std::size_t start = 0;
  // Tolerate an mbox "From " separator line.
  if (raw.substr(0, 5) == "From ") start = detail::next_line(raw, 0).next;
  detail::Line first = detail::next_line(raw, start);
  if (!detail::looks_like_header(raw.substr(first.begin, first.end - first.begin)))
    throw Error(Errc::kUnparseableMessage, "message does not start with a header field");
  auto split = detail::find_header_end(raw, start, raw.size());
  if (!split) throw Error(Errc::kUnparseableMessage, "no header/body boundary");
  Message msg;
  detail::fill_part(raw, msg.root, start, split->first, split->second, raw.size(), 0);
  return msg;
}

// ---------------------------------------------------------------------------
// Transfer encodings

inline std::string decode_base64(std::string_view in) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    int v = value(c);
    if (v < 0) continue;
    acc = (acc << 6) | std::uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(char((acc >> bits) & 0xFF));
    }
  }
  return out;
}

inline std::string encode_base64(std::string_view in, std::string_view newline,
                                 std::size_t line_length = 76) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string flat;
  std::size_t i = 0;
  for (; i + 3 <= in.size(); i += 3) {
    std::uint32_t v = (std::uint8_t(in[i]) << 16) | (std::uint8_t(in[i + 1]) << 8) |
                      std::uint8_t(in[i + 2]);
    flat.push_back(kAlphabet[(v >> 18) & 63]);
    flat.push_back(kAlphabet[(v >> 12) & 63]);
    flat.push_back(kAlphabet[(v >> 6) & 63]);
    flat.push_back(kAlphabet[v & 63]);
  }
  if (i < in.size()) {
    std::uint32_t v = std::uint8_t(in[i]) << 16;
    if (i + 1 < in.size()) v |= std::uint8_t(in[i + 1]) << 8;
    flat.push_back(kAlphabet[(v >> 18) & 63]);
    flat.push_back(kAlphabet[(v >> 12) & 63]);
    flat.push_back(i + 1 < in.size() ? kAlphabet[(v >> 6) & 63] : '=');
    flat.push_back('=');
  }
  std::string out;
  for (std::size_t p = 0; p < flat.size(); p += line_length) {
    out.append(flat, p, line_length);
    out.append(newline);
  }
  return out;
}

inline std::string decode_quoted_printable(std::string_view in) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    char c = in[i];
    if (c != '=') {
      out.push_back(c);
      continue;
    }
    if (i + 1 < in.size() && in[i + 1] == '\n') {
      i += 1;
    } else if (i + 2 < in.size() && in[i + 1] == '\r' && in[i + 2] == '\n') {
      i += 2;
    } else if (i + 2 < in.size() && hex(in[i + 1]) >= 0 && hex(in[i + 2]) >= 0) {
      out.push_back(char(hex(in[i + 1]) * 16 + hex(in[i + 2])));
      i += 2;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline std::string encode_quoted_printable(std::string_view in,
                                           std::string_view newline) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  std::size_t col = 0;
  auto emit = [&](std::string_view token) {
    if (col + token.size() > 75) {
      out.push_back('=');
      out.append(newline);
      col = 0;
    }
    out.append(token);
    col += token.size();
  };
  for (std::size_t i = 0; i < in.size(); ++i) {
    unsigned char c = std::uint8_t(in[i]);
    if (c == '\n' || (c == '\r' && i + 1 < in.size() && in[i + 1] == '\n')) {
      if (c == '\r') ++i;
      out.append(newline);
      col = 0;
      continue;
    }
    bool at_line_end = i + 1 == in.size() || in[i + 1] == '\n' || in[i + 1] == '\r';
    bool literal = (c >= 33 && c <= 126 && c != '=') ||
                   ((c == ' ' || c == '\t') && !at_line_end);
    if (literal) {
      char ch = char(c);
      emit(std::string_view(&ch, 1));
    } else {
      char enc[3] = {'=', kHex[c >> 4], kHex[c & 15]};
      emit(std::string_view(enc, 3));
    }
  }
  return out;
}

inline std::string decode_transfer(std::string_view body, std::string_view encoding) {
  if (encoding == "base64") return decode_base64(body);
  if (encoding == "quoted-printable") return decode_quoted_printable(body);
  return std::string(body);
}

inline std::string encode_transfer(std::string_view data, std::string_view encoding,
                                   std::string_view newline) {
  if (encoding == "base64") return encode_base64(data, newline);
  if (encoding == "quoted-printable") return encode_quoted_printable(data, newline);
  return std::string(data);
}

// ---------------------------------------------------------------------------
// Charsets

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(char(cp));
  } else if (cp < 0x800) {
    out.push_back(char(0xC0 | (cp >> 6)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(char(0xE0 | (cp >> 12)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(char(0xF0 | (cp >> 18)));
    out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  }
}

inline constexpr std::uint32_t kReplacement = 0xFFFD;

inline std::string sanitize_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    auto b0 = std::uint8_t(in[i]);
    if (b0 < 0x80) {
      out.push_back(char(b0));
      ++i;
      continue;
    }
    int len = b0 >= 0xF0 && b0 <= 0xF4 ? 4 : b0 >= 0xE0 ? 3 : b0 >= 0xC2 && b0 < 0xE0 ? 2 : 0;
    if (b0 > 0xF4) len = 0;
    bool ok = len > 0 && i + std::size_t(len) <= in.size();
    std::uint32_t cp = 0;
    if (ok) {
      cp = b0 & (len == 2 ? 0x1F : len == 3 ? 0x0F : 0x07);
      for (int k = 1; k < len; ++k) {
        auto b = std::uint8_t(in[i + k]);
        if ((b & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (ok) {
      ok = !(len == 3 && (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))) &&
           !(len == 4 && (cp < 0x10000 || cp > 0x10FFFF));
    }
    if (ok) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      append_utf8(out, kReplacement);
      ++i;
    }
  }
  return out;
}

inline constexpr std::uint16_t kCp1252High[32] = {
    0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
    0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD,
    0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
    0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};

}  // namespace detail

// Converts bytes in `charset` to UTF-8. Undecodable bytes become U+FFFD;
// this never fails.
inline std::string to_utf8(std::string_view bytes, std::string_view charset) {
  std::string cs = strings::to_lower(strings::trim(charset));
  bool latin1 = cs == "iso-8859-1" || cs == "latin1" || cs == "iso-8859-15" ||
                cs == "latin-1" || cs == "iso8859-1";
  bool cp1252 = cs == "windows-1252" || cs == "cp1252";
  if (!latin1 && !cp1252) return detail::sanitize_utf8(bytes);
  std::string out;
  out.reserve(bytes.size());
  for (char ch : bytes) {
    auto b = std::uint8_t(ch);
    if (cp1252 && b >= 0x80 && b < 0xA0)
      detail::append_utf8(out, detail::kCp1252High[b - 0x80]);
    else
      detail::append_utf8(out, b);
  }
  return out;
}

// Decodes RFC 2047 encoded words ("=?utf-8?B?...?="); whitespace between
// adjacent encoded words is dropped.
inline std::string decode_header_words(std::string_view value) {
  std::string out;
  std::size_t i = 0;
  bool last_was_word = false;
  std::string pending_space;
  while (i < value.size()) {
    if (value.substr(i, 2) == "=?") {
      std::size_t q1 = value.find('?', i + 2);
      std::size_t q2 = q1 == std::string_view::npos ? q1 : value.find('?', q1 + 1);
      std::size_t end = q2 == std::string_view::npos ? q2 : value.find("?=", q2 + 1);
      if (end != std::string_view::npos && q2 == q1 + 2) {
        std::string_view charset = value.substr(i + 2, q1 - i - 2);
        char enc = strings::to_lower(value[q1 + 1]);
        std::string_view text = value.substr(q2 + 1, end - q2 - 1);
        std::string bytes;
        if (enc == 'b') {
          bytes = decode_base64(text);
        } else if (enc == 'q') {
          std::string t(text);
          for (char& c : t)
            if (c == '_') c = ' ';
          bytes = decode_quoted_printable(t);
        }
        if (enc == 'b' || enc == 'q') {
          if (!last_was_word) out += pending_space;
          pending_space.clear();
          out += to_utf8(bytes, charset);
          last_was_word = true;
          i = end + 2;
          continue;
        }
      }
    }
    char c = value[i++];
    if (c == ' ' || c == '\t') {
      pending_space.push_back(c);
      continue;
    }
    out += pending_space;
    pending_space.clear();
    out.push_back(c);
    last_was_word = false;
  }
  out += pending_space;
  return out;
}

// Depth-first search for the first inline text/html leaf.
inline const Part* find_html_part(const Part& part) {
  if (part.is_multipart()) {
    for (const auto& child : part.children)
      if (const Part* p = find_html_part(child)) return p;
    return nullptr;
  }
  if (part.content_type.is("text", "html") && part.disposition != "attachment")
    return &part;
  return nullptr;
}

}  // namespace tracksieve::mime

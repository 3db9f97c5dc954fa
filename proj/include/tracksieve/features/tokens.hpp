#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracksieve/error.hpp"
#include "tracksieve/strings.hpp"

namespace tracksieve {

// Decomposition of an image reference: scheme://host/folder/.../filename?query
struct RefTokens {
  std::string scheme;
  std::optional<std::string> host;  // lowercase; absent for relative references
  std::string registrable_domain;   // last two host labels
  std::vector<std::string> folders;
  std::string filename;
  std::optional<std::string> extension;  // lowercase
  std::optional<std::string> query;
  std::vector<std::string> alnum_segments;  // maximal alphanumeric runs of the URL
};

// Last two dot-separated labels; no public-suffix list is consulted.
inline std::string registrable_domain(std::string_view host) {
  std::size_t last = host.rfind('.');
  if (last == std::string_view::npos || last == 0) return std::string(host);
  std::size_t prev = host.rfind('.', last - 1);
  return std::string(prev == std::string_view::npos ? host : host.substr(prev + 1));
}

inline std::vector<std::string> alnum_runs(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !strings::is_alnum(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && strings::is_alnum(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

inline RefTokens tokenize_reference(std::string_view url) {
  if (url.empty()) throw Error(Errc::kMalformedUrl, "empty reference");
  for (char c : url)
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7F)
      throw Error(Errc::kMalformedUrl, "control character in reference");

  RefTokens t;
  std::string_view rest = url;

  // scheme ":", letters first, then letters/digits/+/-/.
  std::size_t colon = rest.find(':');
  if (colon != std::string_view::npos && colon > 0 && strings::is_alpha(rest[0])) {
    bool ok = true;
    for (std::size_t i = 1; i < colon; ++i) {
      char c = rest[i];
      ok = ok && (strings::is_alnum(c) || c == '+' || c == '-' || c == '.');
    }
    std::size_t first_delim = rest.find_first_of("/?#");
    if (ok && (first_delim == std::string_view::npos || colon < first_delim)) {
      t.scheme = strings::to_lower(rest.substr(0, colon));
      rest.remove_prefix(colon + 1);
    }
  }

  if (rest.substr(0, 2) == "//") {
    rest.remove_prefix(2);
    std::size_t end = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, end);
    rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
    if (auto at = authority.rfind('@'); at != std::string_view::npos)
      authority.remove_prefix(at + 1);
    if (auto port = authority.rfind(':'); port != std::string_view::npos) {
      bool digits = true;
      for (std::size_t i = port + 1; i < authority.size(); ++i)
        digits = digits && strings::is_digit(authority[i]);
      if (digits) authority = authority.substr(0, port);
    }
    if (authority.empty()) throw Error(Errc::kMalformedUrl, "empty host");
    t.host = strings::to_lower(authority);
    t.registrable_domain = registrable_domain(*t.host);
  }

  std::size_t hash = rest.find('#');
  if (hash != std::string_view::npos) rest = rest.substr(0, hash);
  std::size_t q = rest.find('?');
  std::string_view path = rest.substr(0, q);
  if (q != std::string_view::npos) t.query = std::string(rest.substr(q + 1));

  auto segments = strings::split(path, '/');
  bool trailing_slash = !path.empty() && path.back() == '/';
  std::vector<std::string_view> nonempty;
  for (auto seg : segments)
    if (!seg.empty()) nonempty.push_back(seg);
  if (!nonempty.empty() && !trailing_slash) {
    t.filename = std::string(nonempty.back());
    nonempty.pop_back();
  }
  for (auto seg : nonempty) t.folders.emplace_back(seg);

  std::size_t dot = t.filename.rfind('.');
  if (dot != std::string::npos && dot + 1 < t.filename.size())
    t.extension = strings::to_lower(std::string_view(t.filename).substr(dot + 1));

  t.alnum_segments = alnum_runs(url);
  return t;
}

}  // namespace tracksieve

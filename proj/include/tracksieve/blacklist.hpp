#pragma once

// Reference templates of known third-party tracking services.
//
// A template is "scheme://host/rest" where host and rest mix literal text
// with the wildcards [ID], [CLIENT], [MAIL] and [...]. The scheme is
// ignored when matching, the host is compared case-insensitively and both
// host and rest must match completely.

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tracksieve/email/document.hpp"
#include "tracksieve/error.hpp"
#include "tracksieve/strings.hpp"

namespace tracksieve {

enum class Wildcard { kNone, kId, kClient, kMail, kAny };

struct PatternToken {
  Wildcard wildcard = Wildcard::kNone;
  std::string literal;  // when wildcard == kNone
};

struct BlacklistRule {
  std::string provider;
  std::string source;  // template as written
  std::vector<PatternToken> host_pattern;
  std::vector<PatternToken> rest_pattern;  // path and query
};

struct BlacklistRuleSet {
  std::vector<BlacklistRule> rules;
  std::size_t size() const { return rules.size(); }
  bool empty() const { return rules.empty(); }
};

inline constexpr std::string_view kDefaultBlacklist =
    "Axiom Digital\thttp://open.delivery.net/o?[ID]\n"
    "Artegit AG\thttp://[CLIENT].elaine-asp.de/action/view/[ID]/[...]\n"
    "Conversant (former Dotomi)\thttp://ads.dotomi.com/cookieredir/[CLIENT]/[...].php?[ID]=1\n"
    "DoubleClick (Google)\thttp://ad.doubleclick.net/ad/[...]/[...];ord=[ID];u=[...]?\n"
    "Mailchimp\thttp://[CLIENT].[...].list-manage.com/track/open.php?u=[...]&id=[...]&e=[ID]\n"
    "Adestra\thttp://[CLIENT].msgfocus.com/t/[ID].png\n"
    "MarkMonitor\thttp://cl.exct.net/open.aspx?[ID]&d=[...]\n"
    "AppNexus\thttp://ib.adnxs.com/getuid?http://[...]/[ID]/[...]\n"
    "Criteo\thttp://er.prod.verticalresponse.com/[...]/[ID]/pixel.gif\n"
    "Litmus\thttps://[CLIENT].emltrk.com/[CLIENT]?d=[MAIL]\n"
    "Optivo\thttps://tracking.srv2.de/op/[...]/[ID]-[ID]-[ID].gif\n"
    "Bigfoot Interactive\thttp://pix.bfi0.com/t.gif?k=[...]&c=[...]&s=[ID]\n"
    "Mailermailer\thttp://m1e.net/c?[ID]\n"
    "VerticalResponse\thttp://cts.vresp.com/o.gif?[...]/[ID]/[...]\n";

namespace blacklist_detail {

inline std::string_view strip_scheme(std::string_view s) {
  std::size_t colon = s.find("://");
  if (colon != std::string_view::npos && s.find_first_of("/?#") > colon)
    return s.substr(colon + 3);
  if (s.substr(0, 2) == "//") return s.substr(2);
  return s;
}

inline std::vector<PatternToken> tokenize_pattern(std::string_view s, std::size_t line) {
  std::vector<PatternToken> out;
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) out.push_back({Wildcard::kNone, std::move(literal)});
    literal.clear();
  };
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ']')
      throw Error(Errc::kInvalidTemplate, "line " + std::to_string(line) + ": unmatched ']'");
    if (s[i] != '[') {
      literal += s[i++];
      continue;
    }
    std::size_t close = s.find(']', i);
    if (close == std::string_view::npos)
      throw Error(Errc::kInvalidTemplate, "line " + std::to_string(line) + ": unmatched '['");
    std::string_view name = s.substr(i + 1, close - i - 1);
    Wildcard w;
    if (name == "ID") w = Wildcard::kId;
    else if (name == "CLIENT") w = Wildcard::kClient;
    else if (name == "MAIL") w = Wildcard::kMail;
    else if (name == "...") w = Wildcard::kAny;
    else
      throw Error(Errc::kInvalidTemplate,
                  "line " + std::to_string(line) + ": unknown token [" + std::string(name) + "]");
    flush();
    out.push_back({w, {}});
    i = close + 1;
  }
  flush();
  return out;
}

inline bool id_char(char c) { return strings::is_alnum(c) || c == '_' || c == '-'; }

// Whether s may be consumed by wildcard w; host spans stay within one label
// for [CLIENT].
inline bool span_ok(Wildcard w, std::string_view s, bool host) {
  switch (w) {
    case Wildcard::kAny:
      return true;
    case Wildcard::kId:
      if (s.empty()) return false;
      for (char c : s)
        if (!id_char(c)) return false;
      return true;
    case Wildcard::kClient:
      if (s.empty()) return false;
      for (char c : s)
        if (host ? c == '.' : (c == '/' || c == '?' || c == '&' || c == '#')) return false;
      return true;
    case Wildcard::kMail:
      return s.find('@') != std::string_view::npos || s.find("%40") != std::string_view::npos;
    case Wildcard::kNone:
      break;
  }
  return false;
}

inline bool match_tokens(const std::vector<PatternToken>& pattern, std::size_t ti,
                         std::string_view text, std::size_t pos, bool host) {
  if (ti == pattern.size()) return pos == text.size();
  const PatternToken& tok = pattern[ti];
  if (tok.wildcard == Wildcard::kNone) {
    if (text.substr(pos, tok.literal.size()) != tok.literal) return false;
    return match_tokens(pattern, ti + 1, text, pos + tok.literal.size(), host);
  }
  for (std::size_t end = pos; end <= text.size(); ++end) {
    std::string_view span = text.substr(pos, end - pos);
    // [ID] and [CLIENT] cannot grow past their first forbidden character.
    if ((tok.wildcard == Wildcard::kId || tok.wildcard == Wildcard::kClient) && !span.empty() &&
        !span_ok(tok.wildcard, span.substr(span.size() - 1), host))
      break;
    if (span_ok(tok.wildcard, span, host) && match_tokens(pattern, ti + 1, text, end, host))
      return true;
  }
  return false;
}

inline bool has_literal(const std::vector<PatternToken>& p) {
  for (const auto& t : p)
    if (t.wildcard == Wildcard::kNone)
      for (char c : t.literal)
        if (strings::is_alnum(c)) return true;
  return false;
}

}  // namespace blacklist_detail

inline BlacklistRule compile_template(std::string provider, std::string_view tmpl,
                                      std::size_t line = 0) {
  using namespace blacklist_detail;
  BlacklistRule rule;
  rule.provider = std::move(provider);
  rule.source = std::string(tmpl);
  std::string_view body = strip_scheme(tmpl);
  std::size_t cut = body.find_first_of("/?");
  rule.host_pattern = tokenize_pattern(body.substr(0, cut), line);
  for (auto& t : rule.host_pattern) t.literal = strings::to_lower(t.literal);
  if (cut != std::string_view::npos) rule.rest_pattern = tokenize_pattern(body.substr(cut), line);
  if (!has_literal(rule.host_pattern) && !has_literal(rule.rest_pattern))
    throw Error(Errc::kInvalidTemplate,
                "line " + std::to_string(line) + ": template has no literal element");
  return rule;
}

inline BlacklistRuleSet parse_rules(std::string_view text) {
  BlacklistRuleSet set;
  std::size_t line_no = 0;
  for (auto line : strings::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::string_view trimmed = strings::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw Error(Errc::kInvalidTemplate,
                  "line " + std::to_string(line_no) + ": expected provider<TAB>template");
    set.rules.push_back(compile_template(std::string(strings::trim(line.substr(0, tab))),
                                         strings::trim(line.substr(tab + 1)), line_no));
  }
  return set;
}

inline BlacklistRuleSet compile_rules(const std::filesystem::path& rule_file) {
  return parse_rules(read_file(rule_file));
}

inline const BlacklistRuleSet& default_rules() {
  static const BlacklistRuleSet rules = parse_rules(kDefaultBlacklist);
  return rules;
}

inline bool rule_matches(const BlacklistRule& rule, std::string_view url) {
  using namespace blacklist_detail;
  std::string_view body = strip_scheme(url);
  if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
  std::size_t cut = body.find_first_of("/?");
  std::string host = strings::to_lower(body.substr(0, cut));
  if (auto port = host.rfind(':'); port != std::string::npos) host.resize(port);
  std::string_view rest = cut == std::string_view::npos ? std::string_view{} : body.substr(cut);
  return match_tokens(rule.host_pattern, 0, host, 0, true) &&
         match_tokens(rule.rest_pattern, 0, rest, 0, false);
}

// First matching rule in file order.
inline std::optional<std::string> match_url(std::string_view url, const BlacklistRuleSet& rules) {
  for (const auto& rule : rules.rules)
    if (rule_matches(rule, url)) return rule.provider;
  return std::nullopt;
}

inline std::string rules_to_text(const BlacklistRuleSet& rules) {
  std::string out;
  for (const auto& r : rules.rules) out += r.provider + "\t" + r.source + "\n";
  return out;
}

}  // namespace tracksieve

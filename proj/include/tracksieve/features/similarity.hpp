#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace tracksieve {

namespace similarity_detail {

struct Match {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t len = 0;
};

// Longest common substring of a[a_lo,a_hi) and b[b_lo,b_hi); ties go to the
// smallest start in a, then the smallest start in b.
inline Match longest_match(std::string_view a, std::size_t a_lo, std::size_t a_hi,
                           std::string_view b, std::size_t b_lo, std::size_t b_hi,
                           std::vector<std::size_t>& prev, std::vector<std::size_t>& cur) {
  Match best{a_lo, b_lo, 0};
  const std::size_t m = b_hi - b_lo;
  prev.assign(m + 1, 0);
  cur.assign(m + 1, 0);
  for (std::size_t i = a_lo; i < a_hi; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (a[i] == b[b_lo + j]) {
        std::size_t len = prev[j] + 1;
        cur[j + 1] = len;
        std::size_t start_a = i + 1 - len;
        std::size_t start_b = b_lo + j + 1 - len;
        if (len > best.len ||
            (len == best.len && (start_a < best.a || (start_a == best.a && start_b < best.b)))) {
          best = {start_a, start_b, len};
        }
      } else {
        cur[j + 1] = 0;
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

inline std::size_t matched_chars(std::string_view a, std::size_t a_lo, std::size_t a_hi,
                                 std::string_view b, std::size_t b_lo, std::size_t b_hi,
                                 std::vector<std::size_t>& prev,
                                 std::vector<std::size_t>& cur) {
  if (a_lo >= a_hi || b_lo >= b_hi) return 0;
  Match m = longest_match(a, a_lo, a_hi, b, b_lo, b_hi, prev, cur);
  if (m.len == 0) return 0;
  return m.len + matched_chars(a, a_lo, m.a, b, b_lo, m.b, prev, cur) +
         matched_chars(a, m.a + m.len, a_hi, b, m.b + m.len, b_hi, prev, cur);
}

}  // namespace similarity_detail

// Ratcliff/Obershelp gestalt similarity 2M/(|a|+|b|), where M counts the
// characters matched by anchoring on the longest common substring and
// recursing on both flanks. Two empty strings are identical (1.0).
// Anchor tie-breaking makes the raw recursion order-dependent, so the
// lexicographically smaller string is always taken as the first argument.
inline double ratcliff_obershelp(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a == b) return 1.0;
  if (b < a) std::swap(a, b);
  std::vector<std::size_t> prev, cur;
  std::size_t m = similarity_detail::matched_chars(a, 0, a.size(), b, 0, b.size(), prev, cur);
  return 2.0 * double(m) / double(a.size() + b.size());
}

}  // namespace tracksieve

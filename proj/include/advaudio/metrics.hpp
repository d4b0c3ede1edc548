// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "advaudio/error.hpp"

namespace advaudio {

/// Levenshtein distance with unit insert/delete/substitute costs.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Levenshtein distance divided by the longer string's length; in [0, 1].
inline double normalized_edit_distance(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) throw error(errc::both_empty, "both strings empty");
  return static_cast<double>(edit_distance(a, b)) /
         static_cast<double>(std::max(a.size(), b.size()));
}

namespace detail {

struct block_match {
  std::size_t pos_a = 0;
  std::size_t pos_b = 0;
  std::size_t len = 0;
};

// Longest common contiguous block, leftmost in a then in b on ties.
inline block_match longest_block(std::string_view a, std::string_view b) {
  block_match best;
  if (a.empty() || b.empty()) return best;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      if (cur[j] > best.len) {
        best.len = cur[j];
        best.pos_a = i - cur[j];
        best.pos_b = j - cur[j];
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

inline std::size_t matched_chars(std::string_view a, std::string_view b) {
  const block_match m = longest_block(a, b);
  if (m.len == 0) return 0;
  return m.len + matched_chars(a.substr(0, m.pos_a), b.substr(0, m.pos_b)) +
         matched_chars(a.substr(m.pos_a + m.len), b.substr(m.pos_b + m.len));
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::istringstream is{std::string(s)};
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

}  // namespace detail

/// Similarity index 2M/T: M = characters matched by recursive
/// longest-common-block matching, T = total length of both strings.
/// 1.0 for identical strings, 0.0 when nothing is shared. The pair is
/// taken in lexicographic order first: the matcher's leftmost tie-break
/// is order-dependent, and the index must be symmetric.
inline double similarity(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (b < a) std::swap(a, b);
  const std::size_t m = detail::matched_chars(a, b);
  return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

/// Word-level Levenshtein distance between whitespace-split token lists.
inline std::size_t word_edit_distance(const std::vector<std::string>& ref,
                                      const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Word error rate: word-level Levenshtein over the reference word count.
inline double word_error_rate(std::string_view ref, std::string_view hyp) {
  const auto ref_words = detail::split_words(ref);
  if (ref_words.empty()) throw error(errc::empty_reference, "reference has no words");
  const auto hyp_words = detail::split_words(hyp);
  return static_cast<double>(word_edit_distance(ref_words, hyp_words)) /
         static_cast<double>(ref_words.size());
}

}  // namespace advaudio

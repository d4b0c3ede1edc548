// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "advaudio/ctc.hpp"
#include "advaudio/matrix.hpp"

namespace advaudio {

inline constexpr std::size_t kDefaultBeamWidth = 32;

/// Best-path decoding: per-frame argmax (ties to the lowest token index),
/// then reduction.
inline phrase greedy_decode(const logit_matrix& y, const alphabet& ab = alphabet::standard()) {
  alignment a(y.rows());
  for (std::size_t t = 0; t < y.rows(); ++t) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < y.cols(); ++c)
      if (y(t, c) > y(t, best)) best = c;
    a[t] = best;
  }
  return reduce(a, ab);
}

struct beam_result {
  phrase text;
  double log_prob = kLogZero;
};

/// Prefix beam search. Alignments that reduce to the same prefix are merged
/// by tracking separate ends-in-blank / ends-in-label probabilities, so the
/// returned score is the accumulated log phrase probability (exact when the
/// beam is wide enough to avoid pruning). Ties break lexicographically.
inline beam_result beam_search_decode(const logit_matrix& y, std::size_t beam_width,
                                      const alphabet& ab = alphabet::standard()) {
  if (beam_width < 1) beam_width = 1;

  struct prob_pair {
    double blank = kLogZero;      // paths ending in blank
    double non_blank = kLogZero;  // paths ending in the prefix's last char
    double total() const { return log_sum_exp(blank, non_blank); }
  };

  std::map<phrase, prob_pair> beam;
  beam[phrase{}] = prob_pair{0.0, kLogZero};  // empty prefix, probability 1

  for (std::size_t t = 0; t < y.rows(); ++t) {
    std::map<phrase, prob_pair> next;
    for (const auto& [prefix, pp] : beam) {
      const double total = pp.total();
      // Emit blank: prefix unchanged, now ends in blank.
      {
        const double lp = detail::safe_log(y(t, ab.blank()));
        auto& slot = next[prefix];
        slot.blank = log_sum_exp(slot.blank, lp + total);
      }
      for (std::size_t c = 0; c + 1 < ab.size(); ++c) {
        const double lp = detail::safe_log(y(t, c));
        if (lp == kLogZero) continue;
        const char ch = ab.character(c);
        if (!prefix.empty() && prefix.back() == ch) {
          // Repeat of the last char: only blank-ended paths start a new
          // character, label-ended paths collapse into the same prefix.
          auto& grown = next[prefix + ch];
          grown.non_blank = log_sum_exp(grown.non_blank, lp + pp.blank);
          auto& same = next[prefix];
          same.non_blank = log_sum_exp(same.non_blank, lp + pp.non_blank);
        } else {
          auto& grown = next[prefix + ch];
          grown.non_blank = log_sum_exp(grown.non_blank, lp + total);
        }
      }
    }
    // Prune to the beam width; ties break toward the lexicographically
    // smaller phrase (std::map iteration order keeps this deterministic).
    std::vector<std::pair<phrase, prob_pair>> ranked(next.begin(), next.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second.total() > b.second.total();
    });
    if (ranked.size() > beam_width) ranked.resize(beam_width);
    beam = std::map<phrase, prob_pair>(ranked.begin(), ranked.end());
  }

  beam_result best;
  for (const auto& [prefix, pp] : beam) {
    const double score = pp.total();
    if (score > best.log_prob || (score == best.log_prob && prefix < best.text)) {
      best.text = prefix;
      best.log_prob = score;
    }
  }
  return best;
}

}  // namespace advaudio

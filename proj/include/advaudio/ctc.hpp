// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "advaudio/error.hpp"
#include "advaudio/matrix.hpp"

namespace advaudio {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without leaving the log domain.
inline double log_sum_exp(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// A phrase is a blank-free character string over the alphabet.
using phrase = std::string;

/// Token alphabet with the blank at the last index. The standard alphabet
/// is a-z, space and apostrophe plus the blank (29 tokens).
class alphabet {
 public:
  explicit alphabet(std::string chars) : chars_(std::move(chars)) {}

  static const alphabet& standard() {
    static const alphabet a("abcdefghijklmnopqrstuvwxyz '");
    return a;
  }

  std::size_t size() const { return chars_.size() + 1; }  // characters + blank
  std::size_t blank() const { return chars_.size(); }
  char character(std::size_t token) const { return chars_[token]; }

  bool contains(char c) const { return chars_.find(c) != std::string::npos; }

  /// Token index of a character; npos if the character is not in the alphabet.
  std::size_t index_of(char c) const { return chars_.find(c); }

  bool valid_phrase(const phrase& p) const {
    return std::all_of(p.begin(), p.end(), [this](char c) { return contains(c); });
  }

 private:
  std::string chars_;
};

/// A length-T token sequence (indices into an alphabet, blanks allowed).
using alignment = std::vector<std::size_t>;

/// Collapse runs of identical tokens, then delete blanks. The order
/// matters: a blank separating two equal characters keeps them distinct.
inline phrase reduce(const alignment& a, const alphabet& ab) {
  phrase p;
  std::size_t prev = static_cast<std::size_t>(-1);
  for (std::size_t tok : a) {
    if (tok != prev && tok != ab.blank()) p.push_back(ab.character(tok));
    prev = tok;
  }
  return p;
}

/// Exhaustive list of the length-T alignments that reduce to p. Test-scale
/// oracle for the forward algorithm; guarded against combinatorial blowup.
inline std::vector<alignment> enumerate_alignments(const phrase& p, std::size_t frames,
                                                   const alphabet& ab) {
  if (frames > 8 || ab.size() > 4)
    throw error(errc::too_large, "enumeration limited to T <= 8 and |alphabet| <= 4");
  std::vector<alignment> out;
  alignment cur(frames);
  const std::size_t tokens = ab.size();
  // Odometer over all tokens^frames sequences.
  std::size_t total = 1;
  for (std::size_t i = 0; i < frames; ++i) total *= tokens;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t i = 0; i < frames; ++i) {
      cur[i] = rest % tokens;
      rest /= tokens;
    }
    if (reduce(cur, ab) == p) out.push_back(cur);
  }
  return out;
}

/// Probability of one alignment: the product of its per-frame likelihoods.
inline double alignment_prob(const alignment& a, const logit_matrix& y) {
  if (a.size() != y.rows()) throw error(errc::length_mismatch, "alignment length != frame count");
  double prob = 1.0;
  for (std::size_t t = 0; t < a.size(); ++t) prob *= y(t, a[t]);
  return prob;
}

namespace detail {

/// Blank-interleaved label sequence: blank p1 blank p2 ... blank.
inline std::vector<std::size_t> interleave(const phrase& p, const alphabet& ab) {
  std::vector<std::size_t> l;
  l.reserve(2 * p.size() + 1);
  l.push_back(ab.blank());
  for (char c : p) {
    l.push_back(ab.index_of(c));
    l.push_back(ab.blank());
  }
  return l;
}

inline double safe_log(double v) { return v > 0.0 ? std::log(v) : kLogZero; }

/// Forward pass over the interleaved sequence; alpha includes the emission
/// at its own frame. Returns T x S log-alpha.
inline matrix ctc_forward(const logit_matrix& y, const std::vector<std::size_t>& l) {
  const std::size_t frames = y.rows(), states = l.size();
  matrix log_alpha(frames, states, kLogZero);
  log_alpha(0, 0) = safe_log(y(0, l[0]));
  if (states > 1) log_alpha(0, 1) = safe_log(y(0, l[1]));
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = log_alpha(t - 1, s);
      if (s >= 1) acc = log_sum_exp(acc, log_alpha(t - 1, s - 1));
      // The skip is disabled across a blank or between equal labels; this
      // is exactly what makes runs collapse before blanks are removed.
      if (s >= 2 && l[s] != l[s - 2]) acc = log_sum_exp(acc, log_alpha(t - 1, s - 2));
      if (acc != kLogZero) acc += safe_log(y(t, l[s]));
      log_alpha(t, s) = acc;
    }
  }
  return log_alpha;
}

/// Backward pass: beta covers emissions strictly after frame t.
inline matrix ctc_backward(const logit_matrix& y, const std::vector<std::size_t>& l) {
  const std::size_t frames = y.rows(), states = l.size();
  matrix log_beta(frames, states, kLogZero);
  log_beta(frames - 1, states - 1) = 0.0;
  if (states > 1) log_beta(frames - 1, states - 2) = 0.0;
  for (std::size_t t = frames - 1; t-- > 0;) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = log_beta(t + 1, s) + safe_log(y(t + 1, l[s]));
      if (s + 1 < states)
        acc = log_sum_exp(acc, log_beta(t + 1, s + 1) + safe_log(y(t + 1, l[s + 1])));
      if (s + 2 < states && l[s] != l[s + 2])
        acc = log_sum_exp(acc, log_beta(t + 1, s + 2) + safe_log(y(t + 1, l[s + 2])));
      log_beta(t, s) = acc;
    }
  }
  return log_beta;
}

inline double ctc_log_prob(const logit_matrix& y, const phrase& p, const alphabet& ab) {
  if (y.rows() == 0) return p.empty() ? 0.0 : kLogZero;
  const auto l = interleave(p, ab);
  if (l.size() > 2 * y.rows() + 1) return kLogZero;  // no alignment fits
  const matrix log_alpha = ctc_forward(y, l);
  double lp = log_alpha(y.rows() - 1, l.size() - 1);
  if (l.size() > 1) lp = log_sum_exp(lp, log_alpha(y.rows() - 1, l.size() - 2));
  return lp;
}

}  // namespace detail

/// Minimum frame count that admits an alignment of p (doubled characters
/// need a separating blank).
inline std::size_t min_alignment_frames(const phrase& p) {
  std::size_t extra = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] == p[i - 1]) ++extra;
  return p.size() + extra;
}

/// Total probability of phrase p under y: the sum over all alignments that
/// reduce to p, via the forward dynamic program. Infeasible phrases get 0.
inline double phrase_prob(const phrase& p, const logit_matrix& y,
                          const alphabet& ab = alphabet::standard()) {
  return std::exp(detail::ctc_log_prob(y, p, ab));
}

/// Negative log likelihood of the desired phrase.
inline double ctc_loss(const logit_matrix& y, const phrase& p,
                       const alphabet& ab = alphabet::standard()) {
  const double lp = detail::ctc_log_prob(y, p, ab);
  if (lp == kLogZero) throw error(errc::impossible_target, "phrase has probability zero");
  return -lp;
}

/// Analytic gradient of ctc_loss with respect to the probability matrix y:
/// d(-log P)/dy[t][c] = -(posterior occupancy of c at t) / y[t][c].
inline matrix ctc_grad(const logit_matrix& y, const phrase& p,
                       const alphabet& ab = alphabet::standard()) {
  const auto l = detail::interleave(p, ab);
  if (y.rows() == 0 || l.size() > 2 * y.rows() + 1)
    throw error(errc::impossible_target, "phrase has probability zero");
  const matrix log_alpha = detail::ctc_forward(y, l);
  double log_p = log_alpha(y.rows() - 1, l.size() - 1);
  if (l.size() > 1) log_p = log_sum_exp(log_p, log_alpha(y.rows() - 1, l.size() - 2));
  if (log_p == kLogZero) throw error(errc::impossible_target, "phrase has probability zero");
  const matrix log_beta = detail::ctc_backward(y, l);

  matrix grad(y.rows(), y.cols(), 0.0);
  for (std::size_t t = 0; t < y.rows(); ++t) {
    // Gather occupancy per token in the log domain; log-alpha already
    // carries one factor of y(t, c), so dividing by y cancels exactly.
    std::vector<double> log_occ(y.cols(), kLogZero);
    for (std::size_t s = 0; s < l.size(); ++s) {
      const double v = log_alpha(t, s) + log_beta(t, s);
      if (v != kLogZero) log_occ[l[s]] = log_sum_exp(log_occ[l[s]], v);
    }
    for (std::size_t c = 0; c < y.cols(); ++c) {
      if (log_occ[c] == kLogZero) continue;  // token unusable here: zero gradient
      grad(t, c) = -std::exp(log_occ[c] - log_p - detail::safe_log(y(t, c)));
    }
  }
  return grad;
}

}  // namespace advaudio

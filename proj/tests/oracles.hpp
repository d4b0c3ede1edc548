// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Independent test oracles. Everything here deliberately avoids the
// implementation paths it checks: the DFT is the O(n^2) definition, edit
// distance is the exponential recursion, gradients come from central
// finite differences on the public entry points.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "advaudio/ctc.hpp"
#include "advaudio/matrix.hpp"
#include "advaudio/rng.hpp"

namespace oracles {

/// Textbook O(n^2) DFT with the e^{-2*pi*i*k*n/N} convention.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x, std::size_t n) {
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < n && i < x.size(); ++i) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/// Exponential-time edit distance straight from the recurrence; the
/// dynamic program never enters the picture. Test-scale only.
inline std::size_t brute_edit_distance(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t keep = brute_edit_distance(a.substr(1), b.substr(1)) + (a[0] == b[0] ? 0 : 1);
  const std::size_t del = brute_edit_distance(a.substr(1), b) + 1;
  const std::size_t ins = brute_edit_distance(a, b.substr(1)) + 1;
  return std::min({keep, del, ins});
}

/// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x0, double h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

/// Relative disagreement with a floor so near-zero pairs compare sanely.
inline double rel_err(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-300});
  return std::abs(got - want) / denom;
}

/// Random row-stochastic matrix (strictly positive entries).
inline advaudio::logit_matrix random_logits(std::size_t frames, std::size_t tokens,
                                            advaudio::rng& r) {
  advaudio::logit_matrix y(frames, tokens);
  for (std::size_t t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (std::size_t c = 0; c < tokens; ++c) {
      y(t, c) = 0.05 + r.uniform();
      sum += y(t, c);
    }
    for (std::size_t c = 0; c < tokens; ++c) y(t, c) /= sum;
  }
  return y;
}

inline advaudio::phrase random_phrase(std::size_t max_len, const advaudio::alphabet& ab,
                                      advaudio::rng& r) {
  const auto len = static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(max_len)));
  advaudio::phrase p;
  for (std::size_t i = 0; i < len; ++i)
    p.push_back(ab.character(static_cast<std::size_t>(
        r.uniform_int(0, static_cast<std::int64_t>(ab.size()) - 2))));
  return p;
}

/// All phrases of length <= max_len over the alphabet's characters.
inline std::vector<advaudio::phrase> all_phrases(std::size_t max_len, const advaudio::alphabet& ab) {
  std::vector<advaudio::phrase> out{advaudio::phrase{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t c = 0; c + 1 < ab.size(); ++c) out.push_back(out[i] + ab.character(c));
    begin = end;
  }
  return out;
}

}  // namespace oracles

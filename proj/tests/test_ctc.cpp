// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "advaudio/ctc.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

using namespace advaudio;

namespace {

const alphabet kAB("ab");  // tokens: a=0, b=1, blank=2
const alphabet kA("a");    // tokens: a=0, blank=1

logit_matrix uniform_rows(std::size_t frames, std::size_t tokens) {
  logit_matrix y(frames, tokens, 1.0 / static_cast<double>(tokens));
  return y;
}

/// Enumeration-based phrase probability: the Eq.-level definition.
double enumerated_prob(const phrase& p, const logit_matrix& y, const alphabet& ab) {
  double total = 0.0;
  for (const alignment& a : enumerate_alignments(p, y.rows(), ab))
    total += alignment_prob(a, y);
  return total;
}

}  // namespace

TEST_CASE("reduce applies run-collapse before blank removal") {
  const std::size_t a = 0, b = 1, eps = 2;
  REQUIRE(reduce({a, a, b, eps, eps, b}, kAB) == "abb");
  REQUIRE(reduce({eps, eps, eps}, kAB) == "");
  REQUIRE(reduce({a, eps, a}, kAB) == "aa");  // the blank keeps the runs apart
  REQUIRE(reduce({}, kAB) == "");
}

TEST_CASE("enumerate_alignments lists exactly the reducing sequences") {
  SECTION("p=a, T=2 over {a, blank}") {
    const auto listed = enumerate_alignments("a", 2, kA);
    std::set<alignment> got(listed.begin(), listed.end());
    const std::set<alignment> want = {{0, 0}, {0, 1}, {1, 0}};
    REQUIRE(got == want);
  }

  SECTION("empty phrase, T=2") {
    const auto got = enumerate_alignments("", 2, kA);
    REQUIRE(got == std::vector<alignment>{{1, 1}});
  }

  SECTION("p=ab, T=2 leaves no room for blanks or repeats") {
    const auto got = enumerate_alignments("ab", 2, kAB);
    REQUIRE(got == std::vector<alignment>{{0, 1}});
  }

  SECTION("every enumerated alignment reduces back to p") {
    rng r(1);
    for (int i = 0; i < 20; ++i) {
      const phrase p = oracles::random_phrase(3, kAB, r);
      for (const alignment& a : enumerate_alignments(p, 5, kAB)) REQUIRE(reduce(a, kAB) == p);
    }
  }

  SECTION("scale guard") {
    REQUIRE_ERROR_CODE(enumerate_alignments("a", 9, kA), errc::too_large);
    REQUIRE_ERROR_CODE(enumerate_alignments("a", 2, alphabet("abcd")), errc::too_large);
  }
}

TEST_CASE("alignment_prob is the product of per-frame likelihoods") {
  SECTION("uniform rows over 3 tokens") {
    const logit_matrix y = uniform_rows(2, 3);
    for (const alignment& a :
         {alignment{0, 0}, alignment{1, 2}, alignment{2, 1}})
      REQUIRE_THAT(alignment_prob(a, y), Catch::Matchers::WithinAbs(1.0 / 9.0, 1e-15));
  }

  SECTION("one-hot rows matching the alignment give 1") {
    logit_matrix y(2, 3, 0.0);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    REQUIRE(alignment_prob({0, 1}, y) == 1.0);
  }

  SECTION("direct product") {
    logit_matrix y(2, 3);
    y(0, 0) = 0.5; y(0, 1) = 0.3; y(0, 2) = 0.2;
    y(1, 0) = 0.1; y(1, 1) = 0.6; y(1, 2) = 0.3;
    REQUIRE_THAT(alignment_prob({0, 1}, y), Catch::Matchers::WithinAbs(0.30, 1e-15));
  }

  SECTION("length mismatch") {
    REQUIRE_ERROR_CODE(alignment_prob({0, 1, 0}, uniform_rows(2, 3)), errc::length_mismatch);
  }
}

TEST_CASE("phrase_prob equals the enumeration oracle") {
  SECTION("p=a, T=2 closed form") {
    rng r(9);
    const logit_matrix y = oracles::random_logits(2, 2, r);
    const double want = y(0, 0) * y(1, 0) + y(0, 0) * y(1, 1) + y(0, 1) * y(1, 0);
    REQUIRE_THAT(phrase_prob("a", y, kA), Catch::Matchers::WithinRel(want, 1e-12));
  }

  SECTION("random instances, T <= 6") {
    rng r(20260809);
    for (int i = 0; i < 100; ++i) {
      const auto frames = static_cast<std::size_t>(r.uniform_int(1, 6));
      const logit_matrix y = oracles::random_logits(frames, kAB.size(), r);
      const phrase p = oracles::random_phrase(4, kAB, r);
      const double got = phrase_prob(p, y, kAB);
      const double want = enumerated_prob(p, y, kAB);
      if (want == 0.0) {
        REQUIRE(got == 0.0);
      } else {
        REQUIRE(oracles::rel_err(got, want) < 1e-12);
      }
    }
  }

  SECTION("infeasible targets have probability zero, not an error") {
    const logit_matrix y = uniform_rows(2, 2);
    REQUIRE(phrase_prob("aa", y, kA) == 0.0);  // needs a-blank-a, length 3
  }

  SECTION("total probability over all phrases is 1") {
    rng r(31415);
    for (std::size_t frames : {1u, 3u, 5u}) {
      const logit_matrix y = oracles::random_logits(frames, kAB.size(), r);
      double total = 0.0;
      for (const phrase& p : oracles::all_phrases(frames, kAB)) total += phrase_prob(p, y, kAB);
      REQUIRE_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
  }
}

TEST_CASE("ctc_loss") {
  SECTION("probability one means zero loss") {
    logit_matrix y(2, 3, 0.0);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    REQUIRE_THAT(ctc_loss(y, "ab", kAB), Catch::Matchers::WithinAbs(0.0, 1e-15));
  }

  SECTION("uniform {a, blank} rows, T=2, p=a") {
    const logit_matrix y = uniform_rows(2, 2);
    REQUIRE_THAT(ctc_loss(y, "a", kA), Catch::Matchers::WithinRel(-std::log(0.75), 1e-12));
  }

  SECTION("infeasible phrase throws") {
    REQUIRE_ERROR_CODE(ctc_loss(uniform_rows(2, 2), "aa", kA), errc::impossible_target);
  }

  SECTION("loss is nonnegative on random instances") {
    rng r(8);
    for (int i = 0; i < 50; ++i) {
      const logit_matrix y = oracles::random_logits(4, 3, r);
      const phrase p = oracles::random_phrase(2, kAB, r);
      if (min_alignment_frames(p) > 4) continue;
      REQUIRE(ctc_loss(y, p, kAB) >= 0.0);
    }
  }
}

TEST_CASE("ctc_grad") {
  SECTION("matches central finite differences on random 4x3 instances") {
    rng r(20260809);
    for (int inst = 0; inst < 25; ++inst) {
      logit_matrix y = oracles::random_logits(4, 3, r);
      phrase p = oracles::random_phrase(2, kAB, r);
      if (min_alignment_frames(p) > 4) p = "a";
      const matrix g = ctc_grad(y, p, kAB);
      for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t c = 0; c < 3; ++c) {
          const double fd = oracles::central_diff(
              [&](double v) {
                logit_matrix yy = y;
                yy(t, c) = v;
                return ctc_loss(yy, p, kAB);
              },
              y(t, c), 1e-5);
          if (std::abs(g(t, c)) > 1e-8) REQUIRE(oracles::rel_err(fd, g(t, c)) < 1e-5);
        }
      }
    }
  }

  SECTION("tokens with zero posterior have zero gradient") {
    // p = "a" with one frame: the only alignment is 'a'; blank and 'b'
    // are unusable and must carry exactly zero gradient.
    rng r(2);
    const logit_matrix y = oracles::random_logits(1, 3, r);
    const matrix g = ctc_grad(y, "a", kAB);
    REQUIRE(g(0, 1) == 0.0);
    REQUIRE(g(0, 2) == 0.0);
    REQUIRE(g(0, 0) < 0.0);
  }

  SECTION("per-frame posterior identity: sum_c y(t,c) * grad(t,c) == -1") {
    rng r(15);
    for (int inst = 0; inst < 20; ++inst) {
      const logit_matrix y = oracles::random_logits(5, 3, r);
      phrase p = oracles::random_phrase(3, kAB, r);
      if (min_alignment_frames(p) > 5) p = "ab";
      const matrix g = ctc_grad(y, p, kAB);
      for (std::size_t t = 0; t < y.rows(); ++t) {
        double acc = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) acc += y(t, c) * g(t, c);
        REQUIRE_THAT(acc, Catch::Matchers::WithinAbs(-1.0, 1e-9));
      }
    }
  }

  SECTION("impossible target throws") {
    REQUIRE_ERROR_CODE(ctc_grad(uniform_rows(1, 3), "ab", kAB), errc::impossible_target);
  }
}

TEST_CASE("log-domain stability for long sequences") {
  // 500 frames of strongly peaked rows: every per-frame probability on the
  // target path is >= 1e-30-ish in product terms and the loss stays finite.
  const std::size_t frames = 500;
  logit_matrix y(frames, 3, 0.005);
  for (std::size_t t = 0; t < frames; ++t) {
    y(t, 2) = 0.99;  // blank-heavy
  }
  // Plant a few 'a'-heavy frames so the phrase has support.
  for (std::size_t t : {100u, 300u}) {
    y(t, 0) = 0.99;
    y(t, 1) = 0.005;
    y(t, 2) = 0.005;
  }
  const double loss = ctc_loss(y, "aa", kAB);
  REQUIRE(std::isfinite(loss));
  REQUIRE(loss > 0.0);
  const matrix g = ctc_grad(y, "aa", kAB);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t c = 0; c < 3; ++c) REQUIRE(std::isfinite(g(t, c)));
}

// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "advaudio/spectral.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

using namespace advaudio;

namespace {

waveform tone(double freq, double seconds, int rate, double amplitude) {
  waveform w;
  w.sample_rate = rate;
  const std::size_t n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t i = 0; i < n; ++i)
    w.samples.push_back(clip_to_i16(
        amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate)));
  return w;
}

waveform random_wave(std::size_t n, rng& r, int rate = 16000, int amplitude = 8000) {
  waveform w;
  w.sample_rate = rate;
  for (std::size_t i = 0; i < n; ++i)
    w.samples.push_back(static_cast<std::int16_t>(r.uniform_int(-amplitude, amplitude)));
  return w;
}

}  // namespace

TEST_CASE("fft of an impulse is flat") {
  const auto spec = fft({1.0, 0.0, 0.0, 0.0}, 4);
  for (const auto& c : spec) {
    REQUIRE_THAT(c.real(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(c.imag(), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("fft of a constant is pure DC") {
  const auto spec = fft({1.0, 1.0, 1.0, 1.0}, 4);
  REQUIRE_THAT(spec[0].real(), Catch::Matchers::WithinAbs(4.0, 1e-12));
  for (std::size_t k = 1; k < 4; ++k)
    REQUIRE_THAT(std::abs(spec[k]), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("fft rejects non-power-of-two lengths") {
  REQUIRE_ERROR_CODE(fft({1.0, 2.0, 3.0}, 3), errc::bad_length);
  REQUIRE_ERROR_CODE(fft({1.0}, 0), errc::bad_length);
}

TEST_CASE("fft matches the naive DFT for all sizes up to 256") {
  rng r(42);
  for (std::size_t n = 2; n <= 256; n <<= 1) {
    std::vector<double> x(n);
    for (auto& v : x) v = r.uniform(-1.0, 1.0);
    const auto fast = fft(x, n);
    const auto slow = oracles::naive_dft(x, n);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      num += std::norm(fast[k] - slow[k]);
      den += std::norm(slow[k]);
    }
    REQUIRE(std::sqrt(num / den) < 1e-9);
  }
}

TEST_CASE("Parseval identity holds to 1e-9 relative") {
  rng r(43);
  for (std::size_t n : {8u, 64u, 256u}) {
    std::vector<double> x(n);
    double time_energy = 0.0;
    for (auto& v : x) {
      v = r.uniform(-1.0, 1.0);
      time_energy += v * v;
    }
    const auto spec = fft(x, n);
    double freq_energy = 0.0;
    for (const auto& c : spec) freq_energy += std::norm(c);
    REQUIRE(oracles::rel_err(freq_energy, static_cast<double>(n) * time_energy) < 1e-9);
  }
}

TEST_CASE("stft geometry") {
  SECTION("320 zeros, frame 512, hop 320: one all-zero frame") {
    const waveform w{std::vector<std::int16_t>(320, 0), 16000};
    const spectrogram s = stft(w, 512, 320);
    REQUIRE(s.num_frames() == 1);
    REQUIRE(s.num_bins() == 257);
    for (const auto& c : s.frames[0]) REQUIRE(std::abs(c) == 0.0);
  }

  SECTION("length 640, hop 320: exactly two frames") {
    const waveform w{std::vector<std::int16_t>(640, 100), 16000};
    REQUIRE(stft(w, 512, 320).num_frames() == 2);
  }

  SECTION("1 kHz tone peaks at bin 32 in every frame") {
    const waveform w = tone(1000.0, 1.0, 16000, 8000.0);
    const spectrogram s = stft(w, 512, 256);
    for (const auto& frame : s.frames) {
      std::size_t peak = 0;
      for (std::size_t b = 1; b < frame.size(); ++b)
        if (std::abs(frame[b]) > std::abs(frame[peak])) peak = b;
      REQUIRE(peak == 32);  // round(1000 * 512 / 16000)
    }
  }

  SECTION("bad geometry is rejected") {
    const waveform w{std::vector<std::int16_t>(100, 1), 16000};
    REQUIRE_ERROR_CODE(stft(w, 500, 250), errc::bad_geometry);   // not a power of two
    REQUIRE_ERROR_CODE(stft(w, 512, 0), errc::bad_geometry);     // hop too small
    REQUIRE_ERROR_CODE(stft(w, 512, 1024), errc::bad_geometry);  // hop > frame
    REQUIRE_ERROR_CODE(stft(waveform{{}, 16000}, 512, 256), errc::bad_geometry);
  }
}

TEST_CASE("istft inverts stft on the interior") {
  SECTION("all-zero spectrogram gives silence") {
    const waveform w{std::vector<std::int16_t>(1024, 0), 16000};
    const waveform out = istft(stft(w, 512, 256));
    for (std::int16_t s : out.samples) REQUIRE(s == 0);
  }

  SECTION("random 1 s round trip, interior relative RMS < 1e-3") {
    rng r(20260809);
    const waveform w = random_wave(16000, r);
    const std::vector<double> x = to_real(w);
    const std::vector<double> y = istft_real(stft(w, 512, 256));
    REQUIRE(y.size() >= x.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 512; i + 512 < x.size(); ++i) {
      num += (y[i] - x[i]) * (y[i] - x[i]);
      den += x[i] * x[i];
    }
    REQUIRE(std::sqrt(num / den) < 1e-3);
  }

  SECTION("single frame synthesizes the normalized windowed segment") {
    rng r(5);
    const waveform w = random_wave(256, r);
    const spectrogram s = stft(w, 512, 256);
    REQUIRE(s.num_frames() == 1);
    const std::vector<double> y = istft_real(s);
    // One frame: accumulation holds window * x; normalization divides the
    // window back out wherever it is nonzero. Sample 0 has zero weight
    // under the periodic Hann window and synthesizes to zero.
    const std::vector<double> x = to_real(w);
    for (std::size_t i = 1; i < x.size(); ++i)
      REQUIRE_THAT(y[i], Catch::Matchers::WithinAbs(x[i], 1e-6));
    REQUIRE(y[0] == 0.0);
  }
}

TEST_CASE("power_spectrum") {
  SECTION("constant signal concentrates in bin 0") {
    const waveform w{std::vector<std::int16_t>(256, 1000), 16000};
    const auto p = power_spectrum(w);
    REQUIRE(p.size() == 129);
    for (std::size_t b = 1; b < p.size(); ++b) REQUIRE(p[0] > p[b]);
  }

  SECTION("two tones dominate at the predicted bins") {
    waveform w;
    w.sample_rate = 16000;
    for (int i = 0; i < 2048; ++i) {
      const double t = static_cast<double>(i);
      w.samples.push_back(clip_to_i16(
          6000.0 * std::sin(2.0 * std::numbers::pi * 1000.0 * t / 16000.0) +
          6000.0 * std::sin(2.0 * std::numbers::pi * 3000.0 * t / 16000.0)));
    }
    const auto p = power_spectrum(w);
    const std::size_t bin1 = 1000 * 2048 / 16000, bin2 = 3000 * 2048 / 16000;
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] > p[b]; });
    const std::vector<std::size_t> top = {std::min(order[0], order[1]),
                                          std::max(order[0], order[1])};
    REQUIRE(top == std::vector<std::size_t>{bin1, bin2});
  }

  SECTION("zero signal sits at the dB floor") {
    const waveform w{std::vector<std::int16_t>(64, 0), 16000};
    for (double v : power_spectrum(w)) REQUIRE(v == kPowerDbFloor);
  }
}

TEST_CASE("extract_features") {
  SECTION("one second yields exactly 50 frames of 257 features") {
    const waveform w = tone(440.0, 1.0, 16000, 5000.0);
    const feature_matrix f = extract_features(w);
    REQUIRE(f.rows() == 50);
    REQUIRE(f.cols() == 257);
  }

  SECTION("frame count is ceil(len / 320)") {
    for (std::size_t len : {1u, 319u, 320u, 321u, 640u, 641u}) {
      const waveform w{std::vector<std::int16_t>(len, 100), 16000};
      REQUIRE(extract_features(w).rows() == (len + 319) / 320);
    }
  }

  SECTION("silence maps every feature to the log floor") {
    const waveform w{std::vector<std::int16_t>(640, 0), 16000};
    const feature_matrix f = extract_features(w);
    for (std::size_t t = 0; t < f.rows(); ++t)
      for (std::size_t b = 0; b < f.cols(); ++b)
        REQUIRE_THAT(f(t, b), Catch::Matchers::WithinAbs(std::log(1e-10), 1e-12));
  }

  SECTION("doubling the amplitude shifts features by log 4") {
    rng r(11);
    std::vector<double> x(640), x2(640);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = r.uniform(-4000.0, 4000.0);
      x2[i] = 2.0 * x[i];
    }
    const feature_matrix f = extract_features_real(x);
    const feature_matrix g = extract_features_real(x2);
    for (std::size_t t = 0; t < f.rows(); ++t)
      for (std::size_t b = 0; b < f.cols(); ++b)
        REQUIRE_THAT(g(t, b) - f(t, b), Catch::Matchers::WithinAbs(std::log(4.0), 1e-6));
  }

  SECTION("wrong sample rate is rejected") {
    REQUIRE_ERROR_CODE(extract_features(waveform{{1, 2, 3}, 8000}), errc::wrong_rate);
  }
}

TEST_CASE("feature_gradient") {
  SECTION("zero upstream gives zero gradient") {
    rng r(3);
    const waveform w = random_wave(640, r);
    const matrix upstream(2, 257, 0.0);
    for (double g : feature_gradient(w, upstream)) REQUIRE(g == 0.0);
  }

  SECTION("shape mismatch is rejected") {
    rng r(4);
    const waveform w = random_wave(640, r);
    REQUIRE_ERROR_CODE(feature_gradient(w, matrix(3, 257, 0.0)), errc::shape_mismatch);
    REQUIRE_ERROR_CODE(feature_gradient(w, matrix(2, 128, 0.0)), errc::shape_mismatch);
  }

  SECTION("matches central finite differences at h = 1.0") {
    rng r(20260809);
    std::vector<double> x(960);
    for (auto& v : x) v = r.uniform(-6000.0, 6000.0);
    matrix upstream(3, 257);
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t b = 0; b < 257; ++b) upstream(t, b) = r.uniform(-1.0, 1.0);

    const std::vector<double> grad = feature_gradient_real(x, upstream);

    auto scalar_loss = [&](const std::vector<double>& xv) {
      const feature_matrix f = extract_features_real(xv);
      double acc = 0.0;
      for (std::size_t t = 0; t < f.rows(); ++t)
        for (std::size_t b = 0; b < f.cols(); ++b) acc += upstream(t, b) * f(t, b);
      return acc;
    };

    rng pick(99);
    for (int trial = 0; trial < 60; ++trial) {
      const auto i =
          static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(x.size()) - 1));
      std::vector<double> xp = x;
      const double fd = oracles::central_diff(
          [&](double v) {
            xp[i] = v;
            return scalar_loss(xp);
          },
          x[i], 1.0);
      if (std::abs(grad[i]) > 1e-8) REQUIRE(oracles::rel_err(fd, grad[i]) < 1e-3);
    }
  }

  SECTION("gradients never leak across frame boundaries") {
    rng r(6);
    const std::vector<double> x = to_real(random_wave(960, r));  // 3 frames
    matrix upstream(3, 257, 0.0);
    for (std::size_t b = 0; b < 257; ++b) upstream(1, b) = 1.0;  // frame 1 only
    const std::vector<double> grad = feature_gradient_real(x, upstream);
    for (std::size_t i = 0; i < 320; ++i) REQUIRE(grad[i] == 0.0);
    for (std::size_t i = 640; i < 960; ++i) REQUIRE(grad[i] == 0.0);
    double mid = 0.0;
    for (std::size_t i = 320; i < 640; ++i) mid += std::abs(grad[i]);
    REQUIRE(mid > 0.0);
  }
}

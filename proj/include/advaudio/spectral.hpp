// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "advaudio/audio_io.hpp"
#include "advaudio/error.hpp"
#include "advaudio/matrix.hpp"

namespace advaudio {

using cplx = std::complex<double>;

// Feature geometry: 50 frames per second at 16 kHz, i.e. 320-sample
// non-overlapping frames, zero-padded to a 512-point FFT.
inline constexpr int kFeatureRate = 16000;
inline constexpr int kFrameSamples = 320;
inline constexpr int kFftSize = 512;
inline constexpr int kFeatureDim = kFftSize / 2 + 1;  // 257 log-power bins
inline constexpr double kLogPowerFloor = 1e-10;

// Floor for power spectra exported in dB.
inline constexpr double kPowerDbFloor = -120.0;

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace detail {

// Iterative radix-2 Cooley-Tukey; size must be a power of two.
inline void fft_radix2(std::vector<cplx>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (invert ? 1.0 : -1.0);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (invert) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

inline std::vector<cplx> fft_complex(std::vector<cplx> a) {
  fft_radix2(a, false);
  return a;
}

inline std::vector<cplx> ifft_complex(std::vector<cplx> a) {
  fft_radix2(a, true);
  return a;
}

/// Periodic Hann window; sums to a constant under 50% overlap-add.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n)));
  return w;
}

}  // namespace detail

/// n-point DFT of a real vector (padded or truncated to n, a power of two).
inline std::vector<cplx> fft(const std::vector<double>& x, std::size_t n) {
  if (!is_pow2(n)) throw error(errc::bad_length, "FFT length must be a power of two");
  std::vector<cplx> a(n, cplx(0.0, 0.0));
  const std::size_t m = std::min(n, x.size());
  for (std::size_t i = 0; i < m; ++i) a[i] = cplx(x[i], 0.0);
  detail::fft_radix2(a, false);
  return a;
}

/// Complex STFT over non-negative frequency bins (frame_len/2 + 1 of them).
struct spectrogram {
  std::vector<std::vector<cplx>> frames;
  int frame_len = 0;
  int hop = 0;
  int sample_rate = 0;

  std::size_t num_frames() const { return frames.size(); }
  std::size_t num_bins() const { return static_cast<std::size_t>(frame_len / 2 + 1); }
};

inline spectrogram stft_real(const std::vector<double>& x, int frame_len, int hop,
                             int sample_rate) {
  if (frame_len < 2 || !is_pow2(static_cast<std::size_t>(frame_len)))
    throw error(errc::bad_geometry, "frame length must be a power of two >= 2");
  if (hop < 1 || hop > frame_len) throw error(errc::bad_geometry, "need 1 <= hop <= frame_len");
  if (x.empty()) throw error(errc::bad_geometry, "empty input");

  const std::size_t n = x.size();
  const std::size_t num_frames = (n + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop);
  const std::vector<double> window = detail::hann_window(static_cast<std::size_t>(frame_len));
  const std::size_t num_bins = static_cast<std::size_t>(frame_len / 2 + 1);

  spectrogram s;
  s.frame_len = frame_len;
  s.hop = hop;
  s.sample_rate = sample_rate;
  s.frames.reserve(num_frames);

  std::vector<cplx> buf(static_cast<std::size_t>(frame_len));
  for (std::size_t t = 0; t < num_frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(hop);
    for (std::size_t i = 0; i < static_cast<std::size_t>(frame_len); ++i) {
      const std::size_t j = start + i;
      buf[i] = cplx(j < n ? x[j] * window[i] : 0.0, 0.0);
    }
    detail::fft_radix2(buf, false);
    s.frames.emplace_back(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(num_bins));
  }
  return s;
}

inline spectrogram stft(const waveform& w, int frame_len, int hop) {
  return stft_real(to_real(w), frame_len, hop, w.sample_rate);
}

/// Overlap-add synthesis with window-sum normalization. Output length is
/// (num_frames - 1) * hop + frame_len; samples where the analysis window
/// sum vanishes (the very edges) come out as zero.
inline std::vector<double> istft_real(const spectrogram& s) {
  if (s.frames.empty()) throw error(errc::bad_geometry, "empty spectrogram");
  if (s.hop < 1 || s.hop > s.frame_len || !is_pow2(static_cast<std::size_t>(s.frame_len)))
    throw error(errc::bad_geometry, "invalid spectrogram geometry");
  const std::size_t frame_len = static_cast<std::size_t>(s.frame_len);
  const std::size_t num_bins = s.num_bins();
  const std::size_t out_len = (s.num_frames() - 1) * static_cast<std::size_t>(s.hop) + frame_len;
  const std::vector<double> window = detail::hann_window(frame_len);

  std::vector<double> acc(out_len, 0.0);
  std::vector<double> wsum(out_len, 0.0);
  std::vector<cplx> full(frame_len);
  for (std::size_t t = 0; t < s.num_frames(); ++t) {
    const auto& half = s.frames[t];
    if (half.size() != num_bins) throw error(errc::bad_geometry, "frame with wrong bin count");
    for (std::size_t b = 0; b < num_bins; ++b) full[b] = half[b];
    for (std::size_t b = num_bins; b < frame_len; ++b) full[b] = std::conj(half[frame_len - b]);
    const std::vector<cplx> seg = detail::ifft_complex(full);
    const std::size_t start = t * static_cast<std::size_t>(s.hop);
    for (std::size_t i = 0; i < frame_len; ++i) {
      acc[start + i] += seg[i].real();
      wsum[start + i] += window[i];
    }
  }
  for (std::size_t i = 0; i < out_len; ++i)
    acc[i] = wsum[i] > 1e-8 ? acc[i] / wsum[i] : 0.0;
  return acc;
}

inline waveform istft(const spectrogram& s) { return quantize(istft_real(s), s.sample_rate); }

/// Full-signal power spectrum in dB over non-negative bins, floored at
/// kPowerDbFloor. Pads the signal to the next power of two.
inline std::vector<double> power_spectrum(const waveform& w) {
  if (w.samples.empty()) return {};
  const std::size_t n = next_pow2(w.samples.size());
  const std::vector<cplx> spec = fft(to_real(w), n);
  std::vector<double> out(n / 2 + 1);
  for (std::size_t b = 0; b < out.size(); ++b) {
    const double p = std::norm(spec[b]);
    out[b] = p > 0.0 ? std::max(10.0 * std::log10(p), kPowerDbFloor) : kPowerDbFloor;
  }
  return out;
}

/// Log-power features on the real-valued relaxation of a 16 kHz signal:
/// one row per 320-sample frame, 257 entries of log(|FFT|^2 + floor).
inline feature_matrix extract_features_real(const std::vector<double>& x) {
  const std::size_t num_frames =
      (x.size() + static_cast<std::size_t>(kFrameSamples) - 1) / static_cast<std::size_t>(kFrameSamples);
  feature_matrix feats(num_frames, static_cast<std::size_t>(kFeatureDim));
  const std::vector<double> window = detail::hann_window(kFrameSamples);
  std::vector<cplx> buf(static_cast<std::size_t>(kFftSize));
  for (std::size_t t = 0; t < num_frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(kFrameSamples);
    for (std::size_t i = 0; i < static_cast<std::size_t>(kFftSize); ++i) {
      const std::size_t j = start + i;
      const bool in_frame = i < static_cast<std::size_t>(kFrameSamples) && j < x.size();
      buf[i] = cplx(in_frame ? x[j] * window[i] : 0.0, 0.0);
    }
    detail::fft_radix2(buf, false);
    for (std::size_t b = 0; b < static_cast<std::size_t>(kFeatureDim); ++b)
      feats(t, b) = std::log(std::norm(buf[b]) + kLogPowerFloor);
  }
  return feats;
}

inline feature_matrix extract_features(const waveform& w) {
  if (w.sample_rate != kFeatureRate)
    throw error(errc::wrong_rate, "features require a 16 kHz waveform");
  return extract_features_real(to_real(w));
}

/// Exact chain rule from d(loss)/d(features) back to d(loss)/d(samples):
/// through the log-power, the squared FFT magnitudes, the Hann window and
/// the framing. Defined on the real-valued relaxation.
inline std::vector<double> feature_gradient_real(const std::vector<double>& x,
                                                 const matrix& upstream) {
  const std::size_t num_frames =
      (x.size() + static_cast<std::size_t>(kFrameSamples) - 1) / static_cast<std::size_t>(kFrameSamples);
  if (upstream.rows() != num_frames || upstream.cols() != static_cast<std::size_t>(kFeatureDim))
    throw error(errc::shape_mismatch, "upstream shape does not match extract_features(x)");

  std::vector<double> grad(x.size(), 0.0);
  const std::vector<double> window = detail::hann_window(kFrameSamples);
  std::vector<cplx> buf(static_cast<std::size_t>(kFftSize));
  std::vector<cplx> coeff(static_cast<std::size_t>(kFftSize));
  for (std::size_t t = 0; t < num_frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(kFrameSamples);
    for (std::size_t i = 0; i < static_cast<std::size_t>(kFftSize); ++i) {
      const std::size_t j = start + i;
      const bool in_frame = i < static_cast<std::size_t>(kFrameSamples) && j < x.size();
      buf[i] = cplx(in_frame ? x[j] * window[i] : 0.0, 0.0);
    }
    detail::fft_radix2(buf, false);
    // d f_b / d V_b dotted with d V_b / d v_n: with g_b = upstream / (P_b + floor),
    // grad_v = 2 Re( DFT_n[ g_b * conj(V_b) ] ) over the retained bins.
    for (std::size_t b = 0; b < static_cast<std::size_t>(kFftSize); ++b) {
      if (b < static_cast<std::size_t>(kFeatureDim)) {
        const double g = upstream(t, b) / (std::norm(buf[b]) + kLogPowerFloor);
        coeff[b] = g * std::conj(buf[b]);
      } else {
        coeff[b] = cplx(0.0, 0.0);
      }
    }
    detail::fft_radix2(coeff, false);
    const std::size_t limit = std::min(static_cast<std::size_t>(kFrameSamples),
                                       x.size() - std::min(x.size(), start));
    for (std::size_t i = 0; i < limit; ++i)
      grad[start + i] = 2.0 * coeff[i].real() * window[i];
  }
  return grad;
}

inline std::vector<double> feature_gradient(const waveform& w, const matrix& upstream) {
  return feature_gradient_real(to_real(w), upstream);
}

}  // namespace advaudio

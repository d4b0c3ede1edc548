// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "advaudio/audio_io.hpp"
#include "advaudio/error.hpp"
#include "advaudio/matrix.hpp"
#include "advaudio/spectral.hpp"

namespace advaudio {

// Analysis geometry for the PCA pipeline: 50% overlap so the Hann windows
// satisfy the constant-overlap-add condition on synthesis.
inline constexpr int kPcaFrameLen = 512;
inline constexpr int kPcaHop = 256;

/// Eigendecomposition of a centered frame matrix, components sorted by
/// descending eigenvalue.
struct pca_basis {
  std::vector<double> mean;         // per-column mean of the fitted frames
  matrix components;                // dims x dims, column j = eigenvector j
  std::vector<double> eigenvalues;  // descending, clamped at zero

  std::size_t num_components() const { return eigenvalues.size(); }
};

enum class retention_mode { variance_fraction, component_fraction };

/// How much of the fitted signal to keep on reconstruction: a fraction of
/// explained variance, or a fraction of the component count.
struct retention_policy {
  retention_mode mode = retention_mode::variance_fraction;
  double p = 1.0;  // in (0, 1]
};

namespace detail {

// Cyclic Jacobi rotations on a symmetric matrix. Converges when the
// off-diagonal Frobenius norm falls below 1e-10 relative to the input's
// Frobenius norm (the absolute criterion is meaningless across scales).
inline void jacobi_eigen(matrix& a, matrix& v) {
  const std::size_t n = a.rows();
  v = matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double fro = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) fro += a(i, j) * a(i, j);
  fro = std::sqrt(fro);
  const double tol = 1e-10 * std::max(fro, 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) < tol) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < tol / static_cast<double>(n)) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }
}

}  // namespace detail

/// Fit PCA over a frame matrix (rows = observations). Covariance is the
/// 1/n-normalized outer product of the centered rows.
inline pca_basis fit_pca(const matrix& frames) {
  const std::size_t n = frames.rows(), d = frames.cols();
  if (n < 2) throw error(errc::too_few_rows, "PCA needs at least two observations");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (!std::isfinite(frames(i, j))) throw error(errc::non_finite, "non-finite frame entry");

  pca_basis basis;
  basis.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) basis.mean[j] += frames(i, j);
  for (double& m : basis.mean) m /= static_cast<double>(n);

  matrix cov(d, d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double ca = frames(i, a) - basis.mean[a];
      if (ca == 0.0) continue;
      for (std::size_t b = a; b < d; ++b)
        cov(a, b) += ca * (frames(i, b) - basis.mean[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n);
      cov(b, a) = cov(a, b);
    }

  matrix vecs;
  detail::jacobi_eigen(cov, vecs);

  // Sort by descending eigenvalue; ties keep original index order.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cov(a, a) > cov(b, b); });

  basis.eigenvalues.resize(d);
  basis.components = matrix(d, d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    basis.eigenvalues[j] = std::max(cov(order[j], order[j]), 0.0);
    for (std::size_t i = 0; i < d; ++i) basis.components(i, j) = vecs(i, order[j]);
  }
  return basis;
}

/// Component count for a retention policy. Variance mode returns the
/// smallest k whose cumulative explained variance reaches p; component
/// mode returns the nearest integer to p * num_components. Always >= 1.
inline std::size_t select_k(const pca_basis& basis, const retention_policy& policy) {
  const std::size_t n = basis.num_components();
  if (!(policy.p > 0.0 && policy.p <= 1.0)) throw error(errc::bad_k, "retention p must be in (0, 1]");
  if (n == 0) throw error(errc::bad_k, "empty basis");
  if (policy.mode == retention_mode::component_fraction) {
    const auto k = static_cast<std::size_t>(
        std::llround(policy.p * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
  }
  const double total = std::accumulate(basis.eigenvalues.begin(), basis.eigenvalues.end(), 0.0);
  if (total <= 0.0) return 1;  // degenerate: all variance already in the mean
  double cum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    cum += basis.eigenvalues[k - 1];
    if (cum >= policy.p * total) return k;
  }
  return n;
}

/// Project rows onto the first k components and back, restoring the mean.
inline matrix reconstruct(const matrix& frames, const pca_basis& basis, std::size_t k) {
  const std::size_t d = basis.num_components();
  if (frames.cols() != d) throw error(errc::shape_mismatch, "frame width != basis dimension");
  if (k < 1 || k > d) throw error(errc::bad_k, "k out of range");

  matrix out(frames.rows(), d, 0.0);
  std::vector<double> proj(k);
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        acc += (frames(r, i) - basis.mean[i]) * basis.components(i, j);
      proj[j] = acc;
    }
    for (std::size_t i = 0; i < d; ++i) {
      double acc = basis.mean[i];
      for (std::size_t j = 0; j < k; ++j) acc += proj[j] * basis.components(i, j);
      out(r, i) = acc;
    }
  }
  return out;
}

/// Black-box component-reduction attack: reconstruct the STFT magnitudes
/// from a reduced PCA basis, keep the original phase, resynthesize.
/// The signal is zero-padded one hop on each side internally so every
/// original sample sits in the constant-overlap-add interior.
inline waveform pca_attack(const waveform& w, const retention_policy& policy) {
  if (w.sample_rate != kFeatureRate)
    throw error(errc::wrong_rate, "PCA attack expects a 16 kHz waveform");
  const std::size_t len = w.samples.size();
  if (len <= static_cast<std::size_t>(kPcaHop))
    throw error(errc::too_short, "need at least two analysis frames");

  std::vector<double> padded(static_cast<std::size_t>(kPcaHop) + len +
                                 static_cast<std::size_t>(kPcaFrameLen),
                             0.0);
  for (std::size_t i = 0; i < len; ++i)
    padded[static_cast<std::size_t>(kPcaHop) + i] = static_cast<double>(w.samples[i]);

  spectrogram s = stft_real(padded, kPcaFrameLen, kPcaHop, w.sample_rate);
  const std::size_t frames = s.num_frames(), bins = s.num_bins();

  matrix mags(frames, bins);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t b = 0; b < bins; ++b) mags(t, b) = std::abs(s.frames[t][b]);

  const pca_basis basis = fit_pca(mags);
  std::size_t k = select_k(basis, policy);
  k = std::min(k, std::max<std::size_t>(frames - 1, 1));  // rank-deficient fit

  matrix recon = reconstruct(mags, basis, k);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double m = std::max(recon(t, b), 0.0);
      const cplx orig = s.frames[t][b];
      const double mag = std::abs(orig);
      // Keep the original phase; zero coefficients stay real.
      s.frames[t][b] = mag > 0.0 ? orig * (m / mag) : cplx(m, 0.0);
    }
  }

  const std::vector<double> synth = istft_real(s);
  std::vector<double> out(synth.begin() + kPcaHop, synth.begin() + kPcaHop + static_cast<std::ptrdiff_t>(len));
  return quantize(out, w.sample_rate);
}

}  // namespace advaudio

// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "advaudio/audio_io.hpp"
#include "advaudio/ctc.hpp"
#include "advaudio/error.hpp"
#include "advaudio/matrix.hpp"
#include "advaudio/rng.hpp"
#include "advaudio/spectral.hpp"

namespace advaudio {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

// Affine squash applied to the raw log-power features before the recurrence.
// Raw features span roughly [-23, +26] (silence floor to full-scale tone
// peak); centering mid-range keeps the tanh units out of saturation at init.
inline constexpr double kFeatureCenter = -5.0;
inline constexpr double kFeatureScale = 1.0 / 16.0;

inline constexpr std::size_t kDefaultHiddenDim = 64;

/// Single-layer tanh recurrence with an affine softmax readout; the
/// stand-in for a full speech-to-text network. Maps a feature matrix to
/// one probability row per frame.
struct acoustic_model {
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t out_dim = 0;  // alphabet size including blank
  matrix w_in;              // feature_dim x hidden
  matrix w_rec;             // hidden x hidden
  std::vector<double> b_h;  // hidden
  matrix w_out;             // hidden x out
  std::vector<double> b_out;

  static acoustic_model init(std::size_t feature_dim, std::size_t hidden_dim,
                             std::size_t out_dim, std::uint64_t seed) {
    acoustic_model m;
    m.feature_dim = feature_dim;
    m.hidden_dim = hidden_dim;
    m.out_dim = out_dim;
    m.w_in = matrix(feature_dim, hidden_dim);
    m.w_rec = matrix(hidden_dim, hidden_dim);
    m.b_h.assign(hidden_dim, 0.0);
    m.w_out = matrix(hidden_dim, out_dim);
    m.b_out.assign(out_dim, 0.0);
    rng r(seed);
    auto fill = [&r](double* p, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) p[i] = r.uniform(-0.08, 0.08);
    };
    fill(m.w_in.data(), feature_dim * hidden_dim);
    fill(m.w_rec.data(), hidden_dim * hidden_dim);
    fill(m.b_h.data(), hidden_dim);
    fill(m.w_out.data(), hidden_dim * out_dim);
    fill(m.b_out.data(), out_dim);
    return m;
  }
};

struct forward_cache {
  matrix normalized;  // T x feature_dim
  matrix hidden;      // T x hidden (post-tanh)
  logit_matrix probs;
};

inline forward_cache forward_with_cache(const acoustic_model& m, const feature_matrix& feats) {
  if (feats.cols() != m.feature_dim)
    throw error(errc::shape_mismatch, "feature dimension does not match model");
  const std::size_t frames = feats.rows(), hid = m.hidden_dim, out = m.out_dim;

  forward_cache c;
  c.normalized = matrix(frames, m.feature_dim);
  c.hidden = matrix(frames, hid);
  c.probs = logit_matrix(frames, out);

  std::vector<double> h(hid, 0.0), a(hid), o(out);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t d = 0; d < m.feature_dim; ++d)
      c.normalized(t, d) = (feats(t, d) - kFeatureCenter) * kFeatureScale;

    a.assign(hid, 0.0);
    const double* f = c.normalized.row(t);
    for (std::size_t d = 0; d < m.feature_dim; ++d) {
      const double fd = f[d];
      if (fd == 0.0) continue;
      const double* w = m.w_in.row(d);
      for (std::size_t j = 0; j < hid; ++j) a[j] += w[j] * fd;
    }
    for (std::size_t i = 0; i < hid; ++i) {
      const double hi = h[i];
      if (hi == 0.0) continue;
      const double* w = m.w_rec.row(i);
      for (std::size_t j = 0; j < hid; ++j) a[j] += w[j] * hi;
    }
    for (std::size_t j = 0; j < hid; ++j) h[j] = std::tanh(a[j] + m.b_h[j]);
    for (std::size_t j = 0; j < hid; ++j) c.hidden(t, j) = h[j];

    o = m.b_out;
    for (std::size_t i = 0; i < hid; ++i) {
      const double hi = h[i];
      const double* w = m.w_out.row(i);
      for (std::size_t k = 0; k < out; ++k) o[k] += w[k] * hi;
    }
    double peak = o[0];
    for (double v : o) peak = std::max(peak, v);
    double denom = 0.0;
    for (std::size_t k = 0; k < out; ++k) {
      o[k] = std::exp(o[k] - peak);
      denom += o[k];
    }
    for (std::size_t k = 0; k < out; ++k) c.probs(t, k) = o[k] / denom;
  }
  return c;
}

/// Per-frame probability rows over the alphabet; causal in the frame index.
inline logit_matrix forward(const acoustic_model& m, const feature_matrix& feats) {
  return forward_with_cache(m, feats).probs;
}

struct model_grads {
  matrix w_in, w_rec, w_out;
  std::vector<double> b_h, b_out;
  matrix d_features;  // T x feature_dim, gradient on the raw features

  double squared_weight_norm() const {
    auto acc = [](const double* p, std::size_t n) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
      return s;
    };
    return acc(w_in.data(), w_in.rows() * w_in.cols()) +
           acc(w_rec.data(), w_rec.rows() * w_rec.cols()) +
           acc(w_out.data(), w_out.rows() * w_out.cols()) +
           acc(b_h.data(), b_h.size()) + acc(b_out.data(), b_out.size());
  }
};

/// Backpropagation through time. `upstream` is d(loss)/d(probs); weight
/// gradient accumulation can be skipped when only the input gradient is
/// needed (the attack path).
inline model_grads backward_from_cache(const acoustic_model& m, const forward_cache& cache,
                                       const matrix& upstream, bool want_weight_grads = true) {
  const std::size_t frames = cache.probs.rows(), hid = m.hidden_dim, out = m.out_dim;
  if (upstream.rows() != frames || upstream.cols() != out)
    throw error(errc::shape_mismatch, "upstream shape does not match forward output");

  model_grads g;
  if (want_weight_grads) {
    g.w_in = matrix(m.feature_dim, hid);
    g.w_rec = matrix(hid, hid);
    g.w_out = matrix(hid, out);
    g.b_h.assign(hid, 0.0);
    g.b_out.assign(out, 0.0);
  }
  g.d_features = matrix(frames, m.feature_dim);

  std::vector<double> d_h_next(hid, 0.0);  // d(loss)/d(a_{t+1}), routed back through w_rec
  std::vector<double> d_o(out), d_h(hid), d_a(hid);
  for (std::size_t t = frames; t-- > 0;) {
    // Softmax jacobian: d_o = y .* (upstream - <upstream, y>).
    const double* y = cache.probs.row(t);
    const double* up = upstream.row(t);
    double dot = 0.0;
    for (std::size_t k = 0; k < out; ++k) dot += up[k] * y[k];
    for (std::size_t k = 0; k < out; ++k) d_o[k] = y[k] * (up[k] - dot);

    d_h.assign(hid, 0.0);
    for (std::size_t i = 0; i < hid; ++i) {
      const double* w = m.w_out.row(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < out; ++k) acc += w[k] * d_o[k];
      d_h[i] = acc;
    }
    for (std::size_t i = 0; i < hid; ++i) {
      const double* w = m.w_rec.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < hid; ++j) acc += w[j] * d_h_next[j];
      d_h[i] += acc;
    }
    const double* h = cache.hidden.row(t);
    for (std::size_t j = 0; j < hid; ++j) d_a[j] = d_h[j] * (1.0 - h[j] * h[j]);

    if (want_weight_grads) {
      const double* f = cache.normalized.row(t);
      for (std::size_t d = 0; d < m.feature_dim; ++d) {
        const double fd = f[d];
        if (fd == 0.0) continue;
        double* r = g.w_in.row(d);
        for (std::size_t j = 0; j < hid; ++j) r[j] += fd * d_a[j];
      }
      if (t > 0) {
        const double* hp = cache.hidden.row(t - 1);
        for (std::size_t i = 0; i < hid; ++i) {
          const double hi = hp[i];
          if (hi == 0.0) continue;
          double* r = g.w_rec.row(i);
          for (std::size_t j = 0; j < hid; ++j) r[j] += hi * d_a[j];
        }
      }
      for (std::size_t j = 0; j < hid; ++j) g.b_h[j] += d_a[j];
      for (std::size_t i = 0; i < hid; ++i) {
        const double hi = h[i];
        double* r = g.w_out.row(i);
        for (std::size_t k = 0; k < out; ++k) r[k] += hi * d_o[k];
      }
      for (std::size_t k = 0; k < out; ++k) g.b_out[k] += d_o[k];
    }

    double* df = g.d_features.row(t);
    for (std::size_t d = 0; d < m.feature_dim; ++d) {
      const double* w = m.w_in.row(d);
      double acc = 0.0;
      for (std::size_t j = 0; j < hid; ++j) acc += w[j] * d_a[j];
      df[d] = acc * kFeatureScale;  // chain through the input normalization
    }
    d_h_next = d_a;
  }
  return g;
}

inline model_grads backward(const acoustic_model& m, const feature_matrix& feats,
                            const matrix& upstream) {
  return backward_from_cache(m, forward_with_cache(m, feats), upstream);
}

/// One training/evaluation sample: audio plus its unaligned transcript.
struct utterance {
  waveform audio;
  phrase transcript;
};

// ---------------------------------------------------------------------------
// Synthetic corpus: each character is a 100 ms dual-tone signature, with
// 40 ms silence gaps, so a small recurrence can learn the task in minutes.
// ---------------------------------------------------------------------------

inline constexpr int kCharSamples = 1600;  // 100 ms at 16 kHz
inline constexpr int kGapSamples = 640;    // 40 ms
inline constexpr double kToneAmplitude = 6000.0;

/// The two tone frequencies assigned to a character index. Both land on
/// exact 512-point FFT bins (multiples of 31.25 Hz), distinct per character.
inline std::pair<double, double> char_tones(std::size_t index) {
  return {500.0 + 125.0 * static_cast<double>(index % 7),
          2000.0 + 250.0 * static_cast<double>(index / 7)};
}

inline void append_char_tone(std::vector<std::int16_t>& samples, std::size_t char_index) {
  const auto [f1, f2] = char_tones(char_index);
  const double w1 = 2.0 * std::numbers::pi * f1 / kFeatureRate;
  const double w2 = 2.0 * std::numbers::pi * f2 / kFeatureRate;
  constexpr int ramp = 80;  // 5 ms fade against boundary clicks
  for (int i = 0; i < kCharSamples; ++i) {
    double env = 1.0;
    if (i < ramp) env = static_cast<double>(i) / ramp;
    if (i >= kCharSamples - ramp) env = static_cast<double>(kCharSamples - 1 - i) / ramp;
    const double v = kToneAmplitude * env * (std::sin(w1 * i) + std::sin(w2 * i));
    samples.push_back(clip_to_i16(v));
  }
}

/// Deterministic synthetic corpus: n utterances of 2-8 random characters.
inline std::vector<utterance> synth_corpus(std::size_t n, std::uint64_t seed,
                                           const alphabet& ab = alphabet::standard()) {
  rng r(seed);
  std::vector<utterance> corpus;
  corpus.reserve(n);
  const std::size_t num_chars = ab.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto len = static_cast<std::size_t>(r.uniform_int(2, 8));
    utterance u;
    u.audio.sample_rate = kFeatureRate;
    u.audio.samples.reserve(len * kCharSamples + (len - 1) * kGapSamples);
    for (std::size_t c = 0; c < len; ++c) {
      const auto idx = static_cast<std::size_t>(
          r.uniform_int(0, static_cast<std::int64_t>(num_chars) - 1));
      u.transcript.push_back(ab.character(idx));
      if (c > 0) u.audio.samples.insert(u.audio.samples.end(), kGapSamples, 0);
      append_char_tone(u.audio.samples, idx);
    }
    corpus.push_back(std::move(u));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

inline constexpr double kGradClipNorm = 5.0;
// Step size decays as lr / (1 + epoch / kLrDecayEpochs): large early steps
// clear the all-blank plateau, small late ones settle the alignment.
inline constexpr double kLrDecayEpochs = 200.0;

struct train_config {
  std::size_t epochs = 30;
  double learning_rate = 0.1;
  std::size_t hidden_dim = kDefaultHiddenDim;
  std::uint64_t seed = 1;
};

struct train_result {
  acoustic_model model;
  std::vector<double> epoch_loss;  // mean ctc loss per epoch
};

/// Stochastic gradient descent on the mean CTC loss, one utterance per
/// step in a seed-shuffled order. Deterministic given the seed.
inline train_result train(const std::vector<utterance>& corpus, const train_config& cfg = {},
                          const alphabet& ab = alphabet::standard()) {
  if (corpus.empty()) throw error(errc::empty_campaign, "empty training corpus");
  std::vector<feature_matrix> feats;
  feats.reserve(corpus.size());
  for (const auto& u : corpus) feats.push_back(extract_features(u.audio));

  rng r(cfg.seed);
  acoustic_model m = acoustic_model::init(static_cast<std::size_t>(kFeatureDim),
                                          cfg.hidden_dim, ab.size(), r.next_u64());

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  train_result result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    r.shuffle(order);
    const double lr =
        cfg.learning_rate / (1.0 + static_cast<double>(epoch) / kLrDecayEpochs);
    double loss_sum = 0.0;
    for (const std::size_t idx : order) {
      const forward_cache cache = forward_with_cache(m, feats[idx]);
      const double loss = ctc_loss(cache.probs, corpus[idx].transcript, ab);
      if (!std::isfinite(loss)) throw error(errc::diverged_loss, "non-finite training loss");
      loss_sum += loss;

      const matrix up = ctc_grad(cache.probs, corpus[idx].transcript, ab);
      model_grads g = backward_from_cache(m, cache, up, true);

      const double norm = std::sqrt(g.squared_weight_norm());
      const double scale =
          norm > kGradClipNorm ? kGradClipNorm / norm : 1.0;
      const double step = lr * scale;
      auto apply = [step](double* w, const double* grad, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) w[i] -= step * grad[i];
      };
      apply(m.w_in.data(), g.w_in.data(), m.feature_dim * m.hidden_dim);
      apply(m.w_rec.data(), g.w_rec.data(), m.hidden_dim * m.hidden_dim);
      apply(m.b_h.data(), g.b_h.data(), m.hidden_dim);
      apply(m.w_out.data(), g.w_out.data(), m.hidden_dim * m.out_dim);
      apply(m.b_out.data(), g.b_out.data(), m.out_dim);
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(corpus.size()));
  }
  result.model = std::move(m);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned self-describing binary, little-endian f64 payload.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'A', 'D', 'V', 'A', 'U', 'D', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const acoustic_model& m, const std::string& path,
                            const alphabet& ab = alphabet::standard()) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw error(errc::io_failure, "cannot open " + path + " for writing");

  auto put_u32 = [&f](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_f64s = [&f](const double* p, std::size_t n) {
    f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  };

  f.write(kCheckpointMagic, 8);
  put_u32(kCheckpointVersion);
  std::string chars;
  for (std::size_t i = 0; i + 1 < ab.size(); ++i) chars.push_back(ab.character(i));
  put_u32(static_cast<std::uint32_t>(chars.size()));
  f.write(chars.data(), static_cast<std::streamsize>(chars.size()));
  put_u32(static_cast<std::uint32_t>(kFeatureRate));
  put_u32(static_cast<std::uint32_t>(kFrameSamples));
  put_u32(static_cast<std::uint32_t>(kFftSize));
  put_u32(static_cast<std::uint32_t>(m.feature_dim));
  put_u32(static_cast<std::uint32_t>(m.hidden_dim));
  put_u32(static_cast<std::uint32_t>(m.out_dim));
  put_f64s(m.w_in.data(), m.feature_dim * m.hidden_dim);
  put_f64s(m.w_rec.data(), m.hidden_dim * m.hidden_dim);
  put_f64s(m.b_h.data(), m.hidden_dim);
  put_f64s(m.w_out.data(), m.hidden_dim * m.out_dim);
  put_f64s(m.b_out.data(), m.out_dim);
  if (!f) throw error(errc::io_failure, "short write to " + path);
}

inline acoustic_model load_checkpoint(const std::string& path,
                                      const alphabet& ab = alphabet::standard()) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw error(errc::io_failure, "cannot open " + path);

  auto need = [&f, &path](char* dst, std::size_t n) {
    f.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f.gcount()) != n)
      throw error(errc::corrupt_shape, path + " ends before the declared payload");
  };
  auto get_u32 = [&need]() {
    std::uint32_t v = 0;
    need(reinterpret_cast<char*>(&v), 4);
    return v;
  };

  char magic[8];
  need(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw error(errc::version_mismatch, path + " is not an advaudio checkpoint");
  if (get_u32() != kCheckpointVersion)
    throw error(errc::version_mismatch, "unsupported checkpoint version");

  const std::uint32_t chars_len = get_u32();
  if (chars_len > 4096) throw error(errc::corrupt_shape, "implausible alphabet length");
  std::string chars(chars_len, '\0');
  need(chars.data(), chars_len);
  std::string expected;
  for (std::size_t i = 0; i + 1 < ab.size(); ++i) expected.push_back(ab.character(i));
  if (chars != expected) throw error(errc::corrupt_shape, "checkpoint alphabet mismatch");

  const std::uint32_t rate = get_u32(), frame = get_u32(), fft_size = get_u32();
  if (rate != kFeatureRate || frame != kFrameSamples || fft_size != kFftSize)
    throw error(errc::corrupt_shape, "checkpoint feature geometry mismatch");

  acoustic_model m;
  m.feature_dim = get_u32();
  m.hidden_dim = get_u32();
  m.out_dim = get_u32();
  if (m.feature_dim != static_cast<std::size_t>(kFeatureDim) || m.hidden_dim == 0 ||
      m.hidden_dim > 65536 || m.out_dim != ab.size())
    throw error(errc::corrupt_shape, "checkpoint dimensions are inconsistent");

  m.w_in = matrix(m.feature_dim, m.hidden_dim);
  m.w_rec = matrix(m.hidden_dim, m.hidden_dim);
  m.b_h.assign(m.hidden_dim, 0.0);
  m.w_out = matrix(m.hidden_dim, m.out_dim);
  m.b_out.assign(m.out_dim, 0.0);
  auto get_f64s = [&need](double* p, std::size_t n) {
    need(reinterpret_cast<char*>(p), n * sizeof(double));
  };
  get_f64s(m.w_in.data(), m.feature_dim * m.hidden_dim);
  get_f64s(m.w_rec.data(), m.hidden_dim * m.hidden_dim);
  get_f64s(m.b_h.data(), m.hidden_dim);
  get_f64s(m.w_out.data(), m.hidden_dim * m.out_dim);
  get_f64s(m.b_out.data(), m.out_dim);
  if (f.peek() != std::ifstream::traits_type::eof())
    throw error(errc::corrupt_shape, path + " has trailing bytes");
  return m;
}

}  // namespace advaudio

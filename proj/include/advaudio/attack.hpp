// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "advaudio/audio_io.hpp"
#include "advaudio/ctc.hpp"
#include "advaudio/decode.hpp"
#include "advaudio/error.hpp"
#include "advaudio/model.hpp"
#include "advaudio/spectral.hpp"

namespace advaudio {

struct attack_config {
  std::size_t max_iterations = 5000;
  double learning_rate = 10.0;  // step size in sample units per iteration
  phrase target;
  std::size_t success_check_interval = 50;
  std::size_t beam_width = kDefaultBeamWidth;
  std::uint64_t seed = 0;
};

struct attack_result {
  waveform adversarial;
  bool success = false;
  std::size_t iterations_used = 0;
  double distortion = kNegInfDb;  // dB vs the input; +inf when the input is silent
  phrase decoded;
  std::vector<double> loss_trace;  // best-so-far loss per iteration
};

namespace detail {

inline phrase decode_quantized(const acoustic_model& m, const waveform& w,
                               std::size_t beam_width, const alphabet& ab) {
  return beam_search_decode(forward(m, extract_features(w)), beam_width, ab).text;
}

inline double attack_distortion(const waveform& original, const waveform& adversarial) {
  try {
    return distortion_db(original, adversarial);
  } catch (const error& e) {
    if (e.code() != errc::silent_input) throw;
    // A silent carrier has no level to compare against; any perturbation
    // is infinitely louder than it.
    return original.samples == adversarial.samples
               ? kNegInfDb
               : std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/// Gradient-descent attack on the waveform: minimize the CTC loss of the
/// target phrase, stepping the real-valued relaxation by learning_rate
/// sample units (infinity-norm-normalized gradient) per iteration, and
/// checking the quantized waveform's beam decode every
/// success_check_interval iterations. The first successful (or the final)
/// quantized waveform is returned.
inline attack_result targeted_attack(const acoustic_model& m, const waveform& x,
                                     const attack_config& cfg,
                                     const alphabet& ab = alphabet::standard()) {
  if (x.sample_rate != kFeatureRate)
    throw error(errc::wrong_rate, "attack expects a 16 kHz waveform");
  if (!ab.valid_phrase(cfg.target))
    throw error(errc::infeasible_target, "target contains characters outside the alphabet");
  const std::size_t frames =
      (x.samples.size() + static_cast<std::size_t>(kFrameSamples) - 1) /
      static_cast<std::size_t>(kFrameSamples);
  if (frames == 0 || min_alignment_frames(cfg.target) > frames)
    throw error(errc::infeasible_target, "target needs more frames than the waveform has");

  attack_result result;
  result.adversarial = x;
  result.decoded = detail::decode_quantized(m, x, cfg.beam_width, ab);
  if (result.decoded == cfg.target) {
    result.success = true;
    result.iterations_used = 0;
    result.distortion = kNegInfDb;
    return result;
  }

  std::vector<double> x_real = to_real(x);
  double best_loss = std::numeric_limits<double>::infinity();
  const std::size_t interval = std::max<std::size_t>(cfg.success_check_interval, 1);

  for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
    const feature_matrix feats = extract_features_real(x_real);
    const forward_cache cache = forward_with_cache(m, feats);
    const double loss = ctc_loss(cache.probs, cfg.target, ab);
    best_loss = std::min(best_loss, loss);
    result.loss_trace.push_back(best_loss);

    const matrix up = ctc_grad(cache.probs, cfg.target, ab);
    const model_grads g = backward_from_cache(m, cache, up, /*want_weight_grads=*/false);
    const std::vector<double> grad = feature_gradient_real(x_real, g.d_features);

    double peak = 0.0;
    for (double v : grad) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
      const double step = cfg.learning_rate / peak;
      for (std::size_t i = 0; i < x_real.size(); ++i) {
        x_real[i] -= step * grad[i];
        x_real[i] = std::clamp(x_real[i], -32768.0, 32767.0);
      }
    }

    if (iter % interval == 0 || iter == cfg.max_iterations) {
      const waveform cand = quantize(x_real, x.sample_rate);
      const phrase decoded = detail::decode_quantized(m, cand, cfg.beam_width, ab);
      result.adversarial = cand;
      result.decoded = decoded;
      result.iterations_used = iter;
      if (decoded == cfg.target) {
        result.success = true;
        break;
      }
    }
  }
  result.iterations_used = result.success ? result.iterations_used : cfg.max_iterations;
  result.distortion = detail::attack_distortion(x, result.adversarial);
  return result;
}

/// Hide speech: drive the transcription to the empty phrase.
inline attack_result silence_attack(const acoustic_model& m, const waveform& x,
                                    attack_config cfg, const alphabet& ab = alphabet::standard()) {
  cfg.target.clear();
  return targeted_attack(m, x, cfg, ab);
}

/// Plant a target phrase inside an arbitrary carrier (music, noise, tones).
/// Same procedure as targeted_attack; a named entry point so reports can
/// tag the scenario.
inline attack_result embed_in_carrier(const acoustic_model& m, const waveform& carrier,
                                      const attack_config& cfg,
                                      const alphabet& ab = alphabet::standard()) {
  return targeted_attack(m, carrier, cfg, ab);
}

}  // namespace advaudio

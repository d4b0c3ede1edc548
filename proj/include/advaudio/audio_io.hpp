// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "advaudio/error.hpp"

namespace advaudio {

/// PCM audio signal: signed 16-bit samples at a fixed rate.
struct waveform {
  std::vector<std::int16_t> samples;
  int sample_rate = 0;

  bool operator==(const waveform&) const = default;
};

/// Sentinel returned by distortion_db when the perturbation is all-zero.
inline constexpr double kNegInfDb = -std::numeric_limits<double>::infinity();

inline std::vector<double> to_real(const waveform& w) {
  return std::vector<double>(w.samples.begin(), w.samples.end());
}

inline std::int16_t clip_to_i16(double v) {
  const double r = std::llround(v);
  if (r > 32767.0) return 32767;
  if (r < -32768.0) return -32768;
  return static_cast<std::int16_t>(r);
}

/// Round and clip a real-valued signal back into a 16-bit waveform.
inline waveform quantize(const std::vector<double>& x, int sample_rate) {
  waveform w;
  w.sample_rate = sample_rate;
  w.samples.reserve(x.size());
  for (double v : x) w.samples.push_back(clip_to_i16(v));
  return w;
}

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(static_cast<std::uint32_t>(p[0]) |
                                    (static_cast<std::uint32_t>(p[1]) << 8));
}

}  // namespace detail

/// Read a RIFF/WAVE file. Accepts PCM, 16 bits/sample, mono only.
inline waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw error(errc::io_failure, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw error(errc::not_wav, path + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  int sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const char* id = bytes.data() + pos;
    const std::uint32_t chunk_size = detail::get_u32(p + pos + 4);
    pos += 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16 || pos + 16 > n)
        throw error(errc::truncated, "fmt chunk shorter than declared");
      const std::uint16_t audio_format = detail::get_u16(p + pos);
      const std::uint16_t channels = detail::get_u16(p + pos + 2);
      const std::uint32_t rate = detail::get_u32(p + pos + 4);
      const std::uint16_t bits = detail::get_u16(p + pos + 14);
      if (audio_format != 1) throw error(errc::unsupported_format, "not PCM");
      if (channels != 1) throw error(errc::unsupported_format, "not mono");
      if (bits != 16) throw error(errc::unsupported_format, "not 16-bit");
      if (rate == 0) throw error(errc::unsupported_format, "zero sample rate");
      sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw error(errc::not_wav, "data chunk precedes fmt chunk");
      if (pos + chunk_size > n)
        throw error(errc::truncated, "data chunk declares more bytes than the file holds");
      waveform w;
      w.sample_rate = sample_rate;
      w.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const std::uint16_t u = detail::get_u16(p + pos + 2 * i);
        w.samples[i] = static_cast<std::int16_t>(u);
      }
      return w;
    }
    pos += chunk_size + (chunk_size & 1);  // RIFF chunks are word-aligned
  }
  if (pos > n) throw error(errc::truncated, "chunk extends past end of file");
  throw error(errc::not_wav, "no data chunk found");
}

/// Write the canonical 44-byte-header PCM WAV. Round-trips bit-exactly.
inline void write_wav(const waveform& w, const std::string& path) {
  const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_size);
  out.append("RIFF");
  detail::put_u32(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);  // PCM
  detail::put_u16(out, 1);  // mono
  detail::put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  detail::put_u16(out, 2);   // block align
  detail::put_u16(out, 16);  // bits per sample
  out.append("data");
  detail::put_u32(out, data_size);
  for (std::int16_t s : w.samples) detail::put_u16(out, static_cast<std::uint16_t>(s));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw error(errc::io_failure, "cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw error(errc::io_failure, "short write to " + path);
}

/// Peak level in dB: 20*log10(max |sample|).
inline double db_level(const waveform& w) {
  std::int32_t peak = 0;
  for (std::int16_t s : w.samples) peak = std::max(peak, std::abs(static_cast<std::int32_t>(s)));
  if (peak == 0) throw error(errc::silent_input, "all samples are zero");
  return 20.0 * std::log10(static_cast<double>(peak));
}

/// dB of the perturbation relative to the original: dB(adv - orig) - dB(orig).
/// Negative when the perturbation peak is quieter than the signal peak.
/// All-zero perturbations map to kNegInfDb so reports can sort by distortion.
inline double distortion_db(const waveform& original, const waveform& adversarial) {
  if (original.samples.size() != adversarial.samples.size() ||
      original.sample_rate != adversarial.sample_rate)
    throw error(errc::length_mismatch, "waveforms differ in length or rate");
  // Widened arithmetic: the difference of two int16 streams needs 17 bits.
  std::int32_t peak = 0;
  for (std::size_t i = 0; i < original.samples.size(); ++i) {
    const std::int32_t d = static_cast<std::int32_t>(adversarial.samples[i]) -
                           static_cast<std::int32_t>(original.samples[i]);
    peak = std::max(peak, std::abs(d));
  }
  const double orig_db = db_level(original);  // throws silent_input if silent
  if (peak == 0) return kNegInfDb;
  return 20.0 * std::log10(static_cast<double>(peak)) - orig_db;
}

/// Linear-interpolation resampler. Output length is floor(len * target / source).
inline waveform resample_linear(const waveform& w, int target_rate) {
  if (target_rate <= 0) throw error(errc::unsupported_format, "target rate must be positive");
  if (w.sample_rate == target_rate) return w;
  waveform out;
  out.sample_rate = target_rate;
  if (w.samples.empty()) return out;
  const std::size_t n = w.samples.size();
  const std::size_t out_len = static_cast<std::size_t>(
      (static_cast<unsigned long long>(n) * static_cast<unsigned long long>(target_rate)) /
      static_cast<unsigned long long>(w.sample_rate));
  out.samples.reserve(out_len);
  const double step = static_cast<double>(w.sample_rate) / static_cast<double>(target_rate);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * step;
    std::size_t i0 = static_cast<std::size_t>(pos);
    if (i0 >= n - 1) {
      out.samples.push_back(w.samples[n - 1]);
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    const double v = static_cast<double>(w.samples[i0]) * (1.0 - frac) +
                     static_cast<double>(w.samples[i0 + 1]) * frac;
    out.samples.push_back(clip_to_i16(v));
  }
  return out;
}

}  // namespace advaudio

// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "advaudio/attack.hpp"
#include "advaudio/audio_io.hpp"
#include "advaudio/decode.hpp"
#include "advaudio/error.hpp"
#include "advaudio/metrics.hpp"
#include "advaudio/model.hpp"
#include "advaudio/pca.hpp"

namespace advaudio {

// Retention sweep points for the black-box study.
inline const std::vector<double> kDefaultRetentions = {0.10, 0.35, 0.65, 0.80, 0.95};

enum class scenario_kind { pca_attack, whitebox, silence, carrier, defense };

inline const char* to_string(scenario_kind s) {
  switch (s) {
    case scenario_kind::pca_attack: return "pca_attack";
    case scenario_kind::whitebox: return "whitebox";
    case scenario_kind::silence: return "silence";
    case scenario_kind::carrier: return "carrier";
    case scenario_kind::defense: return "defense";
  }
  return "unknown";
}

/// One experiment outcome. CSV reports carry exactly the fields below in
/// declaration order; wall-clock time appears only in JSON so the CSV is
/// byte-reproducible across runs.
struct report_row {
  std::string input_id;
  scenario_kind scenario = scenario_kind::pca_attack;
  std::optional<double> retention_p;
  std::optional<phrase> target;
  phrase decoded;
  double similarity = 0.0;
  std::size_t edit_distance = 0;
  double normalized_edit_distance = 0.0;
  double distortion_db = kNegInfDb;
  bool success = false;
  std::optional<std::size_t> iterations;
  double wall_time_s = 0.0;

  // Sidecar data (JSON only): lets a defense run re-load a campaign.
  phrase ground_truth;
  std::string orig_wav;
  std::string adv_wav;
  std::string error_message;  // non-empty marks a captured row failure

  bool failed() const { return !error_message.empty(); }
  bool operator==(const report_row&) const = default;
};

/// A named input for batch runs.
struct harness_input {
  std::string id;
  waveform audio;
  phrase transcript;
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (n == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Normalized edit distance with the both-empty case mapped to 0 (a
/// silence row that succeeded has nothing left to compare).
inline double safe_normalized_edit(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 0.0;
  return normalized_edit_distance(a, b);
}

inline bool row_order(const report_row& a, const report_row& b) {
  if (a.input_id != b.input_id) return a.input_id < b.input_id;
  if (a.scenario != b.scenario) return static_cast<int>(a.scenario) < static_cast<int>(b.scenario);
  const double pa = a.retention_p.value_or(-1.0), pb = b.retention_p.value_or(-1.0);
  return pa < pb;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PCA retention sweep
// ---------------------------------------------------------------------------

struct sweep_point {
  double retention = 0.0;
  double mean_similarity = 0.0;
  double mean_edit_distance = 0.0;
};

struct sweep_result {
  std::vector<report_row> rows;
  std::vector<sweep_point> curve;  // one aggregate per retention value
};

/// For every (input, retention) pair: PCA-attack the audio, transcribe it
/// with the model, and score the transcript against the ground truth.
/// Row-level errors are captured, not fatal.
inline sweep_result run_pca_sweep(const acoustic_model& m, const std::vector<harness_input>& inputs,
                                  const std::vector<double>& retentions = kDefaultRetentions,
                                  retention_mode mode = retention_mode::variance_fraction,
                                  std::size_t beam_width = kDefaultBeamWidth,
                                  std::size_t workers = 1,
                                  const alphabet& ab = alphabet::standard()) {
  if (inputs.empty()) throw error(errc::empty_campaign, "sweep needs at least one input");
  if (retentions.empty()) throw error(errc::empty_campaign, "sweep needs at least one retention");

  sweep_result result;
  result.rows.resize(inputs.size() * retentions.size());
  detail::parallel_for(result.rows.size(), workers, [&](std::size_t task) {
    const harness_input& in = inputs[task / retentions.size()];
    const double p = retentions[task % retentions.size()];
    report_row& row = result.rows[task];
    row.input_id = in.id;
    row.scenario = scenario_kind::pca_attack;
    row.retention_p = p;
    row.ground_truth = in.transcript;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const waveform adv = pca_attack(in.audio, retention_policy{mode, p});
      row.decoded = detail::decode_quantized(m, adv, beam_width, ab);
      row.similarity = similarity(row.decoded, in.transcript);
      row.edit_distance = edit_distance(row.decoded, in.transcript);
      row.normalized_edit_distance = detail::safe_normalized_edit(row.decoded, in.transcript);
      row.distortion_db = distortion_db(in.audio, adv);
      row.success = row.decoded != in.transcript;  // adversarial success = misclassification
    } catch (const std::exception& e) {
      row.error_message = e.what();
    }
    row.wall_time_s = detail::seconds_since(t0);
  });
  std::sort(result.rows.begin(), result.rows.end(), detail::row_order);

  for (const double p : retentions) {
    sweep_point pt;
    pt.retention = p;
    std::size_t count = 0;
    for (const auto& row : result.rows) {
      if (row.failed() || !row.retention_p || *row.retention_p != p) continue;
      pt.mean_similarity += row.similarity;
      pt.mean_edit_distance += static_cast<double>(row.edit_distance);
      ++count;
    }
    if (count > 0) {
      pt.mean_similarity /= static_cast<double>(count);
      pt.mean_edit_distance /= static_cast<double>(count);
    }
    result.curve.push_back(pt);
  }
  std::sort(result.curve.begin(), result.curve.end(),
            [](const sweep_point& a, const sweep_point& b) { return a.retention < b.retention; });
  return result;
}

// ---------------------------------------------------------------------------
// White-box campaigns
// ---------------------------------------------------------------------------

struct campaign_result {
  std::vector<report_row> rows;
  std::vector<attack_result> attacks;  // parallel to rows (empty entry on failure)
  std::size_t successes = 0;
  double mean_abs_distortion_db = 0.0;  // over successful rows with finite distortion
};

/// Run one attack per input toward a fixed target (or toward silence, or
/// into a carrier, depending on `kind`). Attack metrics score the decode
/// against the target; the ground truth rides along for defense runs.
inline campaign_result run_whitebox_campaign(const acoustic_model& m,
                                             const std::vector<harness_input>& inputs,
                                             const attack_config& cfg,
                                             scenario_kind kind = scenario_kind::whitebox,
                                             std::size_t workers = 1,
                                             const alphabet& ab = alphabet::standard()) {
  if (inputs.empty()) throw error(errc::empty_campaign, "campaign needs at least one input");

  campaign_result result;
  result.rows.resize(inputs.size());
  result.attacks.resize(inputs.size());
  detail::parallel_for(inputs.size(), workers, [&](std::size_t i) {
    const harness_input& in = inputs[i];
    report_row& row = result.rows[i];
    row.input_id = in.id;
    row.scenario = kind;
    row.target = cfg.target;
    row.ground_truth = in.transcript;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      attack_result ar = kind == scenario_kind::silence ? silence_attack(m, in.audio, cfg, ab)
                                                        : targeted_attack(m, in.audio, cfg, ab);
      row.decoded = ar.decoded;
      row.similarity = similarity(ar.decoded, cfg.target);
      row.edit_distance = edit_distance(ar.decoded, cfg.target);
      row.normalized_edit_distance = detail::safe_normalized_edit(ar.decoded, cfg.target);
      row.distortion_db = ar.distortion;
      row.success = ar.success;
      row.iterations = ar.iterations_used;
      result.attacks[i] = std::move(ar);
    } catch (const std::exception& e) {
      row.error_message = e.what();
    }
    row.wall_time_s = detail::seconds_since(t0);
  });

  std::size_t finite = 0;
  for (const auto& row : result.rows) {
    if (row.failed() || !row.success) continue;
    ++result.successes;
    if (std::isfinite(row.distortion_db)) {
      result.mean_abs_distortion_db += std::abs(row.distortion_db);
      ++finite;
    }
  }
  if (finite > 0) result.mean_abs_distortion_db /= static_cast<double>(finite);

  // Stable input order: one row per input, already index-aligned; sort both
  // containers together by the row key.
  std::vector<std::size_t> order(result.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::row_order(result.rows[a], result.rows[b]);
  });
  std::vector<report_row> rows;
  std::vector<attack_result> attacks;
  rows.reserve(order.size());
  attacks.reserve(order.size());
  for (std::size_t i : order) {
    rows.push_back(std::move(result.rows[i]));
    attacks.push_back(std::move(result.attacks[i]));
  }
  result.rows = std::move(rows);
  result.attacks = std::move(attacks);
  return result;
}

// ---------------------------------------------------------------------------
// PCA as a defense
// ---------------------------------------------------------------------------

struct defense_input {
  std::string id;
  waveform adversarial;
  phrase ground_truth;  // the transcript the defense hopes to recover
};

struct defense_result {
  std::vector<report_row> rows;
  double recovery_rate = 0.0;  // fraction of rows whose decode == ground truth
};

/// Apply the PCA reconstruction as a purported denoiser to previously
/// crafted adversarial audio. A row counts as recovered only when the
/// defended decode equals the original ground truth exactly.
inline defense_result run_defense_eval(const acoustic_model& m,
                                       const std::vector<defense_input>& inputs,
                                       double retention_p,
                                       std::size_t beam_width = kDefaultBeamWidth,
                                       std::size_t workers = 1,
                                       const alphabet& ab = alphabet::standard()) {
  if (inputs.empty()) throw error(errc::empty_campaign, "defense run needs at least one input");

  defense_result result;
  result.rows.resize(inputs.size());
  detail::parallel_for(inputs.size(), workers, [&](std::size_t i) {
    const defense_input& in = inputs[i];
    report_row& row = result.rows[i];
    row.input_id = in.id;
    row.scenario = scenario_kind::defense;
    row.retention_p = retention_p;
    row.target = in.ground_truth;  // the recovery target
    row.ground_truth = in.ground_truth;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const waveform defended =
          pca_attack(in.adversarial, retention_policy{retention_mode::variance_fraction, retention_p});
      row.decoded = detail::decode_quantized(m, defended, beam_width, ab);
      row.similarity = similarity(row.decoded, in.ground_truth);
      row.edit_distance = edit_distance(row.decoded, in.ground_truth);
      row.normalized_edit_distance = detail::safe_normalized_edit(row.decoded, in.ground_truth);
      row.distortion_db = distortion_db(in.adversarial, defended);  // the defense's footprint
      row.success = row.decoded == in.ground_truth;                 // recovered
    } catch (const std::exception& e) {
      row.error_message = e.what();
    }
    row.wall_time_s = detail::seconds_since(t0);
  });
  std::sort(result.rows.begin(), result.rows.end(), detail::row_order);

  std::size_t ok = 0, recovered = 0;
  for (const auto& row : result.rows) {
    if (row.failed()) continue;
    ++ok;
    if (row.success) ++recovered;
  }
  result.recovery_rate = ok > 0 ? static_cast<double>(recovered) / static_cast<double>(ok) : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

enum class report_format { csv, json };

inline const char* kReportCsvHeader =
    "input_id,scenario,retention_p,target,decoded,similarity,edit_distance,"
    "normalized_edit_distance,distortion_db,success,iterations,wall_time_s";

namespace detail {

inline std::string fmt_double(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string csv_distortion(double v) {
  if (v == kNegInfDb) return "-inf";
  if (std::isinf(v)) return "inf";
  return fmt_double(v, "%.4f");
}

}  // namespace detail

inline nlohmann::json row_to_json(const report_row& row) {
  nlohmann::json j;
  j["input_id"] = row.input_id;
  j["scenario"] = to_string(row.scenario);
  if (row.retention_p) j["retention_p"] = *row.retention_p;
  if (row.target) j["target"] = *row.target;
  j["decoded"] = row.decoded;
  j["similarity"] = row.similarity;
  j["edit_distance"] = row.edit_distance;
  j["normalized_edit_distance"] = row.normalized_edit_distance;
  if (std::isfinite(row.distortion_db)) {
    j["distortion_db"] = row.distortion_db;
  } else {
    j["distortion_db"] = nullptr;
    j["zero_perturbation"] = row.distortion_db == kNegInfDb;
  }
  j["success"] = row.success;
  if (row.iterations) j["iterations"] = *row.iterations;
  j["wall_time_s"] = row.wall_time_s;
  if (!row.ground_truth.empty()) j["ground_truth"] = row.ground_truth;
  if (!row.orig_wav.empty()) j["orig_wav"] = row.orig_wav;
  if (!row.adv_wav.empty()) j["adv_wav"] = row.adv_wav;
  if (!row.error_message.empty()) j["error"] = row.error_message;
  return j;
}

inline report_row row_from_json(const nlohmann::json& j) {
  report_row row;
  row.input_id = j.at("input_id").get<std::string>();
  const std::string sc = j.at("scenario").get<std::string>();
  for (scenario_kind k : {scenario_kind::pca_attack, scenario_kind::whitebox,
                          scenario_kind::silence, scenario_kind::carrier, scenario_kind::defense})
    if (sc == to_string(k)) row.scenario = k;
  if (j.contains("retention_p")) row.retention_p = j["retention_p"].get<double>();
  if (j.contains("target")) row.target = j["target"].get<std::string>();
  row.decoded = j.at("decoded").get<std::string>();
  row.similarity = j.at("similarity").get<double>();
  row.edit_distance = j.at("edit_distance").get<std::size_t>();
  row.normalized_edit_distance = j.at("normalized_edit_distance").get<double>();
  if (j.at("distortion_db").is_null()) {
    row.distortion_db = j.value("zero_perturbation", true)
                            ? kNegInfDb
                            : std::numeric_limits<double>::infinity();
  } else {
    row.distortion_db = j.at("distortion_db").get<double>();
  }
  row.success = j.at("success").get<bool>();
  if (j.contains("iterations")) row.iterations = j["iterations"].get<std::size_t>();
  row.wall_time_s = j.at("wall_time_s").get<double>();
  row.ground_truth = j.value("ground_truth", "");
  row.orig_wav = j.value("orig_wav", "");
  row.adv_wav = j.value("adv_wav", "");
  row.error_message = j.value("error", "");
  return row;
}

/// Write rows as CSV (fixed column order, byte-reproducible) or as a JSON
/// array of row objects (includes wall times and sidecar paths).
inline void emit_report(const std::vector<report_row>& rows, report_format format,
                        const std::string& path) {
  if (rows.empty()) throw error(errc::empty_campaign, "refusing to write an empty report");
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw error(errc::io_failure, "cannot open " + path + " for writing");

  if (format == report_format::csv) {
    f << kReportCsvHeader << '\n';
    for (const auto& row : rows) {
      f << row.input_id << ',' << to_string(row.scenario) << ',';
      if (row.retention_p) f << detail::fmt_double(*row.retention_p, "%.6g");
      f << ',';
      if (row.target) f << *row.target;
      f << ',' << row.decoded << ',' << detail::fmt_double(row.similarity, "%.6f") << ','
        << row.edit_distance << ',' << detail::fmt_double(row.normalized_edit_distance, "%.6f")
        << ',' << detail::csv_distortion(row.distortion_db) << ','
        << (row.success ? "true" : "false") << ',';
      if (row.iterations) f << *row.iterations;
      // wall_time_s stays blank in CSV: re-runs must be byte-identical.
      f << ',' << '\n';
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) arr.push_back(row_to_json(row));
    f << arr.dump(2) << '\n';
  }
  if (!f) throw error(errc::io_failure, "short write to " + path);
}

inline std::vector<report_row> load_report_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw error(errc::io_failure, "cannot open " + path);
  nlohmann::json arr = nlohmann::json::parse(f);
  std::vector<report_row> rows;
  rows.reserve(arr.size());
  for (const auto& j : arr) rows.push_back(row_from_json(j));
  return rows;
}

/// Plot data for the similarity and edit-distance curves over the
/// retention sweep, one CSV each.
inline void emit_sweep_curves(const std::vector<sweep_point>& curve, const std::string& prefix) {
  {
    std::ofstream f(prefix + "_similarity_vs_retention.csv", std::ios::trunc);
    if (!f) throw error(errc::io_failure, "cannot write sweep curve");
    f << "retention_pct,mean_similarity\n";
    for (const auto& pt : curve)
      f << detail::fmt_double(pt.retention * 100.0, "%.6g") << ','
        << detail::fmt_double(pt.mean_similarity, "%.6f") << '\n';
  }
  {
    std::ofstream f(prefix + "_edit_distance_vs_retention.csv", std::ios::trunc);
    if (!f) throw error(errc::io_failure, "cannot write sweep curve");
    f << "retention_pct,mean_edit_distance\n";
    for (const auto& pt : curve)
      f << detail::fmt_double(pt.retention * 100.0, "%.6g") << ','
        << detail::fmt_double(pt.mean_edit_distance, "%.6f") << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic carrier
// ---------------------------------------------------------------------------

/// A deterministic chord-progression "music" carrier for embedding
/// experiments: triads over a repeating four-chord progression.
inline waveform make_chord_carrier(double seconds, std::uint64_t seed) {
  static const double roots[4] = {220.0, 174.61, 196.0, 146.83};  // A F G D progression
  rng r(seed);
  const std::size_t start = static_cast<std::size_t>(r.uniform_int(0, 3));
  const std::size_t len = static_cast<std::size_t>(seconds * kFeatureRate);
  waveform w;
  w.sample_rate = kFeatureRate;
  w.samples.reserve(len);
  const std::size_t chord_len = kFeatureRate / 2;  // 0.5 s per chord
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t chord = (start + i / chord_len) % 4;
    const double root = roots[chord];
    const double t = static_cast<double>(i) / kFeatureRate;
    const double v = 4000.0 * std::sin(2.0 * std::numbers::pi * root * t) +
                     3200.0 * std::sin(2.0 * std::numbers::pi * root * 1.25 * t) +
                     2600.0 * std::sin(2.0 * std::numbers::pi * root * 1.5 * t);
    w.samples.push_back(clip_to_i16(v));
  }
  return w;
}

}  // namespace advaudio

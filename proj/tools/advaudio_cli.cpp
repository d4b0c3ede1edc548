// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Single-binary toolkit: train the toy acoustic model, transcribe audio,
// craft white-box and PCA attacks, run batch studies, and evaluate the
// PCA defense. Every run is deterministic given its flags; seeds are
// always flags, never wall-clock.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advaudio/advaudio.hpp"

namespace fs = std::filesystem;
using namespace advaudio;

namespace {

struct inputs_on_disk {
  std::vector<harness_input> inputs;
};

// inputs-dir layout: one <id>.wav per line of transcripts.tsv ("id<TAB>text").
inputs_on_disk load_inputs_dir(const std::string& dir) {
  const fs::path tsv = fs::path(dir) / "transcripts.tsv";
  std::ifstream f(tsv);
  if (!f) throw error(errc::io_failure, "cannot open " + tsv.string());
  inputs_on_disk out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw error(errc::io_failure, tsv.string() + ": line without a tab separator");
    harness_input in;
    in.id = line.substr(0, tab);
    in.transcript = line.substr(tab + 1);
    in.audio = read_wav((fs::path(dir) / (in.id + ".wav")).string());
    out.inputs.push_back(std::move(in));
  }
  if (out.inputs.empty()) throw error(errc::empty_campaign, dir + " lists no inputs");
  return out;
}

retention_mode parse_mode(const std::string& mode) {
  if (mode == "variance") return retention_mode::variance_fraction;
  if (mode == "components") return retention_mode::component_fraction;
  throw CLI::ValidationError("--retain-mode must be 'variance' or 'components'");
}

void write_reports(const std::vector<report_row>& rows, const std::string& prefix) {
  emit_report(rows, report_format::csv, prefix + ".csv");
  emit_report(rows, report_format::json, prefix + ".json");
}

int rows_exit_code(const std::vector<report_row>& rows) {
  int failures = 0;
  for (const auto& row : rows) {
    if (row.failed()) {
      ++failures;
      std::cerr << "row " << row.input_id << " failed: " << row.error_message << '\n';
    }
  }
  return failures == 0 ? 0 : 1;
}

void print_attack_summary(const attack_result& ar, const phrase& target) {
  std::cout << (ar.success ? "success" : "failure") << " after " << ar.iterations_used
            << " iterations\n";
  std::cout << "target:  \"" << target << "\"\n";
  std::cout << "decoded: \"" << ar.decoded << "\"\n";
  if (ar.distortion == kNegInfDb)
    std::cout << "distortion: -inf dB (zero perturbation)\n";
  else
    std::cout << "distortion: " << detail::fmt_double(ar.distortion, "%.4f") << " dB\n";
}

report_row attack_row(const std::string& id, scenario_kind kind, const attack_result& ar,
                      const phrase& target, const std::string& orig_path,
                      const std::string& adv_path, const phrase& truth) {
  report_row row;
  row.input_id = id;
  row.scenario = kind;
  row.target = target;
  row.decoded = ar.decoded;
  row.similarity = similarity(ar.decoded, target);
  row.edit_distance = edit_distance(ar.decoded, target);
  row.normalized_edit_distance = detail::safe_normalized_edit(ar.decoded, target);
  row.distortion_db = ar.distortion;
  row.success = ar.success;
  row.iterations = ar.iterations_used;
  row.ground_truth = truth;
  row.orig_wav = orig_path;
  row.adv_wav = adv_path;
  return row;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial audio toolkit for CTC speech-to-text models"};
  app.require_subcommand(1);

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train the toy acoustic model on a synthetic corpus");
  std::string train_out;
  std::size_t train_n = 200, train_epochs = 30, train_hidden = kDefaultHiddenDim;
  std::uint64_t train_seed = 7;
  double train_lr = 0.1;
  train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
  train_cmd->add_option("--n", train_n, "number of synthetic utterances")->capture_default_str();
  train_cmd->add_option("--seed", train_seed, "corpus and init seed")->capture_default_str();
  train_cmd->add_option("--epochs", train_epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--lr", train_lr, "learning rate")->capture_default_str();
  train_cmd->add_option("--hidden", train_hidden, "hidden units")->capture_default_str();

  // --- transcribe ----------------------------------------------------------
  auto* transcribe_cmd = app.add_subcommand("transcribe", "decode a waveform to text");
  std::string tr_model, tr_in;
  std::size_t tr_beam = kDefaultBeamWidth;
  transcribe_cmd->add_option("--model", tr_model, "checkpoint path")->required();
  transcribe_cmd->add_option("--in", tr_in, "input WAV (16 kHz mono PCM)")->required();
  transcribe_cmd->add_option("--beam-width", tr_beam, "beam width")->capture_default_str();

  // --- attack / silence ----------------------------------------------------
  std::string atk_model, atk_in, atk_out, atk_target;
  std::size_t atk_max_iter = 5000, atk_interval = 50, atk_beam = kDefaultBeamWidth;
  std::uint64_t atk_seed = 0;
  double atk_lr = 10.0;
  auto add_attack_flags = [&](CLI::App* cmd, bool with_target) {
    cmd->add_option("--model", atk_model, "checkpoint path")->required();
    cmd->add_option("--in", atk_in, "input WAV")->required();
    if (with_target) cmd->add_option("--target", atk_target, "target phrase")->required();
    cmd->add_option("--out", atk_out, "adversarial WAV output")->required();
    cmd->add_option("--max-iter", atk_max_iter, "iteration budget")->capture_default_str();
    cmd->add_option("--lr", atk_lr, "step size in sample units")->capture_default_str();
    cmd->add_option("--seed", atk_seed, "attack seed")->capture_default_str();
    cmd->add_option("--beam-width", atk_beam, "beam width for success checks")->capture_default_str();
    cmd->add_option("--check-interval", atk_interval, "iterations between decode checks")
        ->capture_default_str();
  };
  auto* attack_cmd = app.add_subcommand("attack", "targeted white-box attack on a waveform");
  add_attack_flags(attack_cmd, true);
  auto* silence_cmd = app.add_subcommand("silence", "attack toward the empty transcription");
  add_attack_flags(silence_cmd, false);

  // --- pca-attack ----------------------------------------------------------
  auto* pca_cmd = app.add_subcommand("pca-attack", "black-box PCA component-reduction attack");
  std::string pca_in, pca_out, pca_mode = "variance";
  double pca_retain = 0.95;
  pca_cmd->add_option("--in", pca_in, "input WAV (16 kHz mono PCM)")->required();
  pca_cmd->add_option("--out", pca_out, "output WAV")->required();
  pca_cmd->add_option("--retain", pca_retain, "retention fraction in (0,1]")->capture_default_str();
  pca_cmd->add_option("--retain-mode", pca_mode, "variance|components")->capture_default_str();

  // --- sweep ---------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "PCA retention sweep over a directory of inputs");
  std::string sw_model, sw_dir, sw_report, sw_mode = "variance";
  std::size_t sw_beam = kDefaultBeamWidth, sw_workers = 1;
  sweep_cmd->add_option("--model", sw_model, "checkpoint path")->required();
  sweep_cmd->add_option("--inputs-dir", sw_dir, "directory with transcripts.tsv + WAVs")->required();
  sweep_cmd->add_option("--out-report", sw_report, "report path prefix")->required();
  sweep_cmd->add_option("--retain-mode", sw_mode, "variance|components")->capture_default_str();
  sweep_cmd->add_option("--beam-width", sw_beam, "beam width")->capture_default_str();
  sweep_cmd->add_option("--workers", sw_workers, "parallel row workers")->capture_default_str();

  // --- campaign ------------------------------------------------------------
  auto* camp_cmd = app.add_subcommand("campaign", "white-box attack campaign over a directory");
  std::string cp_model, cp_dir, cp_report, cp_target, cp_adv_dir;
  std::size_t cp_max_iter = 5000, cp_interval = 50, cp_beam = kDefaultBeamWidth, cp_workers = 1;
  std::uint64_t cp_seed = 0;
  double cp_lr = 10.0;
  camp_cmd->add_option("--model", cp_model, "checkpoint path")->required();
  camp_cmd->add_option("--inputs-dir", cp_dir, "directory with transcripts.tsv + WAVs")->required();
  camp_cmd->add_option("--target", cp_target, "target phrase for every input")->required();
  camp_cmd->add_option("--out-report", cp_report, "report path prefix")->required();
  camp_cmd->add_option("--adv-dir", cp_adv_dir, "directory for adversarial WAVs (default <out-report>_adv)");
  camp_cmd->add_option("--max-iter", cp_max_iter, "iteration budget per attack")->capture_default_str();
  camp_cmd->add_option("--lr", cp_lr, "step size in sample units")->capture_default_str();
  camp_cmd->add_option("--seed", cp_seed, "attack seed")->capture_default_str();
  camp_cmd->add_option("--beam-width", cp_beam, "beam width")->capture_default_str();
  camp_cmd->add_option("--check-interval", cp_interval, "iterations between decode checks")
      ->capture_default_str();
  camp_cmd->add_option("--workers", cp_workers, "parallel attacks")->capture_default_str();

  // --- defend ----------------------------------------------------------------
  auto* def_cmd = app.add_subcommand("defend", "apply PCA as a defense to a campaign's outputs");
  std::string df_model, df_report, df_out;
  double df_retain = 0.95;
  std::size_t df_beam = kDefaultBeamWidth, df_workers = 1;
  def_cmd->add_option("--model", df_model, "checkpoint path")->required();
  def_cmd->add_option("--report", df_report, "campaign JSON report with stored adversarial WAVs")
      ->required();
  def_cmd->add_option("--retain", df_retain, "retention fraction in (0,1]")->capture_default_str();
  def_cmd->add_option("--out-report", df_out, "report path prefix (default <report>_defense)");
  def_cmd->add_option("--beam-width", df_beam, "beam width")->capture_default_str();
  def_cmd->add_option("--workers", df_workers, "parallel rows")->capture_default_str();

  // --- convert ---------------------------------------------------------------
  auto* conv_cmd = app.add_subcommand("convert", "resample a mono PCM WAV");
  std::string cv_in, cv_out;
  int cv_rate = 16000;
  conv_cmd->add_option("--in", cv_in, "input WAV")->required();
  conv_cmd->add_option("--out", cv_out, "output WAV")->required();
  conv_cmd->add_option("--rate", cv_rate, "target sample rate")->capture_default_str();

  // --- synth -----------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dual-tone corpus");
  std::string sy_dir;
  std::size_t sy_n = 10;
  std::uint64_t sy_seed = 7;
  synth_cmd->add_option("--n", sy_n, "number of utterances")->capture_default_str();
  synth_cmd->add_option("--seed", sy_seed, "corpus seed")->capture_default_str();
  synth_cmd->add_option("--out-dir", sy_dir, "output directory")->required();

  // --- spectrum ----------------------------------------------------------------
  auto* spec_cmd = app.add_subcommand("spectrum", "export a power spectrum as CSV (bin_hz,power_db)");
  std::string sp_in, sp_out;
  spec_cmd->add_option("--in", sp_in, "input WAV")->required();
  spec_cmd->add_option("--out", sp_out, "output CSV")->required();

  // --- report -----------------------------------------------------------------
  auto* rep_cmd = app.add_subcommand("report", "re-emit a JSON report as CSV and plot data");
  std::string rp_in, rp_prefix;
  rep_cmd->add_option("--in", rp_in, "JSON report")->required();
  rep_cmd->add_option("--out-prefix", rp_prefix, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) {
      const auto corpus = synth_corpus(train_n, train_seed);
      train_config cfg;
      cfg.epochs = train_epochs;
      cfg.learning_rate = train_lr;
      cfg.hidden_dim = train_hidden;
      cfg.seed = train_seed;
      const train_result tr = train(corpus, cfg);
      save_checkpoint(tr.model, train_out);
      std::cout << "trained on " << corpus.size() << " utterances for " << train_epochs
                << " epochs\n";
      std::cout << "loss: first " << detail::fmt_double(tr.epoch_loss.front(), "%.4f") << ", last "
                << detail::fmt_double(tr.epoch_loss.back(), "%.4f") << '\n';
      std::cout << "checkpoint written to " << train_out << '\n';
      return 0;
    }

    if (*transcribe_cmd) {
      const acoustic_model m = load_checkpoint(tr_model);
      const waveform w = read_wav(tr_in);
      const beam_result best = beam_search_decode(forward(m, extract_features(w)), tr_beam);
      std::cout << best.text << '\n';
      return 0;
    }

    if (*attack_cmd || *silence_cmd) {
      const acoustic_model m = load_checkpoint(atk_model);
      const waveform x = read_wav(atk_in);
      attack_config cfg;
      cfg.max_iterations = atk_max_iter;
      cfg.learning_rate = atk_lr;
      cfg.target = atk_target;
      cfg.success_check_interval = atk_interval;
      cfg.beam_width = atk_beam;
      cfg.seed = atk_seed;
      const bool is_silence = static_cast<bool>(*silence_cmd);
      const attack_result ar =
          is_silence ? silence_attack(m, x, cfg) : targeted_attack(m, x, cfg);
      write_wav(ar.adversarial, atk_out);
      print_attack_summary(ar, is_silence ? phrase{} : atk_target);
      const report_row row =
          attack_row(fs::path(atk_in).stem().string(),
                     is_silence ? scenario_kind::silence : scenario_kind::whitebox, ar,
                     is_silence ? phrase{} : atk_target, atk_in, atk_out, phrase{});
      emit_report({row}, report_format::json, atk_out + ".json");
      return 0;
    }

    if (*pca_cmd) {
      const waveform w = read_wav(pca_in);
      const waveform adv = pca_attack(w, retention_policy{parse_mode(pca_mode), pca_retain});
      write_wav(adv, pca_out);
      std::cout << "distortion: " << detail::csv_distortion(distortion_db(w, adv)) << " dB\n";
      return 0;
    }

    if (*sweep_cmd) {
      const acoustic_model m = load_checkpoint(sw_model);
      const auto disk = load_inputs_dir(sw_dir);
      const sweep_result res = run_pca_sweep(m, disk.inputs, kDefaultRetentions,
                                             parse_mode(sw_mode), sw_beam, sw_workers);
      write_reports(res.rows, sw_report);
      emit_sweep_curves(res.curve, sw_report);
      for (const auto& pt : res.curve)
        std::cout << "retention " << detail::fmt_double(pt.retention * 100.0, "%.0f")
                  << "%: mean similarity " << detail::fmt_double(pt.mean_similarity, "%.4f")
                  << ", mean edit distance " << detail::fmt_double(pt.mean_edit_distance, "%.2f")
                  << '\n';
      return rows_exit_code(res.rows);
    }

    if (*camp_cmd) {
      const acoustic_model m = load_checkpoint(cp_model);
      const auto disk = load_inputs_dir(cp_dir);
      attack_config cfg;
      cfg.max_iterations = cp_max_iter;
      cfg.learning_rate = cp_lr;
      cfg.target = cp_target;
      cfg.success_check_interval = cp_interval;
      cfg.beam_width = cp_beam;
      cfg.seed = cp_seed;
      campaign_result res =
          run_whitebox_campaign(m, disk.inputs, cfg, scenario_kind::whitebox, cp_workers);

      const fs::path adv_dir = cp_adv_dir.empty() ? fs::path(cp_report + "_adv") : fs::path(cp_adv_dir);
      fs::create_directories(adv_dir);
      for (std::size_t i = 0; i < res.rows.size(); ++i) {
        if (res.rows[i].failed()) continue;
        const fs::path adv_path = adv_dir / (res.rows[i].input_id + "_adv.wav");
        write_wav(res.attacks[i].adversarial, adv_path.string());
        res.rows[i].adv_wav = adv_path.string();
        res.rows[i].orig_wav = (fs::path(cp_dir) / (res.rows[i].input_id + ".wav")).string();
      }
      write_reports(res.rows, cp_report);
      std::cout << res.successes << "/" << res.rows.size() << " attacks succeeded\n";
      std::cout << "mean |distortion| over successes: "
                << detail::fmt_double(res.mean_abs_distortion_db, "%.4f") << " dB\n";
      return rows_exit_code(res.rows);
    }

    if (*def_cmd) {
      const acoustic_model m = load_checkpoint(df_model);
      const auto rows = load_report_json(df_report);
      std::vector<defense_input> inputs;
      for (const auto& row : rows) {
        if (row.failed() || !row.success || row.adv_wav.empty()) continue;
        defense_input in;
        in.id = row.input_id;
        in.adversarial = read_wav(row.adv_wav);
        in.ground_truth = row.ground_truth;
        inputs.push_back(std::move(in));
      }
      if (inputs.empty())
        throw error(errc::empty_campaign, "report has no successful rows with stored WAVs");
      const defense_result res = run_defense_eval(m, inputs, df_retain, df_beam, df_workers);
      const std::string prefix = df_out.empty() ? df_report + "_defense" : df_out;
      write_reports(res.rows, prefix);
      nlohmann::json summary;
      summary["retention_p"] = df_retain;
      summary["rows"] = res.rows.size();
      summary["recovery_rate"] = res.recovery_rate;
      std::ofstream sf(prefix + "_summary.json", std::ios::trunc);
      sf << summary.dump(2) << '\n';
      std::cout << "recovery_rate: " << detail::fmt_double(res.recovery_rate, "%.4f") << '\n';
      return rows_exit_code(res.rows);
    }

    if (*conv_cmd) {
      const waveform w = read_wav(cv_in);
      write_wav(resample_linear(w, cv_rate), cv_out);
      return 0;
    }

    if (*synth_cmd) {
      fs::create_directories(sy_dir);
      const auto corpus = synth_corpus(sy_n, sy_seed);
      std::ofstream tsv(fs::path(sy_dir) / "transcripts.tsv", std::ios::trunc);
      if (!tsv) throw error(errc::io_failure, "cannot write transcripts.tsv");
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "utt_%04zu", i);
        write_wav(corpus[i].audio, (fs::path(sy_dir) / (std::string(name) + ".wav")).string());
        tsv << name << '\t' << corpus[i].transcript << '\n';
      }
      std::cout << "wrote " << corpus.size() << " utterances to " << sy_dir << '\n';
      return 0;
    }

    if (*spec_cmd) {
      const waveform w = read_wav(sp_in);
      const std::vector<double> power = power_spectrum(w);
      const std::size_t n = next_pow2(w.samples.size());
      std::ofstream f(sp_out, std::ios::trunc);
      if (!f) throw error(errc::io_failure, "cannot open " + sp_out + " for writing");
      f << "bin_hz,power_db\n";
      for (std::size_t b = 0; b < power.size(); ++b)
        f << detail::fmt_double(static_cast<double>(b) * w.sample_rate / static_cast<double>(n),
                                "%.4f")
          << ',' << detail::fmt_double(power[b], "%.4f") << '\n';
      return 0;
    }

    if (*rep_cmd) {
      const auto rows = load_report_json(rp_in);
      emit_report(rows, report_format::csv, rp_prefix + ".csv");
      std::vector<sweep_point> curve;
      for (const auto& row : rows) {
        if (row.failed() || !row.retention_p || row.scenario != scenario_kind::pca_attack) continue;
        auto it = std::find_if(curve.begin(), curve.end(), [&](const sweep_point& pt) {
          return pt.retention == *row.retention_p;
        });
        if (it == curve.end()) {
          curve.push_back({*row.retention_p, 0.0, 0.0});
          it = curve.end() - 1;
        }
        it->mean_similarity += row.similarity;
        it->mean_edit_distance += static_cast<double>(row.edit_distance);
      }
      if (!curve.empty()) {
        for (auto& pt : curve) {
          std::size_t count = 0;
          for (const auto& row : rows)
            if (!row.failed() && row.retention_p && *row.retention_p == pt.retention &&
                row.scenario == scenario_kind::pca_attack)
              ++count;
          pt.mean_similarity /= static_cast<double>(count);
          pt.mean_edit_distance /= static_cast<double>(count);
        }
        std::sort(curve.begin(), curve.end(),
                  [](const sweep_point& a, const sweep_point& b) { return a.retention < b.retention; });
        emit_sweep_curves(curve, rp_prefix);
      }
      return 0;
    }
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

// Copyright 2026 the advaudio authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace advaudio {

enum class errc {
  // audio_io
  not_wav,
  unsupported_format,
  truncated,
  io_failure,
  silent_input,
  length_mismatch,
  // spectral
  bad_length,
  bad_geometry,
  wrong_rate,
  shape_mismatch,
  // pca
  too_few_rows,
  non_finite,
  bad_k,
  too_short,
  // ctc / decode
  too_large,
  impossible_target,
  // model
  diverged_loss,
  version_mismatch,
  corrupt_shape,
  // attack
  infeasible_target,
  // metrics
  both_empty,
  empty_reference,
  // harness
  empty_campaign,
};

inline const char* to_string(errc c) {
  switch (c) {
    case errc::not_wav: return "not_wav";
    case errc::unsupported_format: return "unsupported_format";
    case errc::truncated: return "truncated";
    case errc::io_failure: return "io_failure";
    case errc::silent_input: return "silent_input";
    case errc::length_mismatch: return "length_mismatch";
    case errc::bad_length: return "bad_length";
    case errc::bad_geometry: return "bad_geometry";
    case errc::wrong_rate: return "wrong_rate";
    case errc::shape_mismatch: return "shape_mismatch";
    case errc::too_few_rows: return "too_few_rows";
    case errc::non_finite: return "non_finite";
    case errc::bad_k: return "bad_k";
    case errc::too_short: return "too_short";
    case errc::too_large: return "too_large";
    case errc::impossible_target: return "impossible_target";
    case errc::diverged_loss: return "diverged_loss";
    case errc::version_mismatch: return "version_mismatch";
    case errc::corrupt_shape: return "corrupt_shape";
    case errc::infeasible_target: return "infeasible_target";
    case errc::both_empty: return "both_empty";
    case errc::empty_reference: return "empty_reference";
    case errc::empty_campaign: return "empty_campaign";
  }
  return "unknown";
}

/// Library-wide exception type; carries a machine-checkable code.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace advaudio

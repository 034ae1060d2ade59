#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>

#include "cvi/errors.hpp"

namespace cvi {

/// Anchor used by the span clipping step.
enum class ClipMode {
  kMinOfVTilde,  // min over states of the current unclipped estimate
  kMinOfVStar,   // oracle-supplied min over states of the optimal discounted value
};

inline std::string to_string(ClipMode mode) {
  return mode == ClipMode::kMinOfVTilde ? "min_of_vtilde" : "min_of_vstar";
}

inline ClipMode clip_mode_from_string(const std::string& text) {
  if (text == "min_of_vtilde") return ClipMode::kMinOfVTilde;
  if (text == "min_of_vstar") return ClipMode::kMinOfVStar;
  throw ConfigError("unknown clip_mode '" + text + "'");
}

/// Hyperparameters shared by both learners.
struct AlgoConfig {
  std::int64_t horizon = 1;
  double gamma = 0.0;
  double lambda = 1.0;
  double span_bound = 0.0;
  double bonus_factor = 0.0;
  double delta = 0.1;
  double c_beta = 1.0;
  std::uint64_t seed = 0;
  ClipMode clip_mode = ClipMode::kMinOfVTilde;
  /// Required when clip_mode is kMinOfVStar.
  std::optional<double> min_v_star;

  double value_cap() const { return 1.0 / (1.0 - gamma); }

  void validate() const {
    std::ostringstream err;
    if (horizon < 1) err << "horizon must be >= 1; ";
    if (!(gamma >= 0.0 && gamma < 1.0)) err << "gamma must lie in [0,1); ";
    if (!(lambda > 0.0)) err << "lambda must be positive; ";
    if (!(span_bound >= 0.0)) err << "span_bound must be nonnegative; ";
    if (!(bonus_factor >= 0.0)) err << "bonus_factor must be nonnegative; ";
    if (!(delta > 0.0 && delta < 1.0)) err << "delta must lie in (0,1); ";
    if (!(c_beta > 0.0)) err << "c_beta must be positive; ";
    if (clip_mode == ClipMode::kMinOfVStar && !min_v_star) err << "min_of_vstar clipping needs min_v_star; ";
    if (!err.str().empty()) throw ConfigError(err.str());
  }
};

}  // namespace cvi

#pragma once

#include <string>

#include "json.hpp"

#include "core/grid.hpp"
#include "core/model_types.hpp"
#include "core/phase_data.hpp"
#include "core/spline.hpp"

namespace cfm {

// JSON <-> config plumbing. Absent fields fall back to defaults; malformed
// or unknown-typed fields raise Parse errors naming the offending key.

nlohmann::json spline_to_json(const SplineConfig& cfg);
SplineConfig spline_from_json(const nlohmann::json& j);

nlohmann::json hyper_to_json(const Hyperparams& h);
Hyperparams hyper_from_json(const nlohmann::json& j);

nlohmann::json chain_to_json(const ChainConfig& c);
// Fields present in `j` override `base`; everything else is kept.
ChainConfig chain_from_json(const nlohmann::json& j, ChainConfig base = {});

nlohmann::json grid_to_json(const TimeGrid& g);
TimeGrid grid_from_json(const nlohmann::json& j);

struct SimulateSpec {
  size_t subjects = 10;
  size_t channels = 5;
  size_t times = 100;
  SplineConfig basis;
  Hyperparams hyper;
  SimulateOverrides fixed;
  uint64_t seed = 1;
};

nlohmann::json simulate_to_json(const SimulateSpec& spec);
SimulateSpec simulate_from_json(const nlohmann::json& j);

struct FitSpec {
  SplineConfig basis;
  Hyperparams hyper;
  ChainConfig chain;
};

nlohmann::json fit_to_json(const FitSpec& spec);
FitSpec fit_from_json(const nlohmann::json& j);

nlohmann::json parse_json_text(const std::string& text, const std::string& what);

}  // namespace cfm

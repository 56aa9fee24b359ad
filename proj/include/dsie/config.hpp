#pragma once

// JSON problem files.
//
// {
//   "schema": "dsie-config v1",
//   "omega": 376.99111843077515,                      optional, rad/s
//   "bases": {"v_base": 13200, "s_base": 1e7},        optional
//   "cable_types": {"500MCM": {"r_ohm_per_mi": 0.1558, "x_ohm_per_mi": 0.1927}},
//   "buses": [{"id": 1, "nominal_v": 13200}, ...],
//   "branches": [
//     {"name": "1-2", "from": 1, "to": 2, "length_ft": 3100, "cable": "500MCM"},
//     {"name": "x", "from": 3, "to": 4, "r_ohm": 0.01, "l_h": 1e-4}, ...],
//   "sensors": {"branches": ["1-2", ...], "buses": [1, 3, ...]},
//   "areas": [{"name": "area1", "branches": ["1-2", ...], "buses": [1, 2, ...]}, ...],
//   "noise": {"sigma2_u": 5e-4, "sigma2_x": 5e-4, "sigma2_q": 1e-4, "seed": 1},
//   "scenario": {
//     "start_time_s": 0.75, "duration_s": 1.0, "dt_s": 0.01,
//     "profiles": {"1": [{"start_s": 0.75, "d": 13200, "q": 0,
//                          "ramp_d": 0, "ramp_q": 0}], ...},
//     "events": [{"time_s": 0.8, "buses": [1, 2], "d": [...], "q": [...]}, ...]},
//   "attack": {"targets": [2, 3], "bias_d": [...], "bias_q": [...],
//              "start_step": 50, "end_step": 100, "scope": "stealth" | "enclosed"},
//   "loads": [{"bus": 1, "p_kw": 4866, "q_kvar": 3015}, ...],        metadata
//   "generators": [{"bus": 1, "r_ohm": 0.3, "l_mh": 7.8}, ...]       metadata
// }
//
// Cable reactances are per mile at 60 Hz. Ramps are in V/s. "areas",
// "attack", "loads" and "generators" may be omitted.

#include <filesystem>
#include <string>
#include <string_view>

#include "dsie/simulation.hpp"

namespace dsie {

inline constexpr std::string_view kConfigSchema = "dsie-config v1";

// Throws ConfigError with the offending key on malformed input; the
// resulting topology, layout and scenario are validated.
Preset parse_config(std::string_view text);
Preset load_config(const std::filesystem::path& path);

// Branches are written as explicit r_ohm / l_h; doubles round-trip exactly.
std::string dump_config(const Preset& problem);

// Named built-in problems. Currently only "potsdam13".
Preset builtin_preset(std::string_view name);

}  // namespace dsie

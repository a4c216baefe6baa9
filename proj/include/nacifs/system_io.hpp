#pragma once

// JSON configuration for systems.
//
//   {
//     "domain":  {"eta": 0.1, "gamma": 1.05},
//     "mode":    "explicit" | "periodic" | "seeded",
//     "prefix":  [[map, ...], ...],
//     "period":  [[map, ...], ...],
//     "seed":    7,
//     "generator": {...},          // seeded mode only, see SeedParams
//     "horizon": 64,
//     "degree_cap": 16
//   }
//
// with map = {"kind": "similarity"|"quadratic", "a": [re, im], "b": [re, im],
// "c": [re, im]}. Unknown keys are rejected.

#include <filesystem>

#include "json.hpp"
#include "nacifs/conformal.hpp"

namespace nacifs {

SystemSpec system_from_json(const nlohmann::json& doc, bool validate = true);
nlohmann::json system_to_json(const SystemSpec& system);

SystemSpec load_system(const std::filesystem::path& path, bool validate = true);
void save_system(const SystemSpec& system, const std::filesystem::path& path);

}  // namespace nacifs

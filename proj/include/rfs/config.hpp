#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfs/bayes_oracle.hpp"
#include "rfs/gridspace.hpp"
#include "rfs/processes.hpp"

namespace rfs {

struct NamedRegion {
  std::string name;
  Region region;
};

/// Largest grids and truncation orders the exact oracle is run at.
inline constexpr std::size_t kDefaultOracleOrder = 14;
inline constexpr std::size_t kOracleMaxCells = 6;
inline constexpr std::size_t kOracleMaxOrder = 16;

struct ScenarioConfig {
  Space state_space;
  Space measurement_space;
  std::size_t steps = 0;
  MotionModel motion;
  SensorModel sensor;
  ProcessModel initial;
  std::uint64_t seed = 0;
  bool oracle = false;
  std::size_t oracle_nmax = kDefaultOracleOrder;
  std::vector<NamedRegion> regions;

  /// Throws ConfigError on invalid models or when the oracle is requested beyond oracle scale.
  void validate() const;
};

Space grid_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const GridSpace& g);

/// A field given as a scalar (constant) or an array of per-cell values.
Field field_from_json(const nlohmann::json& j, const Space& space);

ProcessModel model_from_json(const nlohmann::json& j, const Space& space);
nlohmann::json model_to_json(const ProcessModel& m);

ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace rfs

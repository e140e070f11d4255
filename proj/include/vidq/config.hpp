#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "vidq/engine.hpp"
#include "vidq/scene.hpp"
#include "vidq/synthetic_oracle.hpp"

namespace vidq {

/// Everything a query run is configured by. The config file is one JSON
/// document with a format/version header and one section per component:
/// bandit, oracle, patterns, engine, noise, latency.
struct RunConfig {
  EngineConfig engine;
  NoiseModel noise;
  SimulatedLatency latency;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys and an unknown major
/// version are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const RunConfig& cfg);

nlohmann::json to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const nlohmann::json& j);
SceneSpec load_scene(const std::filesystem::path& path);

}  // namespace vidq

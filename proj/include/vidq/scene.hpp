#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vidq/core.hpp"
#include "vidq/dataset.hpp"

namespace vidq {

/// A path objects follow at constant speed.
struct Lane {
  std::vector<Point2> waypoints;
  double speed_min = 100.0;  // px/s
  double speed_max = 100.0;
};

struct ObjectClass {
  std::string label;
  double spawn_rate_per_min = 0.0;
  // Relative lane choice weights; empty means uniform.
  std::vector<double> lane_weights;
  // When set, the spawn rate is calibrated so this share of frames holds at
  // least one instance.
  std::optional<double> target_selectivity;
  double box_width = 48.0;
  double box_height = 32.0;
};

struct SceneSpec {
  std::string video_id = "synthetic";
  double duration_s = 600.0;
  int fps = 10;
  int width = 1280;
  int height = 720;
  std::vector<Lane> lanes;
  std::vector<ObjectClass> objects;
  // Spawns closer than this to the previous spawn in the same lane are dropped.
  double min_headway_s = 1.5;
  double max_spawn_rate_per_min = 600.0;
  double selectivity_tolerance = 0.01;
  std::uint64_t rng_seed = 0;
};

void check_scene(const SceneSpec& spec);

/// Five non-crossing lanes across a 1280x720 frame, each with a single
/// speed, so every object in a lane retraces the same timed path.
std::vector<Lane> default_lanes();

/// Three labelled classes targeting selectivities of roughly 0.03, 0.4
/// and 0.9.
SceneSpec default_scene(std::uint64_t seed);

/// Query class "white semi-truck" at the given selectivity over fixed
/// background traffic.
SceneSpec selectivity_preset_scene(double target, std::uint64_t seed);

/// Synthesizes ground-truth tracks and per-frame annotations. Deterministic
/// given the spec. Unreachable selectivity targets produce manifest warnings.
Dataset generate_scene(const SceneSpec& spec);

}  // namespace vidq

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vidq/config.hpp"

namespace vidq {

struct BenchOptions {
  std::vector<double> selectivities{0.03, 0.37, 0.89};
  std::string predicate = "white semi-truck";
  double duration_s = 600.0;
  int fps = 10;
  std::uint64_t scene_seed = 1;
  RunConfig run;  // engine, noise and simulated latency
};

/// Defaults for the stage-runtime sweep: per-call simulated model latency so
/// stage times reflect oracle work rather than bookkeeping.
BenchOptions default_bench_options();

struct BenchRow {
  double target_selectivity = 0.0;
  double realized_selectivity = 0.0;
  int frames_probed = 0;
  int confirmed_tracks = 0;
  std::map<std::string, double> stage_seconds;

  /// Everything after localization: detection, filtering and confirmation.
  double post_localization_seconds() const;
};

/// One selection query per preset scene.
std::vector<BenchRow> run_bench(const BenchOptions& opts);

/// Tab-separated table, one row per preset, stage columns in pipeline order.
std::string format_bench_table(const std::vector<BenchRow>& rows);

}  // namespace vidq

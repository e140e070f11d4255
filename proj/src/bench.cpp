#include "vidq/bench.hpp"

#include <cstdio>
#include <memory>

#include "vidq/engine.hpp"
#include "vidq/scene.hpp"
#include "vidq/synthetic_oracle.hpp"

namespace vidq {

BenchOptions default_bench_options() {
  BenchOptions o;
  o.run.noise = NoiseModel::perfect(0);
  o.run.latency.detect = std::chrono::microseconds(400);
  o.run.latency.filter = std::chrono::microseconds(100);
  o.run.latency.reid = std::chrono::microseconds(0);
  return o;
}

double BenchRow::post_localization_seconds() const {
  double total = 0.0;
  for (const char* s : {kStageDetection, kStageFiltering, kStageTrajectory}) {
    if (auto it = stage_seconds.find(s); it != stage_seconds.end()) total += it->second;
  }
  return total;
}

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  std::vector<BenchRow> rows;
  for (double target : opts.selectivities) {
    auto scene = selectivity_preset_scene(target, opts.scene_seed);
    scene.duration_s = opts.duration_s;
    scene.fps = opts.fps;
    scene.objects.front().label = opts.predicate;
    auto data = std::make_shared<const Dataset>(generate_scene(scene));
    SyntheticOracle oracle(data, opts.run.noise, opts.run.latency);
    const auto run = execute_query(data->meta, QuerySpec::selection(opts.predicate), oracle,
                                   opts.run.engine);
    BenchRow row;
    row.target_selectivity = target;
    if (auto it = data->realized_selectivity.find(opts.predicate);
        it != data->realized_selectivity.end()) {
      row.realized_selectivity = it->second;
    }
    row.frames_probed = int(run.probes.size());
    row.confirmed_tracks = int(run.tracks.size());
    row.stage_seconds = run.stage_seconds;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::string out =
      "selectivity\trealized\tframes_probed\ttracks\tsegment_localization\tdetection\t"
      "filtering\ttrajectory_extraction\n";
  char buf[256];
  for (const auto& r : rows) {
    auto stage = [&](const char* name) {
      auto it = r.stage_seconds.find(name);
      return it == r.stage_seconds.end() ? 0.0 : it->second;
    };
    std::snprintf(buf, sizeof buf, "%.2f\t%.4f\t%d\t%d\t%.3f\t%.3f\t%.3f\t%.3f\n",
                  r.target_selectivity, r.realized_selectivity, r.frames_probed,
                  r.confirmed_tracks, stage(kStageLocalization), stage(kStageDetection),
                  stage(kStageFiltering), stage(kStageTrajectory));
    out += buf;
  }
  return out;
}

}  // namespace vidq

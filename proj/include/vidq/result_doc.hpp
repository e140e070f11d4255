#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "vidq/config.hpp"
#include "vidq/core.hpp"
#include "vidq/engine.hpp"
#include "vidq/metrics.hpp"

namespace vidq {

/// One query run as written to disk. Lines after the header, in order:
///   spec, run (video, config hash, seeds, counts), result, metrics (optional),
///   timings. Only the timings line varies between identical runs.
struct ResultDocument {
  QuerySpec spec;
  std::string video_id;
  std::string config_hash;
  std::map<std::string, std::uint64_t> seeds;
  int confirmed_tracks = 0;
  int rejected_seeds = 0;
  int frames_probed = 0;
  bool degraded = false;
  QueryResult result;
  std::optional<EvalReport> metrics;
  std::map<std::string, double> stage_seconds;
};

inline constexpr const char* kResultFormat = "vidq.result";

/// Document for a finished run under `cfg`, without metrics.
ResultDocument make_result_document(const QueryRun& run, const VideoMeta& meta,
                                    const RunConfig& cfg);

std::string serialize_result(const ResultDocument& doc);
/// The serialized document minus its timings line.
std::string serialize_result_without_timings(const ResultDocument& doc);

void write_result(const ResultDocument& doc, const std::filesystem::path& path);
ResultDocument read_result(const std::filesystem::path& path);

}  // namespace vidq

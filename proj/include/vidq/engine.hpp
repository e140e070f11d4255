#pragma once

#include <map>
#include <string>
#include <vector>

#include "vidq/bandit.hpp"
#include "vidq/core.hpp"
#include "vidq/oracle.hpp"
#include "vidq/patterns.hpp"

namespace vidq {

struct EngineConfig {
  // Frames between probes inside a relevant segment; 0 means one second.
  FrameIndex scan_stride = 0;
  // Two detections in one frame overlapping above this IoU are one object.
  double dedup_iou = 0.5;
  // Selection also returns frames of seeds whose confirmation was rejected.
  bool selection_includes_rejected = true;
  // A new track whose span overlaps an existing one and whose seed ReID-matches
  // that track's seed extends the existing span instead of adding a track.
  bool merge_overlapping_tracks = true;
  BanditConfig bandit;
  OracleConfig oracle;
  PatternConfig patterns;
};

void check_config(const EngineConfig& cfg);
FrameIndex effective_scan_stride(const EngineConfig& cfg, const VideoMeta& meta);

// Stage names used in timing tables.
inline constexpr const char* kStageLocalization = "segment_localization";
inline constexpr const char* kStageDetection = "detection";
inline constexpr const char* kStageFiltering = "filtering";
inline constexpr const char* kStageTrajectory = "trajectory_extraction";

struct RejectedSeed {
  Detection detection;
  Rejection reason = Rejection::kNone;
};

struct QueryRun {
  QuerySpec spec;
  QueryResult result;
  LocalizationOutcome localization;
  std::vector<MotionPattern> patterns;
  std::vector<ConfirmedTrack> tracks;
  std::vector<RejectedSeed> rejected;
  // Probed frames with the detections on them that passed both stages.
  std::map<FrameIndex, std::vector<Detection>> probes;
  // Span-less mode, used when pattern initialization found no trajectories.
  bool degraded = false;
  std::map<std::string, double> stage_seconds;
};

/// Runs one query end to end: localize relevant segments, probe them, confirm
/// trajectories for new seeds and reduce to the requested result type.
/// `patterns` may carry a cached initialization; otherwise one is computed.
QueryRun execute_query(const VideoMeta& meta, const QuerySpec& spec,
                       DetectionOracle& oracle, const EngineConfig& cfg,
                       const std::vector<MotionPattern>* patterns = nullptr);

/// Number of confirmed spans covering each frame.
std::vector<int> span_coverage(const std::vector<ConfirmedTrack>& tracks,
                               FrameIndex frame_count);

}  // namespace vidq

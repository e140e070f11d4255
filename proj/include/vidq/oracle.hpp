#pragma once

#include <filesystem>
#include <vector>

#include "vidq/core.hpp"

namespace vidq {

struct OracleConfig {
  double stage1_threshold = 0.35;  // query-time detector cutoff
  double mining_threshold = 0.85;  // pseudo-label positive cutoff
  double filter_threshold = 0.5;   // semantic filter cutoff
  double reid_threshold = 0.6;
};

void check_config(const OracleConfig& cfg);

/// Two-stage detection contract: an open-vocabulary detector followed by a
/// per-video semantic filter, plus appearance similarity for re-identification.
///
/// Implementations must tolerate concurrent calls on distinct frames.
class DetectionOracle {
 public:
  virtual ~DetectionOracle() = default;

  /// Stage-1 candidates on one frame, unthresholded, filter_score absent.
  virtual std::vector<Detection> detect_candidates(FrameIndex frame,
                                                   const QuerySpec& spec) = 0;

  /// Annotates each detection with filter_score; order is preserved.
  virtual std::vector<Detection> semantic_filter(std::vector<Detection> detections,
                                                 const QuerySpec& spec) = 0;

  /// Symmetric appearance similarity in [0, 1].
  virtual double reid_similarity(const Detection& a, const Detection& b) = 0;

  /// Tracked object trajectories over frames [0, window). May be empty.
  virtual std::vector<Trajectory> init_trajectories(const VideoMeta& meta,
                                                    FrameIndex window) = 0;
};

/// Stage 1: candidates with det_confidence >= cfg.stage1_threshold.
std::vector<Detection> detect(DetectionOracle& oracle, FrameIndex frame,
                              const QuerySpec& spec, const OracleConfig& cfg);

bool passes_filter(const Detection& d, const OracleConfig& cfg);

/// detect + semantic_filter, keeping detections that pass both stages.
std::vector<Detection> detect_and_filter(DetectionOracle& oracle, FrameIndex frame,
                                         const QuerySpec& spec,
                                         const OracleConfig& cfg);

struct PseudoLabel {
  FrameIndex frame = 0;
  BBox bbox;
  double det_confidence = 0.0;
};

struct PseudoLabelSet {
  std::vector<PseudoLabel> positives;
  std::vector<PseudoLabel> negatives;
  std::int64_t frames_sampled = 0;
};

/// Runs stage 1 on frames 0, stride, 2*stride, ... and splits detections at
/// cfg.mining_threshold (>= positive, < negative).
PseudoLabelSet mine_pseudo_labels(DetectionOracle& oracle, const VideoMeta& meta,
                                  const QuerySpec& spec, FrameIndex sampling_stride,
                                  const OracleConfig& cfg);

/// Export consumed by the prompt-tuning bridge.
void write_pseudo_labels(const PseudoLabelSet& labels, const QuerySpec& spec,
                         const std::filesystem::path& path);

}  // namespace vidq

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vidq/core.hpp"
#include "vidq/fcm.hpp"
#include "vidq/oracle.hpp"

namespace vidq {

struct PatternConfig {
  // Frames used for initialization; 0 means five minutes of video.
  FrameIndex init_window = 0;
  int num_clusters = 8;
  double fuzzifier = 2.0;
  int resample_points = 32;
  double fcm_tol = 1e-6;
  int fcm_max_iter = 300;
  // Independent FCM runs from different seeds; the lowest objective wins.
  int fcm_restarts = 5;
  int k_candidates = 3;
  int n_confirm = 5;
  // Seeds whose cheapest pattern is farther than this fraction of the frame
  // diagonal are rejected.
  double cost_gate_fraction = 0.15;
  // Reject confirmations that found no detection besides the seed.
  bool require_corroboration = false;
  // Share of sampled frames that must yield a ReID match to the seed,
  // rounded up. A seed that passed the filter by chance rarely gets support.
  double min_support_fraction = 0.0;
  std::uint64_t rng_seed = 0;
};

void check_config(const PatternConfig& cfg);

/// init_window, or 5 * 60 * fps when unset, capped at frame_count.
FrameIndex effective_init_window(const PatternConfig& cfg, const VideoMeta& meta);

/// Tracked trajectories over the initialization window. Throws
/// EmptyInitialization when the oracle yields none.
std::vector<Trajectory> extract_init_trajectories(DetectionOracle& oracle,
                                                  const VideoMeta& meta,
                                                  const PatternConfig& cfg);

/// P points at equal arc-length fractions along the (x, y) polyline,
/// flattened to (x1, y1, ..., xP, yP) and normalized by width / height.
FeatureVector resample_trajectory(const Trajectory& t, int points, int width,
                                  int height);

/// One pattern per non-empty cluster: the member trajectory (argmax
/// membership) with the highest membership, ties to the shorter then
/// lexicographically smaller track_id. Pattern ids are assigned by
/// descending span length, then cluster index.
std::vector<MotionPattern> select_medoids(const FcmResult& fcm,
                                          const std::vector<Trajectory>& trajectories);

/// Full initialization: extract, resample, cluster, pick medoids.
std::vector<MotionPattern> initialize_patterns(DetectionOracle& oracle,
                                               const VideoMeta& meta,
                                               const PatternConfig& cfg);

/// Minimum Euclidean distance from center to any pattern point.
double assignment_cost(const Point2& center, const MotionPattern& pattern);

/// Index of the pattern point nearest to center, ties to the lowest index.
std::size_t closest_point(const Point2& center, const MotionPattern& pattern);

struct Candidate {
  std::size_t index = 0;  // into the pattern list
  int pattern_id = 0;
  double cost = 0.0;
};

/// The k cheapest patterns by assignment cost, ascending, ties by pattern_id.
std::vector<Candidate> candidate_patterns(const Point2& center,
                                          const std::vector<MotionPattern>& patterns,
                                          int k);

enum class Rejection { kNone, kNoPatternMatch, kUncorroborated };

const char* to_string(Rejection r);

struct ConfirmationTrace {
  std::vector<FrameIndex> sampled_frames;
  std::vector<Detection> collected;          // O_i, seed first
  std::vector<std::size_t> candidate_set;    // pattern indices, ascending id
  std::vector<double> mean_costs;            // parallel to candidate_set
  std::optional<std::size_t> chosen;         // index into patterns
};

struct Confirmation {
  std::optional<ConfirmedTrack> track;
  Rejection rejection = Rejection::kNone;
  ConfirmationTrace trace;
};

/// Progressive confirmation of one seed detection that passed both stages:
/// anchor the cheapest pattern at the seed, re-detect on n sampled frames of
/// its span, keep the best ReID match per frame, then pick the candidate
/// pattern with the smallest mean assignment cost and derive the span.
Confirmation confirm_trajectory(const Detection& seed,
                                const std::vector<MotionPattern>& patterns,
                                DetectionOracle& oracle, const QuerySpec& spec,
                                const OracleConfig& oracle_cfg,
                                const PatternConfig& cfg, const VideoMeta& meta);

void write_patterns(const std::vector<MotionPattern>& patterns,
                    const std::filesystem::path& path);
std::vector<MotionPattern> read_patterns(const std::filesystem::path& path);

}  // namespace vidq

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "vidq/core.hpp"
#include "vidq/rng.hpp"

namespace vidq {

class DetectionOracle;
struct OracleConfig;

struct BanditConfig {
  int num_segments = 500;
  int max_rounds = 2000;
  double alpha0 = 0.1;
  double beta0 = 1.0;
  // A segment is relevant when it has at least one matching observation and
  // its smoothed score exceeds this threshold.
  double relevance_threshold = 0.0;
  std::uint64_t rng_seed = 0;
};

void check_config(const BanditConfig& cfg);

/// One arm: a contiguous frame range plus its observation counters.
/// Unobserved frames are kept in a pool so uniform sampling without
/// replacement is O(1).
class SegmentState {
 public:
  SegmentState(int segment_id, FrameIndex start, FrameIndex end);

  int segment_id() const { return segment_id_; }
  FrameSpan frame_range() const { return {start_, end_}; }
  std::int64_t n_total() const { return end_ - start_ + 1; }
  std::int64_t n_obs() const { return n_obs_; }
  std::int64_t x_obs() const { return x_obs_; }
  bool exhausted() const { return n_obs_ >= n_total(); }
  bool observed(FrameIndex frame) const;
  /// Observed frames in observation order.
  const std::vector<FrameIndex>& observed_frames() const { return observed_; }

  /// Records one sampled frame. Throws RepeatedObservation on a frame seen
  /// before and InvalidConfig on a frame outside the segment.
  void observe(FrameIndex frame, bool matched);

  /// Uniformly random frame among those not yet observed.
  FrameIndex sample_unobserved(CounterRng& rng) const;

 private:
  int segment_id_;
  FrameIndex start_;
  FrameIndex end_;
  std::int64_t n_obs_ = 0;
  std::int64_t x_obs_ = 0;
  std::vector<FrameIndex> observed_;
  // pool_[0, pool_size_) holds unobserved offsets; where_[offset] is the
  // offset's slot in pool_.
  std::vector<std::int32_t> pool_;
  std::vector<std::int32_t> where_;
  std::int64_t pool_size_ = 0;
};

/// Equal-size contiguous segments; the first frame_count % L get one extra.
std::vector<SegmentState> partition_video(FrameIndex frame_count, int num_segments);

/// Posterior mean (x_obs + alpha0) / (n_obs + beta0).
double approx_reward(const SegmentState& state, const BanditConfig& cfg);

/// Reward of the next sample given ground truth: (x_i - x_obs) / (n_i - n_obs).
double true_reward(std::int64_t x_i, std::int64_t n_i, const SegmentState& state);

/// One draw from Gamma(shape = x_obs + alpha0, rate = n_obs + beta0).
double sample_posterior(const SegmentState& state, const BanditConfig& cfg,
                        CounterRng& rng);

/// Thompson step: argmax of one posterior draw per non-exhausted segment,
/// ties to the lowest id. Throws LocalizationComplete if none remain.
int select_next_segment(const std::vector<SegmentState>& states,
                        const BanditConfig& cfg, CounterRng& rng);

struct Observation {
  int round = 0;
  int segment_id = 0;
  FrameIndex frame = 0;
  bool matched = false;
  int num_detections = 0;  // detections passing both stages

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct LocalizationOutcome {
  std::vector<SegmentState> segments;
  std::vector<double> scores;       // indexed by segment_id
  std::vector<int> relevant;        // descending score, ties by id
  std::vector<Observation> log;
  // Frames whose detections passed both stages, with those detections.
  std::vector<std::pair<FrameIndex, std::vector<Detection>>> positive_frames;
};

/// Oracle failure during localization. Carries the rounds completed so far.
class LocalizationAborted : public OracleUnavailable {
 public:
  LocalizationAborted(const std::string& what, LocalizationOutcome partial)
      : OracleUnavailable(what), partial_(std::move(partial)) {}
  const LocalizationOutcome& partial() const { return partial_; }

 private:
  LocalizationOutcome partial_;
};

/// Frame-level probe used by the bandit loop: returns the detections on a
/// frame that pass both oracle stages.
using FrameProbe = std::function<std::vector<Detection>(FrameIndex)>;

LocalizationOutcome run_localization(const VideoMeta& meta,
                                     const BanditConfig& cfg,
                                     const FrameProbe& probe);

/// Convenience overload that probes with oracle.detect + semantic_filter.
LocalizationOutcome run_localization(const VideoMeta& meta, const QuerySpec& spec,
                                     DetectionOracle& oracle,
                                     const OracleConfig& oracle_cfg,
                                     const BanditConfig& cfg);

void write_observation_log(const std::vector<Observation>& log,
                           const std::filesystem::path& path);
std::vector<Observation> read_observation_log(const std::filesystem::path& path);

}  // namespace vidq

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>

#include "vidq/dataset.hpp"
#include "vidq/oracle.hpp"

namespace vidq {

struct ScoreModel {
  double mean = 0.0;
  double sigma = 0.0;
};

/// Noise applied by the ground-truth playback provider. Every emitted score
/// is a Normal draw clipped to [0, 1].
struct NoiseModel {
  double miss_rate = 0.0;
  double fp_rate_per_frame = 0.0;
  double center_jitter_sigma = 0.0;  // pixels, per axis
  ScoreModel tp_confidence{0.8, 0.1};
  ScoreModel fp_confidence{0.4, 0.15};
  ScoreModel filter_match{0.85, 0.1};
  ScoreModel filter_nonmatch{0.25, 0.15};
  ScoreModel reid_same{0.85, 0.08};
  ScoreModel reid_different{0.3, 0.12};
  double fp_box_width = 48.0;
  double fp_box_height = 32.0;
  std::uint64_t rng_seed = 0;

  /// No misses, no false positives, no jitter and zero score sigmas.
  static NoiseModel perfect(std::uint64_t seed = 0);
};

void check_config(const NoiseModel& noise);

/// Simulated per-call model latency, used to make stage timings meaningful.
struct SimulatedLatency {
  std::chrono::microseconds detect{0};
  std::chrono::microseconds filter{0};
  std::chrono::microseconds reid{0};
};

/// Ground-truth playback: detections are derived from the dataset's
/// annotations through the noise model. All randomness is drawn from streams
/// keyed by (frame, object), so results do not depend on call order or on
/// any threshold.
class SyntheticOracle final : public DetectionOracle {
 public:
  SyntheticOracle(std::shared_ptr<const Dataset> dataset, NoiseModel noise,
                  SimulatedLatency latency = {});

  std::vector<Detection> detect_candidates(FrameIndex frame,
                                           const QuerySpec& spec) override;
  std::vector<Detection> semantic_filter(std::vector<Detection> detections,
                                         const QuerySpec& spec) override;
  double reid_similarity(const Detection& a, const Detection& b) override;
  std::vector<Trajectory> init_trajectories(const VideoMeta& meta,
                                            FrameIndex window) override;

  const NoiseModel& noise() const { return noise_; }
  const GroundTruthIndex& index() const { return index_; }

 private:
  const AnnotationRecord* record_for(const Detection& d) const;
  std::uint64_t identity_key(const Detection& d) const;

  std::shared_ptr<const Dataset> dataset_;
  GroundTruthIndex index_;
  NoiseModel noise_;
  SimulatedLatency latency_;
};

}  // namespace vidq

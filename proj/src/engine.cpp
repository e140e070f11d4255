#include "vidq/engine.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace vidq {

void check_config(const EngineConfig& cfg) {
  if (cfg.scan_stride < 0) throw InvalidConfig("scan_stride must be >= 1");
  if (cfg.dedup_iou < 0.0 || cfg.dedup_iou > 1.0) {
    throw InvalidConfig("dedup_iou must lie in [0, 1]");
  }
  check_config(cfg.bandit);
  check_config(cfg.oracle);
  check_config(cfg.patterns);
}

FrameIndex effective_scan_stride(const EngineConfig& cfg, const VideoMeta& meta) {
  return cfg.scan_stride > 0 ? cfg.scan_stride : FrameIndex(meta.fps);
}

std::vector<int> span_coverage(const std::vector<ConfirmedTrack>& tracks,
                               FrameIndex frame_count) {
  std::vector<int> delta(std::size_t(frame_count) + 1, 0);
  for (const auto& t : tracks) {
    const auto s = std::clamp<FrameIndex>(t.span.start, 0, frame_count);
    const auto e = std::clamp<FrameIndex>(t.span.end + 1, 0, frame_count);
    if (s >= e) continue;
    ++delta[std::size_t(s)];
    --delta[std::size_t(e)];
  }
  std::vector<int> cover(std::size_t(frame_count), 0);
  int running = 0;
  for (std::size_t f = 0; f < cover.size(); ++f) {
    running += delta[f];
    cover[f] = running;
  }
  return cover;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Forwards to another oracle while accumulating time per call type.
class TimedOracle final : public DetectionOracle {
 public:
  explicit TimedOracle(DetectionOracle& inner) : inner_(inner) {}

  std::vector<Detection> detect_candidates(FrameIndex frame,
                                           const QuerySpec& spec) override {
    const auto t0 = Clock::now();
    auto out = inner_.detect_candidates(frame, spec);
    detect_s += seconds_since(t0);
    return out;
  }
  std::vector<Detection> semantic_filter(std::vector<Detection> d,
                                         const QuerySpec& spec) override {
    const auto t0 = Clock::now();
    auto out = inner_.semantic_filter(std::move(d), spec);
    filter_s += seconds_since(t0);
    return out;
  }
  double reid_similarity(const Detection& a, const Detection& b) override {
    return inner_.reid_similarity(a, b);
  }
  std::vector<Trajectory> init_trajectories(const VideoMeta& meta,
                                            FrameIndex window) override {
    return inner_.init_trajectories(meta, window);
  }

  double detect_s = 0.0;
  double filter_s = 0.0;

 private:
  DetectionOracle& inner_;
};

/// Drops detections overlapping a higher-scored one above the IoU limit.
std::vector<Detection> dedup_frame(std::vector<Detection> dets, double limit) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return a.filter_score.value_or(0.0) > b.filter_score.value_or(0.0);
  });
  std::vector<Detection> kept;
  for (auto& d : dets) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.bbox, d.bbox) > limit;
    });
    if (!dup) kept.push_back(std::move(d));
  }
  return kept;
}

QueryResult reduce(const VideoMeta& meta, const QuerySpec& spec, const QueryRun& run,
                   const EngineConfig& cfg) {
  const auto n = std::size_t(meta.frame_count);
  std::vector<double> filter_sum(n, 0.0);
  for (const auto& [f, dets] : run.probes) {
    for (const auto& d : dets) filter_sum[std::size_t(f)] += d.filter_score.value_or(0.0);
  }

  std::vector<int> coverage;
  if (run.degraded) {
    coverage.assign(n, 0);
    for (const auto& [f, dets] : run.probes) coverage[std::size_t(f)] = int(dets.size());
  } else {
    coverage = span_coverage(run.tracks, meta.frame_count);
  }
  std::vector<bool> lone(n, false);
  if (!run.degraded && cfg.selection_includes_rejected) {
    for (const auto& r : run.rejected) {
      // An uncorroborated seed is evidence of a filter false positive.
      if (r.reason == Rejection::kNoPatternMatch) lone[std::size_t(r.detection.frame)] = true;
    }
  }

  switch (spec.query_type) {
    case QueryType::kSelection: {
      SelectionResult sel;
      for (std::size_t f = 0; f < n; ++f) {
        if (coverage[f] > 0 || lone[f]) sel.frames.push_back(FrameIndex(f));
      }
      return sel;
    }
    case QueryType::kAggregation: {
      AggregationResult agg;
      if (run.degraded) {
        // Each probe stands for the frames of its segment divided evenly
        // among that segment's probes.
        std::map<int, std::vector<FrameIndex>> per_segment;
        for (const auto& [f, dets] : run.probes) {
          for (const auto& s : run.localization.segments) {
            if (s.frame_range().contains(f)) {
              per_segment[s.segment_id()].push_back(f);
              break;
            }
          }
        }
        double total = 0.0;
        for (const auto& [id, frames] : per_segment) {
          const double weight = double(run.localization.segments[std::size_t(id)].n_total()) /
                                double(frames.size());
          for (auto f : frames) total += weight * coverage[std::size_t(f)];
        }
        agg.mean_objects_per_frame = total / double(meta.frame_count);
      } else {
        long long total = 0;
        for (int c : coverage) total += c;
        agg.mean_objects_per_frame = double(total) / double(meta.frame_count);
      }
      return agg;
    }
    case QueryType::kTopK: {
      std::vector<RankedFrame> ranked;
      for (std::size_t f = 0; f < n; ++f) {
        if (coverage[f] > 0 || lone[f]) {
          ranked.push_back({FrameIndex(f), coverage[f], filter_sum[f]});
        }
      }
      const auto k = std::size_t(*spec.k);
      auto better = [](const RankedFrame& a, const RankedFrame& b) {
        if (a.coverage != b.coverage) return a.coverage > b.coverage;
        if (a.filter_sum != b.filter_sum) return a.filter_sum > b.filter_sum;
        return a.frame < b.frame;
      };
      if (ranked.size() > k) {
        std::partial_sort(ranked.begin(), ranked.begin() + std::ptrdiff_t(k), ranked.end(),
                          better);
        ranked.resize(k);
      } else {
        std::sort(ranked.begin(), ranked.end(), better);
      }
      return TopKResult{std::move(ranked)};
    }
  }
  return SelectionResult{};
}

}  // namespace

QueryRun execute_query(const VideoMeta& meta, const QuerySpec& spec,
                       DetectionOracle& oracle, const EngineConfig& cfg,
                       const std::vector<MotionPattern>* patterns) {
  check_meta(meta);
  check_query(spec);
  check_config(cfg);
  TimedOracle timed(oracle);
  QueryRun run;
  run.spec = spec;
  double trajectory_s = 0.0;

  // Motion patterns are query-independent; reuse a cached set when given.
  if (patterns != nullptr) {
    run.patterns = *patterns;
  } else {
    const auto t0 = Clock::now();
    try {
      run.patterns = initialize_patterns(timed, meta, cfg.patterns);
    } catch (const EmptyInitialization&) {
      run.patterns.clear();
    }
    trajectory_s += seconds_since(t0);
  }
  run.degraded = run.patterns.empty();

  {
    const auto t0 = Clock::now();
    run.localization = run_localization(meta, spec, timed, cfg.oracle, cfg.bandit);
    run.stage_seconds[kStageLocalization] = seconds_since(t0);
  }
  timed.detect_s = 0.0;
  timed.filter_s = 0.0;

  // Frames already observed by the bandit need no second oracle call.
  std::map<FrameIndex, std::vector<Detection>> known;
  for (const auto& o : run.localization.log) known[o.frame];
  for (const auto& [f, dets] : run.localization.positive_frames) known[f] = dets;

  const FrameIndex stride = effective_scan_stride(cfg, meta);
  for (int seg_id : run.localization.relevant) {
    const auto range = run.localization.segments[std::size_t(seg_id)].frame_range();
    std::set<FrameIndex> frames;
    for (FrameIndex f = range.start; f <= range.end; f += stride) frames.insert(f);
    for (const auto& [f, dets] : run.localization.positive_frames) {
      if (range.contains(f)) frames.insert(f);
    }
    for (FrameIndex f : frames) {
      std::vector<Detection> dets;
      if (auto it = known.find(f); it != known.end()) {
        dets = it->second;
      } else {
        dets = detect_and_filter(timed, f, spec, cfg.oracle);
      }
      run.probes[f] = dets;
      if (run.degraded) continue;

      for (const auto& seed : dedup_frame(std::move(dets), cfg.dedup_iou)) {
        const bool covered =
            std::any_of(run.tracks.begin(), run.tracks.end(), [&](const ConfirmedTrack& t) {
              return t.span.contains(seed.frame) &&
                     timed.reid_similarity(seed, t.seed()) >= cfg.oracle.reid_threshold;
            });
        if (covered) continue;
        const auto t0 = Clock::now();
        const double d0 = timed.detect_s;
        const double f0 = timed.filter_s;
        auto conf = confirm_trajectory(seed, run.patterns, timed, spec, cfg.oracle,
                                       cfg.patterns, meta);
        const double dd = timed.detect_s - d0;
        const double df = timed.filter_s - f0;
        trajectory_s += seconds_since(t0) - dd - df;
        if (conf.track) {
          auto& fresh = *conf.track;
          auto same = run.tracks.end();
          if (cfg.merge_overlapping_tracks) {
            same = std::find_if(run.tracks.begin(), run.tracks.end(), [&](const ConfirmedTrack& t) {
              return t.span.start <= fresh.span.end && fresh.span.start <= t.span.end &&
                     timed.reid_similarity(fresh.seed(), t.seed()) >= cfg.oracle.reid_threshold;
            });
          }
          if (same != run.tracks.end()) {
            same->span = {std::min(same->span.start, fresh.span.start),
                          std::max(same->span.end, fresh.span.end)};
            same->supporting_detections.insert(same->supporting_detections.end(),
                                               fresh.supporting_detections.begin(),
                                               fresh.supporting_detections.end());
          } else {
            fresh.object_key = "track-" + std::to_string(run.tracks.size());
            run.tracks.push_back(std::move(fresh));
          }
        } else {
          run.rejected.push_back({seed, conf.rejection});
        }
      }
    }
  }
  run.stage_seconds[kStageDetection] = timed.detect_s;
  run.stage_seconds[kStageFiltering] = timed.filter_s;
  run.stage_seconds[kStageTrajectory] = trajectory_s;
  run.result = reduce(meta, spec, run, cfg);
  return run;
}

}  // namespace vidq

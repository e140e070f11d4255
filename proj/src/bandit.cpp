#include "vidq/bandit.hpp"

#include <algorithm>
#include <numeric>

#include "vidq/jsonl.hpp"
#include "vidq/oracle.hpp"

namespace vidq {

void check_config(const BanditConfig& cfg) {
  if (cfg.num_segments < 1) throw InvalidConfig("num_segments must be >= 1");
  if (cfg.max_rounds < 1) throw InvalidConfig("max_rounds must be >= 1");
  if (!(cfg.alpha0 > 0.0) || !(cfg.beta0 > 0.0)) {
    throw InvalidConfig("alpha0 and beta0 must be positive");
  }
  if (cfg.relevance_threshold < 0.0 || cfg.relevance_threshold > 1.0) {
    throw InvalidConfig("relevance_threshold must lie in [0, 1]");
  }
}

SegmentState::SegmentState(int segment_id, FrameIndex start, FrameIndex end)
    : segment_id_(segment_id), start_(start), end_(end) {
  if (end < start) throw InvalidConfig("segment end precedes start");
  const auto n = std::size_t(n_total());
  pool_.resize(n);
  where_.resize(n);
  std::iota(pool_.begin(), pool_.end(), 0);
  std::iota(where_.begin(), where_.end(), 0);
  pool_size_ = std::int64_t(n);
}

bool SegmentState::observed(FrameIndex frame) const {
  if (frame < start_ || frame > end_) return false;
  return where_[std::size_t(frame - start_)] >= pool_size_;
}

void SegmentState::observe(FrameIndex frame, bool matched) {
  if (frame < start_ || frame > end_) {
    throw InvalidConfig("frame " + std::to_string(frame) + " outside segment " +
                        std::to_string(segment_id_));
  }
  if (observed(frame)) {
    throw RepeatedObservation("frame " + std::to_string(frame) +
                              " already observed in segment " +
                              std::to_string(segment_id_));
  }
  // Swap the frame's slot with the last pooled slot and shrink the pool.
  const auto offset = std::int32_t(frame - start_);
  const auto slot = where_[std::size_t(offset)];
  const auto last = std::int32_t(pool_size_ - 1);
  const auto moved = pool_[std::size_t(last)];
  pool_[std::size_t(slot)] = moved;
  where_[std::size_t(moved)] = slot;
  pool_[std::size_t(last)] = offset;
  where_[std::size_t(offset)] = last;
  --pool_size_;

  observed_.push_back(frame);
  ++n_obs_;
  if (matched) ++x_obs_;
}

FrameIndex SegmentState::sample_unobserved(CounterRng& rng) const {
  if (pool_size_ == 0) {
    throw LocalizationComplete("segment " + std::to_string(segment_id_) +
                               " is exhausted");
  }
  const auto slot = uniform_index(rng, std::uint64_t(pool_size_));
  return start_ + pool_[std::size_t(slot)];
}

std::vector<SegmentState> partition_video(FrameIndex frame_count, int num_segments) {
  if (num_segments < 1) throw InvalidConfig("num_segments must be >= 1");
  if (frame_count < num_segments) {
    throw InvalidConfig("cannot split " + std::to_string(frame_count) +
                        " frames into " + std::to_string(num_segments) +
                        " segments");
  }
  std::vector<SegmentState> out;
  out.reserve(std::size_t(num_segments));
  const FrameIndex base = frame_count / num_segments;
  const FrameIndex extra = frame_count % num_segments;
  FrameIndex start = 0;
  for (int i = 0; i < num_segments; ++i) {
    const FrameIndex size = base + (i < extra ? 1 : 0);
    out.emplace_back(i, start, start + size - 1);
    start += size;
  }
  return out;
}

double approx_reward(const SegmentState& state, const BanditConfig& cfg) {
  return (double(state.x_obs()) + cfg.alpha0) / (double(state.n_obs()) + cfg.beta0);
}

double true_reward(std::int64_t x_i, std::int64_t n_i, const SegmentState& state) {
  if (n_i <= state.n_obs()) {
    throw UndefinedReward("segment has no unobserved frames left");
  }
  return double(x_i - state.x_obs()) / double(n_i - state.n_obs());
}

double sample_posterior(const SegmentState& state, const BanditConfig& cfg,
                        CounterRng& rng) {
  return gamma_shape_rate(rng, double(state.x_obs()) + cfg.alpha0,
                          double(state.n_obs()) + cfg.beta0);
}

int select_next_segment(const std::vector<SegmentState>& states,
                        const BanditConfig& cfg, CounterRng& rng) {
  int best = -1;
  double best_draw = -1.0;
  for (const auto& s : states) {
    if (s.exhausted()) continue;
    const double draw = sample_posterior(s, cfg, rng);
    if (draw > best_draw) {
      best_draw = draw;
      best = s.segment_id();
    } else if (draw == best_draw && s.segment_id() < best) {
      best = s.segment_id();
    }
  }
  if (best < 0) throw LocalizationComplete("every segment is exhausted");
  return best;
}

namespace {

void finalize(LocalizationOutcome& out, const BanditConfig& cfg) {
  out.scores.clear();
  out.relevant.clear();
  for (const auto& s : out.segments) {
    const double score = approx_reward(s, cfg);
    out.scores.push_back(score);
    if (s.x_obs() > 0 && score > cfg.relevance_threshold) {
      out.relevant.push_back(s.segment_id());
    }
  }
  std::stable_sort(out.relevant.begin(), out.relevant.end(), [&](int a, int b) {
    return out.scores[std::size_t(a)] > out.scores[std::size_t(b)];
  });
}

}  // namespace

LocalizationOutcome run_localization(const VideoMeta& meta, const BanditConfig& cfg,
                                     const FrameProbe& probe) {
  check_meta(meta);
  check_config(cfg);
  LocalizationOutcome out;
  out.segments = partition_video(meta.frame_count, cfg.num_segments);
  auto select_rng = CounterRng::stream(cfg.rng_seed, "bandit-select");
  auto frame_rng = CounterRng::stream(cfg.rng_seed, "bandit-frame");
  for (int round = 0; round < cfg.max_rounds; ++round) {
    int id;
    try {
      id = select_next_segment(out.segments, cfg, select_rng);
    } catch (const LocalizationComplete&) {
      break;
    }
    auto& seg = out.segments[std::size_t(id)];
    const FrameIndex frame = seg.sample_unobserved(frame_rng);
    std::vector<Detection> hits;
    try {
      hits = probe(frame);
    } catch (const OracleUnavailable& e) {
      finalize(out, cfg);
      throw LocalizationAborted(e.what(), std::move(out));
    }
    const bool matched = !hits.empty();
    seg.observe(frame, matched);
    out.log.push_back({round, id, frame, matched, int(hits.size())});
    if (matched) out.positive_frames.emplace_back(frame, std::move(hits));
  }
  finalize(out, cfg);
  return out;
}

LocalizationOutcome run_localization(const VideoMeta& meta, const QuerySpec& spec,
                                     DetectionOracle& oracle,
                                     const OracleConfig& oracle_cfg,
                                     const BanditConfig& cfg) {
  return run_localization(meta, cfg, [&](FrameIndex f) {
    return detect_and_filter(oracle, f, spec, oracle_cfg);
  });
}

namespace {
constexpr const char* kLogFormat = "vidq.observations";
}

void write_observation_log(const std::vector<Observation>& log,
                           const std::filesystem::path& path) {
  std::vector<jsonl::json> records;
  records.reserve(log.size());
  for (const auto& o : log) {
    records.push_back({{"round", o.round},
                       {"segment_id", o.segment_id},
                       {"frame", o.frame},
                       {"matched", o.matched},
                       {"num_detections", o.num_detections}});
  }
  jsonl::write_atomic(path, jsonl::serialize(kLogFormat, records));
}

std::vector<Observation> read_observation_log(const std::filesystem::path& path) {
  std::vector<Observation> log;
  for (const auto& line : jsonl::read(path, kLogFormat)) {
    try {
      const auto& v = line.value;
      log.push_back({v.at("round").get<int>(), v.at("segment_id").get<int>(),
                     v.at("frame").get<FrameIndex>(), v.at("matched").get<bool>(),
                     v.at("num_detections").get<int>()});
    } catch (const jsonl::json::exception& e) {
      throw IoError(path.string(), line.number, e.what());
    }
  }
  return log;
}

}  // namespace vidq

#include "vidq/patterns.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "vidq/jsonl.hpp"
#include "vidq/rng.hpp"

namespace vidq {

void check_config(const PatternConfig& cfg) {
  if (cfg.init_window < 0) throw InvalidConfig("init_window must be >= 0");
  if (cfg.num_clusters < 1) throw InvalidConfig("num_clusters must be >= 1");
  if (!(cfg.fuzzifier > 1.0)) throw InvalidConfig("fuzzifier must be > 1");
  if (cfg.resample_points < 2) throw InvalidConfig("resample_points must be >= 2");
  if (cfg.k_candidates < 1) throw InvalidConfig("k_candidates must be >= 1");
  if (cfg.fcm_restarts < 1) throw InvalidConfig("fcm_restarts must be >= 1");
  if (cfg.n_confirm < 1) throw InvalidConfig("n_confirm must be >= 1");
  if (cfg.cost_gate_fraction < 0.0) throw InvalidConfig("cost_gate_fraction must be >= 0");
  if (cfg.min_support_fraction < 0.0 || cfg.min_support_fraction > 1.0) {
    throw InvalidConfig("min_support_fraction must lie in [0, 1]");
  }
}

FrameIndex effective_init_window(const PatternConfig& cfg, const VideoMeta& meta) {
  const FrameIndex w = cfg.init_window > 0 ? cfg.init_window : FrameIndex(5) * 60 * meta.fps;
  return std::min(w, meta.frame_count);
}

std::vector<Trajectory> extract_init_trajectories(DetectionOracle& oracle,
                                                  const VideoMeta& meta,
                                                  const PatternConfig& cfg) {
  const FrameIndex window = effective_init_window(cfg, meta);
  auto trajectories = oracle.init_trajectories(meta, window);
  std::erase_if(trajectories, [](const Trajectory& t) { return t.points.size() < 2; });
  if (trajectories.empty()) {
    throw EmptyInitialization("no trajectories in the first " +
                              std::to_string(window) + " frames");
  }
  for (const auto& t : trajectories) check_trajectory(t);
  return trajectories;
}

FeatureVector resample_trajectory(const Trajectory& t, int points, int width,
                                  int height) {
  if (t.points.empty()) throw InvalidConfig("cannot resample an empty trajectory");
  if (points < 2) throw InvalidConfig("resample needs at least 2 points");
  const auto& pts = t.points;
  std::vector<double> cumulative(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cumulative[i] = cumulative[i - 1] +
                    distance({pts[i - 1].x, pts[i - 1].y}, {pts[i].x, pts[i].y});
  }
  const double total = cumulative.back();
  FeatureVector out;
  out.reserve(std::size_t(points) * 2);
  auto emit = [&](double x, double y) {
    out.push_back(x / width);
    out.push_back(y / height);
  };
  if (total == 0.0) {
    for (int q = 0; q < points; ++q) emit(pts.front().x, pts.front().y);
    return out;
  }
  std::size_t seg = 1;
  for (int q = 0; q < points; ++q) {
    if (q == points - 1) {
      emit(pts.back().x, pts.back().y);
      break;
    }
    const double s = total * double(q) / double(points - 1);
    while (seg + 1 < pts.size() && cumulative[seg] < s) ++seg;
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double a = len > 0.0 ? (s - cumulative[seg - 1]) / len : 0.0;
    emit(pts[seg - 1].x + a * (pts[seg].x - pts[seg - 1].x),
         pts[seg - 1].y + a * (pts[seg].y - pts[seg - 1].y));
  }
  return out;
}

namespace {

bool shorter_id(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::vector<MotionPattern> select_medoids(const FcmResult& fcm,
                                          const std::vector<Trajectory>& trajectories) {
  const auto labels = harden(fcm);
  const std::size_t clusters = fcm.centers.size();
  std::vector<std::optional<std::size_t>> medoid(clusters);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto j = std::size_t(labels[i]);
    auto& best = medoid[j];
    if (!best) {
      best = i;
      continue;
    }
    const double u = fcm.membership[i][j];
    const double ub = fcm.membership[*best][j];
    if (u > ub || (u == ub && shorter_id(trajectories[i].track_id,
                                         trajectories[*best].track_id))) {
      best = i;
    }
  }
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < clusters; ++j) {
    if (medoid[j]) order.push_back(*medoid[j]);
  }
  // Cluster order is preserved among equal span lengths.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = trajectories[a].points;
    const auto& pb = trajectories[b].points;
    return pa.back().frame - pa.front().frame > pb.back().frame - pb.front().frame;
  });
  std::vector<MotionPattern> out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.push_back(pattern_from_trajectory(trajectories[order[r]], int(r)));
  }
  return out;
}

std::vector<MotionPattern> initialize_patterns(DetectionOracle& oracle,
                                               const VideoMeta& meta,
                                               const PatternConfig& cfg) {
  check_config(cfg);
  const auto trajectories = extract_init_trajectories(oracle, meta, cfg);
  std::vector<FeatureVector> features;
  features.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    features.push_back(resample_trajectory(t, cfg.resample_points, meta.width, meta.height));
  }
  FcmOptions opts;
  opts.num_clusters = std::min<int>(cfg.num_clusters, int(features.size()));
  opts.fuzzifier = cfg.fuzzifier;
  opts.tol = cfg.fcm_tol;
  opts.max_iter = cfg.fcm_max_iter;
  std::optional<FcmResult> best;
  for (int r = 0; r < cfg.fcm_restarts; ++r) {
    opts.rng_seed = r == 0 ? cfg.rng_seed : hash_combine(cfg.rng_seed, std::uint64_t(r));
    auto result = fcm_cluster(features, opts);
    if (!best || result.objective < best->objective) best = std::move(result);
  }
  return select_medoids(*best, trajectories);
}

double assignment_cost(const Point2& center, const MotionPattern& pattern) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pattern.points) {
    best = std::min(best, distance(center, {p.x, p.y}));
  }
  return best;
}

std::size_t closest_point(const Point2& center, const MotionPattern& pattern) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < pattern.points.size(); ++a) {
    const double d = distance(center, {pattern.points[a].x, pattern.points[a].y});
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}

std::vector<Candidate> candidate_patterns(const Point2& center,
                                          const std::vector<MotionPattern>& patterns,
                                          int k) {
  std::vector<Candidate> all;
  all.reserve(patterns.size());
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    all.push_back({i, patterns[i].pattern_id, assignment_cost(center, patterns[i])});
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.pattern_id < b.pattern_id;
  });
  if (k >= 0 && all.size() > std::size_t(k)) all.resize(std::size_t(k));
  return all;
}

const char* to_string(Rejection r) {
  switch (r) {
    case Rejection::kNone:
      return "none";
    case Rejection::kNoPatternMatch:
      return "no_pattern_match";
    case Rejection::kUncorroborated:
      return "uncorroborated";
  }
  return "?";
}

namespace {

/// Absolute frame that offset 0 maps to when the pattern's closest point to
/// the detection is placed at the detection's frame.
FrameIndex anchor_for(const Detection& d, const MotionPattern& p) {
  return d.frame - p.points[closest_point(d.center(), p)].frame_offset;
}

/// n distinct frames drawn uniformly from [lo, hi] minus `skip`, ascending.
std::vector<FrameIndex> sample_frames(FrameIndex lo, FrameIndex hi, FrameIndex skip,
                                      int n, CounterRng& rng) {
  std::vector<FrameIndex> pool;
  for (FrameIndex f = lo; f <= hi; ++f) {
    if (f != skip) pool.push_back(f);
  }
  if (pool.size() > std::size_t(n)) {
    // Partial Fisher-Yates over the first n slots.
    for (std::size_t i = 0; i < std::size_t(n); ++i) {
      const auto j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(std::size_t(n));
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

Confirmation confirm_trajectory(const Detection& seed,
                                const std::vector<MotionPattern>& patterns,
                                DetectionOracle& oracle, const QuerySpec& spec,
                                const OracleConfig& oracle_cfg,
                                const PatternConfig& cfg, const VideoMeta& meta) {
  if (patterns.empty()) throw InvalidConfig("confirmation needs at least one pattern");
  Confirmation out;
  auto& trace = out.trace;
  const FrameIndex last_frame = meta.frame_count - 1;

  // 1. Anchor the cheapest candidate at the seed.
  const auto seed_candidates = candidate_patterns(seed.center(), patterns, cfg.k_candidates);
  const auto& best = seed_candidates.front();
  if (best.cost > cfg.cost_gate_fraction * meta.diagonal()) {
    out.rejection = Rejection::kNoPatternMatch;
    trace.collected.push_back(seed);
    return out;
  }
  const auto& guide = patterns[best.index];
  const FrameIndex guide_anchor = anchor_for(seed, guide);
  const FrameIndex lo = std::clamp<FrameIndex>(guide_anchor, 0, last_frame);
  const FrameIndex hi = std::clamp<FrameIndex>(
      guide_anchor + guide.points.back().frame_offset, 0, last_frame);

  // 2. Sample frames along the anchored span.
  const auto bx = std::bit_cast<std::uint64_t>(seed.bbox.x_min);
  const auto by = std::bit_cast<std::uint64_t>(seed.bbox.y_min);
  auto rng = CounterRng::stream(cfg.rng_seed, "confirm",
                                {std::uint64_t(seed.frame), bx, by});
  trace.sampled_frames = sample_frames(lo, hi, seed.frame, cfg.n_confirm, rng);

  // 3. Re-detect and keep the best ReID match to the seed per frame.
  trace.collected.push_back(seed);
  for (FrameIndex f : trace.sampled_frames) {
    const auto dets = detect_and_filter(oracle, f, spec, oracle_cfg);
    const Detection* match = nullptr;
    double match_sim = -1.0;
    for (const auto& d : dets) {
      const double sim = oracle.reid_similarity(d, seed);
      if (sim >= oracle_cfg.reid_threshold && sim > match_sim) {
        match = &d;
        match_sim = sim;
      }
    }
    if (match) trace.collected.push_back(*match);
  }

  // 4. Union of candidate sets.
  std::set<std::size_t> union_set;
  for (const auto& c : seed_candidates) union_set.insert(c.index);
  for (std::size_t m = 1; m < trace.collected.size(); ++m) {
    for (const auto& c : candidate_patterns(trace.collected[m].center(), patterns,
                                            cfg.k_candidates)) {
      union_set.insert(c.index);
    }
  }
  trace.candidate_set.assign(union_set.begin(), union_set.end());
  std::sort(trace.candidate_set.begin(), trace.candidate_set.end(),
            [&](std::size_t a, std::size_t b) {
              return patterns[a].pattern_id < patterns[b].pattern_id;
            });

  // 5. Smallest mean assignment cost; ties by pattern_id via iteration order.
  std::optional<std::size_t> chosen;
  double chosen_cost = std::numeric_limits<double>::infinity();
  for (auto idx : trace.candidate_set) {
    double sum = 0.0;
    for (const auto& d : trace.collected) sum += assignment_cost(d.center(), patterns[idx]);
    const double mean = sum / double(trace.collected.size());
    trace.mean_costs.push_back(mean);
    if (mean < chosen_cost) {
      chosen_cost = mean;
      chosen = idx;
    }
  }
  trace.chosen = chosen;

  const auto needed = std::size_t(
      std::ceil(cfg.min_support_fraction * double(trace.sampled_frames.size()) - 1e-9));
  const std::size_t support = trace.collected.size() - 1;
  if ((cfg.require_corroboration && support == 0) || support < needed) {
    out.rejection = Rejection::kUncorroborated;
    return out;
  }

  // 6. Anchor the final pattern (median of per-detection anchors) and take
  // the span of closest points, extended to the anchored pattern endpoints.
  const auto& final_pattern = patterns[*chosen];
  std::vector<FrameIndex> anchors;
  for (const auto& d : trace.collected) anchors.push_back(anchor_for(d, final_pattern));
  std::sort(anchors.begin(), anchors.end());
  const FrameIndex anchor = anchors[(anchors.size() - 1) / 2];

  FrameIndex fs = anchor + final_pattern.points.front().frame_offset;
  FrameIndex fe = anchor + final_pattern.points.back().frame_offset;
  for (const auto& d : trace.collected) {
    const auto a = closest_point(d.center(), final_pattern);
    const FrameIndex f = anchor + final_pattern.points[a].frame_offset;
    fs = std::min({fs, f, d.frame});
    fe = std::max({fe, f, d.frame});
  }
  ConfirmedTrack track;
  track.object_key = std::to_string(seed.frame) + ":" +
                     std::to_string(seed.center().x) + "," +
                     std::to_string(seed.center().y);
  track.pattern = final_pattern;
  track.anchor_frame = anchor;
  track.span = {std::clamp<FrameIndex>(fs, 0, last_frame),
                std::clamp<FrameIndex>(fe, 0, last_frame)};
  track.supporting_detections = trace.collected;
  out.track = std::move(track);
  return out;
}

namespace {
constexpr const char* kPatternFormat = "vidq.patterns";
}

void write_patterns(const std::vector<MotionPattern>& patterns,
                    const std::filesystem::path& path) {
  std::vector<jsonl::json> records;
  for (const auto& p : patterns) {
    jsonl::json pts = jsonl::json::array();
    for (const auto& q : p.points) pts.push_back({q.frame_offset, q.x, q.y});
    records.push_back(
        {{"pattern_id", p.pattern_id}, {"span_length", p.span_length}, {"points", pts}});
  }
  jsonl::write_atomic(path, jsonl::serialize(kPatternFormat, records));
}

std::vector<MotionPattern> read_patterns(const std::filesystem::path& path) {
  std::vector<MotionPattern> out;
  for (const auto& line : jsonl::read(path, kPatternFormat)) {
    try {
      MotionPattern p;
      p.pattern_id = line.value.at("pattern_id").get<int>();
      p.span_length = line.value.at("span_length").get<FrameIndex>();
      for (const auto& q : line.value.at("points")) {
        p.points.push_back({q.at(0).get<FrameIndex>(), q.at(1).get<double>(),
                            q.at(2).get<double>()});
      }
      if (p.points.empty()) throw IoError(path.string(), line.number, "empty pattern");
      out.push_back(std::move(p));
    } catch (const jsonl::json::exception& e) {
      throw IoError(path.string(), line.number, e.what());
    }
  }
  return out;
}

}  // namespace vidq

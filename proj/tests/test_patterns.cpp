#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numbers>

#include "helpers.hpp"
#include "vidq/patterns.hpp"
#include "vidq/rng.hpp"
#include "vidq/synthetic_oracle.hpp"

using namespace vidq;
using vidq::testing::LinearObject;
using vidq::testing::make_dataset;
using vidq::testing::share;

namespace {

const VideoMeta kMeta{"v", 10, 1000, 1280, 720};

Trajectory line(const std::string& id, FrameIndex first, FrameIndex last, Point2 start, Point2 v) {
  Trajectory t{id, {}};
  for (FrameIndex f = first; f <= last; ++f) {
    const double dt = double(f - first);
    t.points.push_back({f, start.x + v.x * dt, start.y + v.y * dt});
  }
  return t;
}

Detection det_at(FrameIndex f, Point2 c, double w = 40, double h = 30) {
  Detection d;
  d.frame = f;
  d.bbox = {c.x - w / 2, c.y - h / 2, c.x + w / 2, c.y + h / 2};
  d.det_confidence = 0.8;
  d.filter_score = 0.85;
  return d;
}

// Two horizontal lanes (y = 100 and y = 400), 5 px per frame, 200 frames.
std::vector<MotionPattern> two_lanes() {
  return {pattern_from_trajectory(line("a", 0, 199, {100, 100}, {5, 0}), 0),
          pattern_from_trajectory(line("b", 0, 199, {100, 400}, {5, 0}), 1)};
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, {a.x + t * dx, a.y + t * dy});
}

}  // namespace

// --- resampling ------------------------------------------------------------

TEST(Resample, ThreePointsOnAStraightLine) {
  const Trajectory t{"t", {{0, 0, 0}, {1, 5, 0}, {2, 20, 0}}};
  EXPECT_EQ(resample_trajectory(t, 3, 1, 1), (FeatureVector{0, 0, 10, 0, 20, 0}));
  EXPECT_EQ(resample_trajectory(t, 3, 10, 5), (FeatureVector{0, 0, 1, 0, 2, 0}));
}

TEST(Resample, EquispacedInputIsRecovered) {
  const auto t = line("t", 0, 31, {3, 7}, {2, 1});
  const auto f = resample_trajectory(t, 32, 1, 1);
  ASSERT_EQ(f.size(), 64u);
  for (std::size_t q = 0; q < 32; ++q) {
    EXPECT_NEAR(f[2 * q], t.points[q].x, 1e-9);
    EXPECT_NEAR(f[2 * q + 1], t.points[q].y, 1e-9);
  }
}

TEST(Resample, StationaryTrajectoryRepeatsItsPoint) {
  const Trajectory t{"t", {{0, 4, 4}, {1, 4, 4}}};
  EXPECT_EQ(resample_trajectory(t, 3, 2, 2), (FeatureVector{2, 2, 2, 2, 2, 2}));
}

TEST(Resample, RandomPolylinePointsLieOnThePolyline) {
  CounterRng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Trajectory t{"r", {}};
    const auto n = 2 + uniform_index(rng, 12);
    for (std::size_t i = 0; i < n; ++i) {
      t.points.push_back({FrameIndex(i), 1000 * uniform01(rng), 1000 * uniform01(rng)});
    }
    const int p = 2 + int(uniform_index(rng, 40));
    const auto f = resample_trajectory(t, p, 1, 1);
    ASSERT_EQ(f.size(), std::size_t(2 * p));
    EXPECT_EQ(f.front(), t.points.front().x);
    EXPECT_EQ(f[f.size() - 1], t.points.back().y);
    for (int q = 0; q < p; ++q) {
      const Point2 x{f[2 * std::size_t(q)], f[2 * std::size_t(q) + 1]};
      double best = 1e300;
      for (std::size_t i = 1; i < n; ++i) {
        best = std::min(best, segment_distance(x, {t.points[i - 1].x, t.points[i - 1].y},
                                               {t.points[i].x, t.points[i].y}));
      }
      EXPECT_LT(best, 1e-7);
    }
  }
}

// --- medoids ---------------------------------------------------------------

TEST(Medoids, TieGoesToShorterThenSmallerTrackId) {
  FcmResult r;
  r.centers = {{0}, {1}, {2}};
  r.membership = {{0.9, 0.1, 0.0}, {0.9, 0.1, 0.0}, {0.1, 0.8, 0.1}};
  const std::vector<Trajectory> ts{line("10", 0, 9, {0, 0}, {1, 0}),
                                   line("9", 0, 49, {0, 0}, {1, 0}),
                                   line("x", 0, 99, {0, 0}, {1, 0})};
  const auto ps = select_medoids(r, ts);
  // Cluster 2 has no member and yields no pattern.
  ASSERT_EQ(ps.size(), 2u);
  // Ids by descending span: "x" (100 frames) then "9" (50 frames).
  EXPECT_EQ(ps[0].pattern_id, 0);
  EXPECT_EQ(ps[0].span_length, 100);
  EXPECT_EQ(ps[1].pattern_id, 1);
  EXPECT_EQ(ps[1].span_length, 50);
}

TEST(Medoids, HighestMembershipWins) {
  FcmResult r;
  r.centers = {{0}};
  r.membership = {{0.7}, {1.0}, {0.9}};
  const std::vector<Trajectory> ts{line("a", 0, 3, {0, 0}, {1, 0}), line("b", 0, 5, {0, 0}, {1, 0}),
                                   line("c", 0, 7, {0, 0}, {1, 0})};
  const auto ps = select_medoids(r, ts);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].span_length, 6);
}

// --- assignment cost and candidates ------------------------------------------

TEST(AssignmentCost, NearestPointDistance) {
  MotionPattern p{0, {{0, 3, 4}, {1, 6, 8}}, 2};
  EXPECT_DOUBLE_EQ(assignment_cost({0, 0}, p), 5.0);
  EXPECT_EQ(closest_point({0, 0}, p), 0u);
  EXPECT_EQ(closest_point({7, 8}, p), 1u);
}

TEST(AssignmentCost, MatchesBruteForce) {
  CounterRng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    MotionPattern p;
    const auto n = 1 + uniform_index(rng, 30);
    for (std::size_t i = 0; i < n; ++i) {
      p.points.push_back({FrameIndex(i), 100 * uniform01(rng), 100 * uniform01(rng)});
    }
    const Point2 c{100 * uniform01(rng), 100 * uniform01(rng)};
    double best = 1e300;
    for (const auto& q : p.points) best = std::min(best, std::hypot(c.x - q.x, c.y - q.y));
    ASSERT_NEAR(assignment_cost(c, p), best, 1e-12);
  }
}

TEST(CandidatePatterns, KCheapestAscending) {
  std::vector<MotionPattern> ps;
  for (int i = 0; i < 5; ++i) ps.push_back({i, {{0, 10.0 * (4 - i), 0}}, 1});
  const auto c = candidate_patterns({0, 0}, ps, 3);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].pattern_id, 4);
  EXPECT_EQ(c[1].pattern_id, 3);
  EXPECT_EQ(c[2].pattern_id, 2);
  EXPECT_DOUBLE_EQ(c[2].cost, 20.0);
  EXPECT_EQ(candidate_patterns({0, 0}, ps, 10).size(), 5u);
}

TEST(CandidatePatterns, MatchesBruteForceWithTies) {
  CounterRng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<MotionPattern> ps;
    const auto n = 1 + uniform_index(rng, 10);
    for (std::size_t i = 0; i < n; ++i) {
      // Integer coordinates make exact ties common.
      ps.push_back({int(n - i), {{0, double(uniform_index(rng, 4)), double(uniform_index(rng, 4))}}, 1});
    }
    const int k = 1 + int(uniform_index(rng, 12));
    const auto got = candidate_patterns({0, 0}, ps, k);
    std::vector<std::pair<double, int>> all;
    for (const auto& p : ps) all.push_back({assignment_cost({0, 0}, p), p.pattern_id});
    std::sort(all.begin(), all.end());
    all.resize(std::min(all.size(), std::size_t(k)));
    ASSERT_EQ(got.size(), all.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].cost, all[i].first);
      EXPECT_EQ(got[i].pattern_id, all[i].second);
    }
  }
}

// --- confirmation ------------------------------------------------------------

TEST(Confirm, NoiselessObjectRecoversItsPatternAndSpan) {
  const auto data = share(make_dataset(kMeta, {{3, "car", 500, 699, {100, 100}, {5, 0}}}));
  SyntheticOracle o(data, NoiseModel::perfect());
  const auto spec = QuerySpec::selection("car");
  const auto seed = detect_and_filter(o, 600, spec, OracleConfig{});
  ASSERT_EQ(seed.size(), 1u);
  const auto c = confirm_trajectory(seed[0], two_lanes(), o, spec, OracleConfig{}, PatternConfig{}, kMeta);
  ASSERT_TRUE(c.track.has_value());
  EXPECT_EQ(c.rejection, Rejection::kNone);
  EXPECT_EQ(c.track->pattern.pattern_id, 0);
  EXPECT_EQ(c.track->anchor_frame, 500);
  EXPECT_EQ(c.track->span, (FrameSpan{500, 699}));
  EXPECT_EQ(c.trace.sampled_frames.size(), 5u);
  EXPECT_EQ(c.trace.collected.size(), 6u);
  for (auto f : c.trace.sampled_frames) {
    EXPECT_GE(f, 500);
    EXPECT_LE(f, 699);
    EXPECT_NE(f, 600);
  }
}

TEST(Confirm, SeedFarFromEveryPatternIsRejected) {
  const auto data = share(make_dataset(kMeta, {}));
  SyntheticOracle o(data, NoiseModel::perfect());
  // 300 px from the nearest lane; the gate is 0.15 * 1468.6 = 220 px.
  const auto c = confirm_trajectory(det_at(50, {640, 700}), two_lanes(), o,
                                    QuerySpec::selection("car"), OracleConfig{}, PatternConfig{}, kMeta);
  EXPECT_FALSE(c.track.has_value());
  EXPECT_EQ(c.rejection, Rejection::kNoPatternMatch);
  EXPECT_TRUE(c.trace.sampled_frames.empty());
}

TEST(Confirm, CloserPatternWinsByMeanCost) {
  const auto data = share(make_dataset(kMeta, {{1, "car", 300, 499, {100, 200}, {5, 0}}}));
  SyntheticOracle o(data, NoiseModel::perfect());
  const std::vector<MotionPattern> ps{
      pattern_from_trajectory(line("far", 0, 199, {100, 240}, {5, 0}), 0),
      pattern_from_trajectory(line("near", 0, 199, {100, 202}, {5, 0}), 1)};
  const auto spec = QuerySpec::selection("car");
  const auto seed = detect_and_filter(o, 350, spec, OracleConfig{});
  ASSERT_EQ(seed.size(), 1u);
  const auto c = confirm_trajectory(seed[0], ps, o, spec, OracleConfig{}, PatternConfig{}, kMeta);
  ASSERT_TRUE(c.track.has_value());
  EXPECT_EQ(c.track->pattern.pattern_id, 1);
  ASSERT_EQ(c.trace.mean_costs.size(), 2u);
  EXPECT_NEAR(c.trace.mean_costs[0], 40.0, 1e-9);
  EXPECT_NEAR(c.trace.mean_costs[1], 2.0, 1e-9);
}

TEST(Confirm, JitteredObjectStillLandsNearItsSpan) {
  const auto data = share(make_dataset(kMeta, {{3, "car", 500, 699, {100, 400}, {5, 0}}}));
  auto noise = NoiseModel::perfect(3);
  noise.center_jitter_sigma = 2.0;
  SyntheticOracle o(data, noise);
  const auto spec = QuerySpec::selection("car");
  double cost_sum = 0.0;
  int n = 0;
  for (FrameIndex f = 520; f < 680; f += 16) {
    const auto seed = detect_and_filter(o, f, spec, OracleConfig{});
    ASSERT_EQ(seed.size(), 1u);
    const auto c = confirm_trajectory(seed[0], two_lanes(), o, spec, OracleConfig{}, PatternConfig{}, kMeta);
    ASSERT_TRUE(c.track.has_value());
    EXPECT_EQ(c.track->pattern.pattern_id, 1);
    EXPECT_LE(std::abs(c.track->span.start - 500), 2);
    EXPECT_LE(std::abs(c.track->span.end - 699), 2);
    for (const auto& d : c.trace.collected) {
      cost_sum += assignment_cost(d.center(), c.track->pattern);
      ++n;
    }
  }
  // Points are 5 px apart along x, so the cost is dominated by the 2-D
  // jitter, whose mean radius is sigma * sqrt(pi / 2).
  EXPECT_NEAR(cost_sum / n, 2.0 * std::sqrt(std::numbers::pi / 2), 0.15 * 2.0 * std::sqrt(std::numbers::pi / 2) + 0.3);
}

TEST(Confirm, SupportFractionRejectsLoneSeeds) {
  // No object behind the seed: nothing on the sampled frames can match it.
  const auto data = share(make_dataset(kMeta, {}));
  SyntheticOracle o(data, NoiseModel::perfect());
  PatternConfig cfg;
  cfg.require_corroboration = true;
  const auto c = confirm_trajectory(det_at(50, {300, 100}), two_lanes(), o,
                                    QuerySpec::selection("car"), OracleConfig{}, cfg, kMeta);
  EXPECT_EQ(c.rejection, Rejection::kUncorroborated);
  cfg = {};
  cfg.min_support_fraction = 0.5;
  EXPECT_EQ(confirm_trajectory(det_at(50, {300, 100}), two_lanes(), o, QuerySpec::selection("car"),
                               OracleConfig{}, cfg, kMeta)
                .rejection,
            Rejection::kUncorroborated);
  // Default configuration accepts the seed alone.
  EXPECT_TRUE(confirm_trajectory(det_at(50, {300, 100}), two_lanes(), o, QuerySpec::selection("car"),
                                 OracleConfig{}, PatternConfig{}, kMeta)
                  .track.has_value());
}

// --- initialization ----------------------------------------------------------

TEST(InitTrajectories, OneTrajectoryPerTrackInTheWindow) {
  std::vector<LinearObject> objs;
  for (int i = 0; i < 12; ++i) {
    objs.push_back({i + 1, "car", FrameIndex(20 * i), FrameIndex(20 * i + 150), {100, 50.0 + 50 * i}, {4, 0}});
  }
  SyntheticOracle o(share(make_dataset(kMeta, objs)), NoiseModel::perfect());
  PatternConfig cfg;
  cfg.init_window = 600;
  EXPECT_EQ(extract_init_trajectories(o, kMeta, cfg).size(), 12u);
  cfg.init_window = 15;
  EXPECT_EQ(extract_init_trajectories(o, kMeta, cfg).size(), 1u);
  EXPECT_EQ(effective_init_window(PatternConfig{}, kMeta), 1000);
  EXPECT_EQ(effective_init_window(PatternConfig{}, {"v", 10, 10000, 1, 1}), 3000);
}

TEST(InitTrajectories, WindowBeforeAnyTrackIsAnError) {
  SyntheticOracle o(share(make_dataset(kMeta, {{1, "car", 100, 300, {100, 100}, {3, 0}}})),
                    NoiseModel::perfect());
  PatternConfig cfg;
  cfg.init_window = 50;
  EXPECT_THROW(extract_init_trajectories(o, kMeta, cfg), EmptyInitialization);
  EXPECT_THROW(initialize_patterns(o, kMeta, cfg), EmptyInitialization);
}

TEST(InitializePatterns, TwoLanesGiveTwoPatterns) {
  std::vector<LinearObject> objs;
  for (int i = 0; i < 10; ++i) {
    objs.push_back({i + 1, "car", FrameIndex(30 * i), FrameIndex(30 * i + 199), {100, i % 2 ? 100.0 : 500.0}, {5, 0}});
  }
  SyntheticOracle o(share(make_dataset(kMeta, objs)), NoiseModel::perfect());
  PatternConfig cfg;
  cfg.num_clusters = 2;
  cfg.init_window = 1000;
  const auto ps = initialize_patterns(o, kMeta, cfg);
  ASSERT_EQ(ps.size(), 2u);
  std::vector<double> ys{ps[0].points[0].y, ps[1].points[0].y};
  std::sort(ys.begin(), ys.end());
  EXPECT_EQ(ys, (std::vector<double>{100.0, 500.0}));
}

TEST(PatternConfig, InvalidValuesAreRejected) {
  PatternConfig cfg;
  cfg.resample_points = 1;
  EXPECT_THROW(check_config(cfg), InvalidConfig);
  cfg = {};
  cfg.fcm_restarts = 0;
  EXPECT_THROW(check_config(cfg), InvalidConfig);
  cfg = {};
  cfg.min_support_fraction = 1.5;
  EXPECT_THROW(check_config(cfg), InvalidConfig);
}

// --- persistence ---------------------------------------------------------------

TEST(PatternFile, RoundTrips) {
  vidq::testing::TempDir dir("patterns");
  const auto ps = two_lanes();
  write_patterns(ps, dir / "p.jsonl");
  const auto back = read_patterns(dir / "p.jsonl");
  ASSERT_EQ(back.size(), ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(back[i].pattern_id, ps[i].pattern_id);
    EXPECT_EQ(back[i].span_length, ps[i].span_length);
    ASSERT_EQ(back[i].points.size(), ps[i].points.size());
    for (std::size_t j = 0; j < ps[i].points.size(); ++j) {
      EXPECT_EQ(back[i].points[j].frame_offset, ps[i].points[j].frame_offset);
      EXPECT_EQ(back[i].points[j].x, ps[i].points[j].x);
      EXPECT_EQ(back[i].points[j].y, ps[i].points[j].y);
    }
  }
  std::ofstream(dir / "p.jsonl", std::ios::app) << "{\"pattern_id\":9}\n";
  EXPECT_THROW(read_patterns(dir / "p.jsonl"), IoError);
}

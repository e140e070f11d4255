#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include "helpers.hpp"
#include "vidq/jsonl.hpp"
#include "vidq/oracle.hpp"
#include "vidq/rng.hpp"
#include "vidq/synthetic_oracle.hpp"

using namespace vidq;
using vidq::testing::LinearObject;
using vidq::testing::make_dataset;
using vidq::testing::share;

namespace {

const VideoMeta kMeta{"v", 10, 400, 1280, 720};

// Frames 0-199: two cars and a bus side by side. Frames 200-399: empty.
std::shared_ptr<const Dataset> street() {
  return share(make_dataset(kMeta, {{1, "car", 0, 199, {100, 100}, {2, 0}},
                                    {2, "car", 0, 199, {100, 300}, {2, 0}},
                                    {3, "bus", 0, 199, {100, 500}, {2, 0}}}));
}

Detection with_id(FrameIndex f, ObjectId id) {
  Detection d;
  d.frame = f;
  d.bbox = {0, 0, 10, 10};
  d.oracle_object_id = id;
  return d;
}

}  // namespace

TEST(SyntheticOracle, NoiselessFrameYieldsEveryObjectBeforeFiltering) {
  SyntheticOracle o(street(), NoiseModel::perfect());
  const auto spec = QuerySpec::selection("car");
  const auto dets = detect(o, 10, spec, OracleConfig{});
  EXPECT_EQ(dets.size(), 3u);
  for (const auto& d : dets) {
    EXPECT_FALSE(d.filter_score.has_value());
    EXPECT_DOUBLE_EQ(d.det_confidence, 0.8);
  }
  const auto passed = detect_and_filter(o, 10, spec, OracleConfig{});
  EXPECT_EQ(passed.size(), 2u);
}

TEST(SyntheticOracle, FullMissRateEmptiesEveryFrame) {
  auto noise = NoiseModel::perfect();
  noise.miss_rate = 1.0;
  SyntheticOracle o(street(), noise);
  for (FrameIndex f = 0; f < kMeta.frame_count; ++f) {
    ASSERT_TRUE(o.detect_candidates(f, QuerySpec::selection("car")).empty());
  }
}

TEST(SyntheticOracle, FalsePositiveRateMatchesOnEmptyFrames) {
  const VideoMeta meta{"empty", 10, 10000, 1280, 720};
  auto noise = NoiseModel{};
  noise.fp_rate_per_frame = 2.0;
  noise.rng_seed = 17;
  SyntheticOracle o(share(make_dataset(meta, {})), noise);
  OracleConfig all;
  all.stage1_threshold = 0.0;
  double total = 0.0;
  for (FrameIndex f = 0; f < meta.frame_count; ++f) {
    total += double(detect(o, f, QuerySpec::selection("car"), all).size());
  }
  EXPECT_NEAR(total / double(meta.frame_count), 2.0, 0.05);
}

TEST(SyntheticOracle, SigmaZeroFilterScoresAreTheModelMeans) {
  SyntheticOracle o(street(), NoiseModel::perfect());
  const auto spec = QuerySpec::selection("car");
  const auto scored = o.semantic_filter(o.detect_candidates(3, spec), spec);
  ASSERT_EQ(scored.size(), 3u);
  for (const auto& d : scored) {
    const double want = *d.oracle_object_id == 3 ? 0.25 : 0.85;
    EXPECT_DOUBLE_EQ(*d.filter_score, want);
  }
  EXPECT_TRUE(o.semantic_filter({}, spec).empty());
}

TEST(SyntheticOracle, FilterPreservesOrder) {
  SyntheticOracle o(street(), NoiseModel{});
  const auto spec = QuerySpec::selection("bus");
  const auto dets = o.detect_candidates(5, spec);
  const auto scored = o.semantic_filter(dets, spec);
  ASSERT_EQ(scored.size(), dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(scored[i].oracle_object_id, dets[i].oracle_object_id);
    EXPECT_EQ(scored[i].bbox, dets[i].bbox);
  }
}

TEST(SyntheticOracle, NonMatchingFilterTailIsAboutFivePercent) {
  // 10,000 distinct non-matching detections: 50 buses over 200 frames.
  std::vector<LinearObject> buses;
  for (int i = 0; i < 50; ++i) {
    buses.push_back({i + 1, "bus", 0, 199, {20.0 + 20 * (i % 10), 40.0 + 100 * (i / 10)}, {1, 0}});
  }
  const VideoMeta meta{"buses", 10, 200, 1280, 720};
  auto noise = NoiseModel{};
  noise.rng_seed = 3;
  SyntheticOracle o(share(make_dataset(meta, buses)), noise);
  const auto spec = QuerySpec::selection("car");
  int n = 0, pass = 0;
  for (FrameIndex f = 0; f < meta.frame_count; ++f) {
    for (const auto& d : o.semantic_filter(o.detect_candidates(f, spec), spec)) {
      ++n;
      pass += *d.filter_score >= 0.5;
    }
  }
  ASSERT_EQ(n, 10000);
  EXPECT_NEAR(double(pass) / n, 0.048, 0.01);
}

TEST(SyntheticOracle, ReidMeansWithSigmaZero) {
  SyntheticOracle o(street(), NoiseModel::perfect());
  EXPECT_DOUBLE_EQ(o.reid_similarity(with_id(1, 1), with_id(50, 1)), 0.85);
  EXPECT_DOUBLE_EQ(o.reid_similarity(with_id(1, 1), with_id(1, 2)), 0.30);
}

TEST(SyntheticOracle, ReidIsSymmetric) {
  auto noise = NoiseModel{};
  noise.fp_rate_per_frame = 1.0;
  SyntheticOracle o(street(), noise);
  CounterRng rng(9);
  OracleConfig all;
  all.stage1_threshold = 0.0;
  const auto spec = QuerySpec::selection("car");
  int checked = 0;
  while (checked < 1000) {
    const auto a = detect(o, FrameIndex(uniform_index(rng, 400)), spec, all);
    const auto b = detect(o, FrameIndex(uniform_index(rng, 400)), spec, all);
    if (a.empty() || b.empty()) continue;
    const auto& da = a[uniform_index(rng, a.size())];
    const auto& db = b[uniform_index(rng, b.size())];
    const double ab = o.reid_similarity(da, db);
    EXPECT_EQ(ab, o.reid_similarity(db, da));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    ++checked;
  }
}

TEST(SyntheticOracle, ScoresStayInUnitInterval) {
  auto noise = NoiseModel{};
  noise.tp_confidence = {0.9, 0.5};
  noise.filter_match = {0.9, 0.5};
  noise.fp_rate_per_frame = 3.0;
  SyntheticOracle o(street(), noise);
  const auto spec = QuerySpec::selection("car");
  for (FrameIndex f = 0; f < 400; ++f) {
    for (const auto& d : o.semantic_filter(o.detect_candidates(f, spec), spec)) {
      ASSERT_GE(d.det_confidence, 0.0);
      ASSERT_LE(d.det_confidence, 1.0);
      ASSERT_GE(*d.filter_score, 0.0);
      ASSERT_LE(*d.filter_score, 1.0);
    }
  }
}

TEST(SyntheticOracle, SameSeedSameStreamsInAnyVisitOrder) {
  auto noise = NoiseModel{};
  noise.miss_rate = 0.2;
  noise.fp_rate_per_frame = 0.5;
  noise.center_jitter_sigma = 2.0;
  noise.rng_seed = 5;
  SyntheticOracle a(street(), noise);
  SyntheticOracle b(street(), noise);
  const auto spec = QuerySpec::selection("car");
  std::vector<std::vector<Detection>> forward(400), backward(400);
  for (FrameIndex f = 0; f < 400; ++f) forward[std::size_t(f)] = a.detect_candidates(f, spec);
  for (FrameIndex f = 399; f >= 0; --f) backward[std::size_t(f)] = b.detect_candidates(f, spec);
  for (std::size_t f = 0; f < 400; ++f) {
    ASSERT_EQ(forward[f].size(), backward[f].size());
    for (std::size_t i = 0; i < forward[f].size(); ++i) {
      EXPECT_EQ(forward[f][i].bbox, backward[f][i].bbox);
      EXPECT_EQ(forward[f][i].det_confidence, backward[f][i].det_confidence);
    }
  }
}

TEST(SyntheticOracle, RaisingThresholdsNeverAddsDetections) {
  auto noise = NoiseModel{};
  noise.miss_rate = 0.1;
  noise.fp_rate_per_frame = 1.0;
  noise.rng_seed = 21;
  SyntheticOracle o(street(), noise);
  const auto spec = QuerySpec::selection("car");
  auto passing = [&](double s1, double ft, FrameIndex f) {
    OracleConfig cfg;
    cfg.stage1_threshold = s1;
    cfg.filter_threshold = ft;
    std::set<std::tuple<double, double, double, double>> keys;
    for (const auto& d : detect_and_filter(o, f, spec, cfg)) {
      keys.insert({d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max});
    }
    return keys;
  };
  for (FrameIndex f = 0; f < 400; f += 3) {
    for (double s1 : {0.0, 0.2, 0.35, 0.6}) {
      for (double ft : {0.0, 0.3, 0.5, 0.8}) {
        const auto low = passing(s1, ft, f);
        const auto high_s1 = passing(std::min(0.85, s1 + 0.2), ft, f);
        const auto high_ft = passing(s1, ft + 0.15, f);
        EXPECT_TRUE(std::includes(low.begin(), low.end(), high_s1.begin(), high_s1.end()));
        EXPECT_TRUE(std::includes(low.begin(), low.end(), high_ft.begin(), high_ft.end()));
      }
    }
  }
}

TEST(SyntheticOracle, JitterMovesBoxesByTheModelMagnitude) {
  auto noise = NoiseModel::perfect(4);
  noise.center_jitter_sigma = 2.0;
  auto data = street();
  SyntheticOracle o(data, noise);
  GroundTruthIndex truth(*data);
  double sum_abs = 0.0;
  int n = 0;
  for (FrameIndex f = 0; f < 200; ++f) {
    for (const auto& d : o.detect_candidates(f, QuerySpec::selection("car"))) {
      for (const auto* r : truth.records_at(f)) {
        if (r->object_id != *d.oracle_object_id) continue;
        sum_abs += std::abs(d.center().x - r->bbox.center().x);
        sum_abs += std::abs(d.center().y - r->bbox.center().y);
        n += 2;
      }
    }
  }
  // Mean absolute deviation of N(0, sigma) is sigma * sqrt(2 / pi).
  EXPECT_NEAR(sum_abs / n, 2.0 * std::sqrt(2.0 / std::numbers::pi), 0.05);
}

TEST(NoiseModel, InvalidValuesAreRejected) {
  NoiseModel n;
  n.miss_rate = 1.5;
  EXPECT_THROW(check_config(n), InvalidConfig);
  n = {};
  n.reid_same.sigma = -0.1;
  EXPECT_THROW(check_config(n), InvalidConfig);
  n = {};
  n.fp_rate_per_frame = -1;
  EXPECT_THROW(SyntheticOracle(street(), n), InvalidConfig);
}

TEST(OracleConfig, MiningBelowStageOneIsInvalid) {
  OracleConfig cfg;
  cfg.mining_threshold = 0.2;
  EXPECT_THROW(check_config(cfg), InvalidConfig);
  cfg = {};
  cfg.reid_threshold = 1.2;
  EXPECT_THROW(check_config(cfg), InvalidConfig);
}

// --- pseudo-label mining ---------------------------------------------------

TEST(MinePseudoLabels, OneHourStrideHundredSamples1080Frames) {
  const VideoMeta meta{"hour", 30, 108000, 1280, 720};
  SyntheticOracle o(share(make_dataset(meta, {})), NoiseModel::perfect());
  const auto labels = mine_pseudo_labels(o, meta, QuerySpec::selection("car"), 100, OracleConfig{});
  EXPECT_EQ(labels.frames_sampled, 1080);
}

TEST(MinePseudoLabels, ConfidenceMeansBelowMiningThresholdGiveNoPositives) {
  SyntheticOracle o(street(), NoiseModel::perfect());
  const auto labels = mine_pseudo_labels(o, kMeta, QuerySpec::selection("car"), 10, OracleConfig{});
  EXPECT_TRUE(labels.positives.empty());
  EXPECT_FALSE(labels.negatives.empty());
}

TEST(MinePseudoLabels, SplitRespectsThresholdAndIsDeterministic) {
  auto noise = NoiseModel{};
  noise.tp_confidence = {0.85, 0.1};
  noise.rng_seed = 2;
  SyntheticOracle a(street(), noise);
  SyntheticOracle b(street(), noise);
  OracleConfig cfg;
  const auto la = mine_pseudo_labels(a, kMeta, QuerySpec::selection("car"), 7, cfg);
  const auto lb = mine_pseudo_labels(b, kMeta, QuerySpec::selection("car"), 7, cfg);
  EXPECT_FALSE(la.positives.empty());
  for (const auto& p : la.positives) EXPECT_GE(p.det_confidence, cfg.mining_threshold);
  for (const auto& p : la.negatives) EXPECT_LT(p.det_confidence, cfg.mining_threshold);
  ASSERT_EQ(la.positives.size(), lb.positives.size());
  ASSERT_EQ(la.negatives.size(), lb.negatives.size());
  for (std::size_t i = 0; i < la.positives.size(); ++i) {
    EXPECT_EQ(la.positives[i].det_confidence, lb.positives[i].det_confidence);
  }
  vidq::testing::TempDir dir("pseudo");
  write_pseudo_labels(la, QuerySpec::selection("car"), dir / "labels.jsonl");
  const auto lines = jsonl::read(dir / "labels.jsonl", "vidq.pseudolabels");
  EXPECT_EQ(lines.size(), 1 + la.positives.size() + la.negatives.size());
}

TEST(MinePseudoLabels, StrideMustBePositive) {
  SyntheticOracle o(street(), NoiseModel::perfect());
  EXPECT_THROW(mine_pseudo_labels(o, kMeta, QuerySpec::selection("car"), 0, OracleConfig{}),
               InvalidConfig);
}

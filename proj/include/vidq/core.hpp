#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vidq/errors.hpp"

namespace vidq {

using FrameIndex = std::int64_t;
using ObjectId = std::int64_t;

struct VideoMeta {
  std::string video_id;
  int fps = 1;
  FrameIndex frame_count = 1;
  int width = 1;
  int height = 1;

  bool contains(FrameIndex f) const { return f >= 0 && f < frame_count; }
  double diagonal() const;
};

/// Throws InvalidConfig when any dimension is non-positive.
void check_meta(const VideoMeta& meta);

enum class QueryType { kSelection, kTopK, kAggregation };

const char* to_string(QueryType t);
QueryType parse_query_type(const std::string& s);

struct QuerySpec {
  std::string predicate_text;
  QueryType query_type = QueryType::kSelection;
  std::optional<int> k;  // present iff query_type == kTopK

  static QuerySpec selection(std::string predicate);
  static QuerySpec topk(std::string predicate, int k);
  static QuerySpec aggregation(std::string predicate);
};

void check_query(const QuerySpec& spec);

/// Case- and surrounding-whitespace-insensitive label comparison.
bool label_matches(const std::string& label, const std::string& predicate);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b);

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool well_formed() const { return x_min < x_max && y_min < y_max; }
  Point2 center() const {
    return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0};
  }
  double area() const { return (x_max - x_min) * (y_max - y_min); }
  BBox clamped(int width, int height) const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b);

struct Detection {
  FrameIndex frame = 0;
  BBox bbox;
  double det_confidence = 0.0;
  std::optional<double> filter_score;
  // Ground-truth identity from the synthetic provider. Only oracle providers
  // and evaluation code may read this.
  std::optional<ObjectId> oracle_object_id;

  Point2 center() const { return bbox.center(); }
};

struct TrajectoryPoint {
  FrameIndex frame = 0;
  double x = 0.0;
  double y = 0.0;
};

struct Trajectory {
  std::string track_id;
  std::vector<TrajectoryPoint> points;
};

/// Throws InvalidConfig unless the trajectory has >= 2 points in strictly
/// increasing frame order.
void check_trajectory(const Trajectory& t);

struct PatternPoint {
  FrameIndex frame_offset = 0;
  double x = 0.0;
  double y = 0.0;
};

struct MotionPattern {
  int pattern_id = 0;
  std::vector<PatternPoint> points;
  FrameIndex span_length = 0;
};

/// Builds a pattern from a trajectory, rebasing frame offsets to start at 0.
MotionPattern pattern_from_trajectory(const Trajectory& t, int pattern_id);

struct FrameSpan {
  FrameIndex start = 0;  // inclusive
  FrameIndex end = 0;    // inclusive

  bool contains(FrameIndex f) const { return f >= start && f <= end; }
  FrameIndex length() const { return end - start + 1; }

  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

struct ConfirmedTrack {
  std::string object_key;
  MotionPattern pattern;
  // Absolute frame that pattern offset 0 maps to.
  FrameIndex anchor_frame = 0;
  FrameSpan span;
  // The seed detection comes first.
  std::vector<Detection> supporting_detections;

  const Detection& seed() const { return supporting_detections.front(); }
};

struct SelectionResult {
  std::vector<FrameIndex> frames;  // ascending, unique
};

struct RankedFrame {
  FrameIndex frame = 0;
  int coverage = 0;
  double filter_sum = 0.0;
};

struct TopKResult {
  std::vector<RankedFrame> frames;  // best first
};

struct AggregationResult {
  double mean_objects_per_frame = 0.0;
};

using QueryResult = std::variant<SelectionResult, TopKResult, AggregationResult>;

}  // namespace vidq

#include "vidq/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vidq {

double VideoMeta::diagonal() const {
  return std::sqrt(double(width) * width + double(height) * height);
}

void check_meta(const VideoMeta& meta) {
  if (meta.fps < 1 || meta.frame_count < 1 || meta.width < 1 ||
      meta.height < 1) {
    throw InvalidConfig("video meta requires positive fps, frame_count, "
                        "width and height");
  }
}

const char* to_string(QueryType t) {
  switch (t) {
    case QueryType::kSelection:
      return "selection";
    case QueryType::kTopK:
      return "topk";
    case QueryType::kAggregation:
      return "aggregation";
  }
  return "?";
}

QueryType parse_query_type(const std::string& s) {
  if (s == "selection") return QueryType::kSelection;
  if (s == "topk") return QueryType::kTopK;
  if (s == "aggregation") return QueryType::kAggregation;
  throw InvalidConfig("unknown query type '" + s + "'");
}

QuerySpec QuerySpec::selection(std::string predicate) {
  return {std::move(predicate), QueryType::kSelection, std::nullopt};
}

QuerySpec QuerySpec::topk(std::string predicate, int k) {
  return {std::move(predicate), QueryType::kTopK, k};
}

QuerySpec QuerySpec::aggregation(std::string predicate) {
  return {std::move(predicate), QueryType::kAggregation, std::nullopt};
}

void check_query(const QuerySpec& spec) {
  if (spec.predicate_text.empty()) {
    throw InvalidConfig("query predicate must be nonempty");
  }
  const bool is_topk = spec.query_type == QueryType::kTopK;
  if (is_topk != spec.k.has_value()) {
    throw InvalidConfig("k must be given exactly for top-k queries");
  }
  if (is_topk && *spec.k < 1) {
    throw InvalidConfig("k must be positive");
  }
}

namespace {

std::string normalize(const std::string& s) {
  auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c);
  });
  auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) {
                return std::isspace(c);
              }).base();
  std::string out;
  if (first < last) out.assign(first, last);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

bool label_matches(const std::string& label, const std::string& predicate) {
  return normalize(label) == normalize(predicate);
}

double distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

BBox BBox::clamped(int width, int height) const {
  return {std::clamp(x_min, 0.0, double(width)),
          std::clamp(y_min, 0.0, double(height)),
          std::clamp(x_max, 0.0, double(width)),
          std::clamp(y_max, 0.0, double(height))};
}

double iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

void check_trajectory(const Trajectory& t) {
  if (t.points.size() < 2) {
    throw InvalidConfig("trajectory " + t.track_id + " has fewer than 2 points");
  }
  for (std::size_t i = 1; i < t.points.size(); ++i) {
    if (t.points[i].frame <= t.points[i - 1].frame) {
      throw InvalidConfig("trajectory " + t.track_id +
                          " frames are not strictly increasing");
    }
  }
}

MotionPattern pattern_from_trajectory(const Trajectory& t, int pattern_id) {
  MotionPattern p;
  p.pattern_id = pattern_id;
  if (t.points.empty()) return p;
  const FrameIndex base = t.points.front().frame;
  p.points.reserve(t.points.size());
  for (const auto& pt : t.points) {
    p.points.push_back({pt.frame - base, pt.x, pt.y});
  }
  p.span_length = p.points.back().frame_offset - p.points.front().frame_offset + 1;
  return p;
}

}  // namespace vidq

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vidq/core.hpp"

namespace vidq {

struct AnnotationRecord {
  FrameIndex frame = 0;
  ObjectId object_id = 0;
  BBox bbox;
  std::vector<std::string> labels;

  bool has_label(const std::string& predicate) const;
};

struct GroundTruthTrack {
  ObjectId object_id = 0;
  std::vector<TrajectoryPoint> points;
};

struct Dataset {
  VideoMeta meta;
  std::vector<AnnotationRecord> annotations;  // sorted by (frame, object_id)
  std::vector<GroundTruthTrack> tracks;       // sorted by object_id
  // Generator manifest extras; empty for ingested real datasets.
  std::map<std::string, double> realized_selectivity;
  std::vector<std::string> warnings;

  /// Sorts records and tracks into canonical order.
  void canonicalize();
};

enum class ViolationKind {
  kFrameOutOfRange,
  kMalformedBox,
  kDuplicateRecord,
  kNonMonotoneTrack,
  kShortTrack,
};

const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

/// Returns every violated invariant; empty means the dataset is valid.
std::vector<Violation> validate_dataset(
    const VideoMeta& meta, const std::vector<AnnotationRecord>& annotations,
    const std::vector<GroundTruthTrack>& tracks = {});

/// Per-frame lookup over the annotations of one dataset.
class GroundTruthIndex {
 public:
  explicit GroundTruthIndex(const Dataset& dataset);

  const VideoMeta& meta() const { return meta_; }
  /// Records visible in frame f (indices into the dataset's annotations).
  const std::vector<const AnnotationRecord*>& records_at(FrameIndex f) const;
  /// Number of objects matching the predicate in each frame.
  std::vector<int> count_per_frame(const std::string& predicate) const;
  /// Ascending frames holding at least one matching object.
  std::vector<FrameIndex> frames_with(const std::string& predicate) const;
  double selectivity(const std::string& predicate) const;
  /// Mean matching objects per frame.
  double mean_count(const std::string& predicate) const;
  std::vector<std::string> labels() const;

 private:
  VideoMeta meta_;
  std::vector<std::vector<const AnnotationRecord*>> by_frame_;
};

// File layout of a dataset directory.
inline constexpr const char* kManifestFile = "manifest.jsonl";
inline constexpr const char* kAnnotationFile = "annotations.jsonl";
inline constexpr const char* kTrackFile = "tracks.jsonl";

/// Writes manifest, annotations and tracks in canonical form. Each file is
/// written to a temporary name and renamed into place.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Reads a dataset directory. Malformed content raises IoError naming the line.
Dataset read_dataset(const std::filesystem::path& dir);

struct IngestReport {
  Dataset dataset;
  std::vector<Violation> violations;
};

IngestReport ingest(const std::filesystem::path& dir);

}  // namespace vidq

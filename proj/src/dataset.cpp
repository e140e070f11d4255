#include "vidq/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "vidq/jsonl.hpp"

namespace vidq {

namespace jsonl {

std::vector<Line> read(const std::filesystem::path& path,
                       const std::string& format) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), 0, "cannot open file");
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++number;
    if (text.empty()) continue;
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error& e) {
      throw IoError(path.string(), number, std::string("malformed line: ") + e.what());
    }
    if (!header_seen) {
      if (!value.is_object() || !value.contains("format") ||
          !value.contains("version")) {
        throw IoError(path.string(), number, "missing versioned header");
      }
      if (value["format"] != format) {
        throw IoError(path.string(), number,
                      "expected format '" + format + "'");
      }
      const std::string version = value["version"].get<std::string>();
      const int major = std::atoi(version.c_str());
      if (major != kMajorVersion) {
        throw IoError(path.string(), number,
                      "unsupported major version " + version);
      }
      header_seen = true;
      continue;
    }
    lines.push_back({number, std::move(value)});
  }
  if (!header_seen) throw IoError(path.string(), number, "empty file");
  return lines;
}

std::string serialize(const std::string& format,
                      const std::vector<json>& records) {
  std::string out = json{{"format", format}, {"version", kVersion}}.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string(), 0, "cannot open for writing");
    out << text;
    if (!out) throw IoError(tmp.string(), 0, "write failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace jsonl

bool AnnotationRecord::has_label(const std::string& predicate) const {
  return std::any_of(labels.begin(), labels.end(), [&](const std::string& l) {
    return label_matches(l, predicate);
  });
}

void Dataset::canonicalize() {
  std::sort(annotations.begin(), annotations.end(),
            [](const AnnotationRecord& a, const AnnotationRecord& b) {
              return std::tie(a.frame, a.object_id) <
                     std::tie(b.frame, b.object_id);
            });
  for (auto& a : annotations) std::sort(a.labels.begin(), a.labels.end());
  std::sort(tracks.begin(), tracks.end(),
            [](const GroundTruthTrack& a, const GroundTruthTrack& b) {
              return a.object_id < b.object_id;
            });
}

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kFrameOutOfRange:
      return "frame_out_of_range";
    case ViolationKind::kMalformedBox:
      return "malformed_box";
    case ViolationKind::kDuplicateRecord:
      return "duplicate_record";
    case ViolationKind::kNonMonotoneTrack:
      return "non_monotone_track";
    case ViolationKind::kShortTrack:
      return "short_track";
  }
  return "?";
}

std::vector<Violation> validate_dataset(
    const VideoMeta& meta, const std::vector<AnnotationRecord>& annotations,
    const std::vector<GroundTruthTrack>& tracks) {
  std::vector<Violation> out;
  std::set<std::pair<FrameIndex, ObjectId>> seen;
  for (const auto& a : annotations) {
    const std::string where = "frame " + std::to_string(a.frame) + " object " +
                              std::to_string(a.object_id);
    if (!meta.contains(a.frame)) {
      out.push_back({ViolationKind::kFrameOutOfRange, where});
    }
    if (!a.bbox.well_formed() || !a.bbox.clamped(meta.width, meta.height).well_formed()) {
      out.push_back({ViolationKind::kMalformedBox, where});
    }
    if (!seen.emplace(a.frame, a.object_id).second) {
      out.push_back({ViolationKind::kDuplicateRecord, where});
    }
  }
  for (const auto& t : tracks) {
    const std::string where = "track " + std::to_string(t.object_id);
    if (t.points.size() < 2) {
      out.push_back({ViolationKind::kShortTrack, where});
    }
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      if (!meta.contains(t.points[i].frame)) {
        out.push_back({ViolationKind::kFrameOutOfRange,
                       where + " point " + std::to_string(i)});
      }
      if (i > 0 && t.points[i].frame <= t.points[i - 1].frame) {
        out.push_back({ViolationKind::kNonMonotoneTrack,
                       where + " point " + std::to_string(i)});
        break;
      }
    }
  }
  return out;
}

GroundTruthIndex::GroundTruthIndex(const Dataset& dataset)
    : meta_(dataset.meta), by_frame_(std::size_t(dataset.meta.frame_count)) {
  for (const auto& a : dataset.annotations) {
    if (meta_.contains(a.frame)) by_frame_[std::size_t(a.frame)].push_back(&a);
  }
}

const std::vector<const AnnotationRecord*>& GroundTruthIndex::records_at(
    FrameIndex f) const {
  static const std::vector<const AnnotationRecord*> kEmpty;
  if (!meta_.contains(f)) return kEmpty;
  return by_frame_[std::size_t(f)];
}

std::vector<int> GroundTruthIndex::count_per_frame(
    const std::string& predicate) const {
  std::vector<int> counts(by_frame_.size(), 0);
  for (std::size_t f = 0; f < by_frame_.size(); ++f) {
    for (const auto* r : by_frame_[f]) counts[f] += r->has_label(predicate);
  }
  return counts;
}

std::vector<FrameIndex> GroundTruthIndex::frames_with(
    const std::string& predicate) const {
  std::vector<FrameIndex> frames;
  const auto counts = count_per_frame(predicate);
  for (std::size_t f = 0; f < counts.size(); ++f) {
    if (counts[f] > 0) frames.push_back(FrameIndex(f));
  }
  return frames;
}

double GroundTruthIndex::selectivity(const std::string& predicate) const {
  return double(frames_with(predicate).size()) / double(meta_.frame_count);
}

double GroundTruthIndex::mean_count(const std::string& predicate) const {
  long long total = 0;
  for (int c : count_per_frame(predicate)) total += c;
  return double(total) / double(meta_.frame_count);
}

std::vector<std::string> GroundTruthIndex::labels() const {
  std::set<std::string> labels;
  for (const auto& frame : by_frame_) {
    for (const auto* r : frame) labels.insert(r->labels.begin(), r->labels.end());
  }
  return {labels.begin(), labels.end()};
}

namespace {

using jsonl::json;

constexpr const char* kManifestFormat = "vidq.manifest";
constexpr const char* kAnnotationFormat = "vidq.annotations";
constexpr const char* kTrackFormat = "vidq.tracks";

template <class T>
T field(const jsonl::Line& line, const std::string& path, const char* key) {
  try {
    return line.value.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(path, line.number,
                  std::string("bad field '") + key + "': " + e.what());
  }
}

BBox parse_bbox(const jsonl::Line& line, const std::string& path) {
  const auto v = field<std::vector<double>>(line, path, "bbox");
  if (v.size() != 4) throw IoError(path, line.number, "bbox needs 4 numbers");
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Dataset d = dataset;
  d.canonicalize();

  const auto& m = d.meta;
  std::vector<json> manifest;
  manifest.push_back({{"video_id", m.video_id},
                      {"fps", m.fps},
                      {"frame_count", m.frame_count},
                      {"width", m.width},
                      {"height", m.height}});
  json sel = json::object();
  for (const auto& [label, s] : d.realized_selectivity) sel[label] = s;
  manifest.push_back({{"realized_selectivity", sel}});
  manifest.push_back({{"warnings", d.warnings}});
  jsonl::write_atomic(dir / kManifestFile,
                      jsonl::serialize(kManifestFormat, manifest));

  std::vector<json> records;
  records.reserve(d.annotations.size());
  for (const auto& a : d.annotations) {
    records.push_back(
        {{"frame", a.frame},
         {"object_id", a.object_id},
         {"bbox", {a.bbox.x_min, a.bbox.y_min, a.bbox.x_max, a.bbox.y_max}},
         {"labels", a.labels}});
  }
  jsonl::write_atomic(dir / kAnnotationFile,
                      jsonl::serialize(kAnnotationFormat, records));

  std::vector<json> tracks;
  for (const auto& t : d.tracks) {
    json pts = json::array();
    for (const auto& p : t.points) pts.push_back({p.frame, p.x, p.y});
    tracks.push_back({{"object_id", t.object_id}, {"points", pts}});
  }
  jsonl::write_atomic(dir / kTrackFile, jsonl::serialize(kTrackFormat, tracks));
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset d;
  {
    const auto path = (dir / kManifestFile).string();
    const auto lines = jsonl::read(path, kManifestFormat);
    for (const auto& line : lines) {
      const auto& v = line.value;
      if (v.contains("video_id")) {
        d.meta.video_id = field<std::string>(line, path, "video_id");
        d.meta.fps = field<int>(line, path, "fps");
        d.meta.frame_count = field<FrameIndex>(line, path, "frame_count");
        d.meta.width = field<int>(line, path, "width");
        d.meta.height = field<int>(line, path, "height");
      } else if (v.contains("realized_selectivity")) {
        d.realized_selectivity =
            field<std::map<std::string, double>>(line, path, "realized_selectivity");
      } else if (v.contains("warnings")) {
        d.warnings = field<std::vector<std::string>>(line, path, "warnings");
      } else {
        throw IoError(path, line.number, "unknown manifest record");
      }
    }
    try {
      check_meta(d.meta);
    } catch (const InvalidConfig& e) {
      throw IoError(path, 0, e.what());
    }
  }
  {
    const auto path = (dir / kAnnotationFile).string();
    for (const auto& line : jsonl::read(path, kAnnotationFormat)) {
      AnnotationRecord a;
      a.frame = field<FrameIndex>(line, path, "frame");
      a.object_id = field<ObjectId>(line, path, "object_id");
      a.bbox = parse_bbox(line, path);
      a.labels = field<std::vector<std::string>>(line, path, "labels");
      d.annotations.push_back(std::move(a));
    }
  }
  {
    const auto path = (dir / kTrackFile).string();
    if (std::filesystem::exists(path)) {
      for (const auto& line : jsonl::read(path, kTrackFormat)) {
        GroundTruthTrack t;
        t.object_id = field<ObjectId>(line, path, "object_id");
        for (const auto& p : field<std::vector<std::vector<double>>>(line, path, "points")) {
          if (p.size() != 3) {
            throw IoError(path, line.number, "track point needs [frame,x,y]");
          }
          t.points.push_back({FrameIndex(p[0]), p[1], p[2]});
        }
        d.tracks.push_back(std::move(t));
      }
    }
  }
  return d;
}

IngestReport ingest(const std::filesystem::path& dir) {
  IngestReport report;
  report.dataset = read_dataset(dir);
  report.violations = validate_dataset(report.dataset.meta,
                                       report.dataset.annotations,
                                       report.dataset.tracks);
  return report;
}

}  // namespace vidq

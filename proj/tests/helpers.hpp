#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vidq/dataset.hpp"

namespace vidq::testing {

/// An object moving in a straight line at constant velocity.
struct LinearObject {
  ObjectId id = 1;
  std::string label = "car";
  FrameIndex first = 0;
  FrameIndex last = 0;
  Point2 start;
  Point2 velocity;  // px per frame
  double w = 40.0;
  double h = 30.0;
};

inline Dataset make_dataset(const VideoMeta& meta, const std::vector<LinearObject>& objects) {
  Dataset d;
  d.meta = meta;
  for (const auto& o : objects) {
    GroundTruthTrack t;
    t.object_id = o.id;
    for (FrameIndex f = o.first; f <= o.last; ++f) {
      const double dt = double(f - o.first);
      const double cx = o.start.x + o.velocity.x * dt;
      const double cy = o.start.y + o.velocity.y * dt;
      BBox b{cx - o.w / 2, cy - o.h / 2, cx + o.w / 2, cy + o.h / 2};
      const Point2 c = b.center();
      t.points.push_back({f, c.x, c.y});
      d.annotations.push_back({f, o.id, b, {o.label}});
    }
    d.tracks.push_back(std::move(t));
  }
  d.canonicalize();
  return d;
}

inline std::shared_ptr<const Dataset> share(Dataset d) {
  return std::make_shared<const Dataset>(std::move(d));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vidq-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace vidq::testing

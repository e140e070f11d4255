#include "vidq/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "vidq/jsonl.hpp"
#include "vidq/rng.hpp"

namespace vidq {

using nlohmann::json;

namespace {

constexpr const char* kConfigFormat = "vidq.config";
constexpr const char* kSceneFormat = "vidq.scene";

/// Reads optional keys from one object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InvalidConfig("section '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) {
        throw InvalidConfig("unknown key '" + key + "' in section '" + name_ + "'");
      }
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidConfig("bad value for '" + name_ + "." + key + "': " + e.what());
    }
  }

  void get(const char* key, ScoreModel& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array() || v.size() != 2) {
      throw InvalidConfig("'" + name_ + "." + key + "' must be [mean, sigma]");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  void get_us(const char* key, std::chrono::microseconds& out) {
    std::int64_t us = out.count();
    get(key, us);
    out = std::chrono::microseconds(us);
  }

  void mark(const char* key) { used_.insert(key); }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> used_;
};

void check_header(const json& j, const char* format) {
  if (!j.is_object()) throw InvalidConfig("config must be a JSON object");
  if (!j.contains("format") || j["format"] != format) {
    throw InvalidConfig(std::string("expected format '") + format + "'");
  }
  const auto version = j.value("version", std::string());
  if (std::atoi(version.c_str()) != jsonl::kMajorVersion) {
    throw InvalidConfig("unsupported config version '" + version + "'");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    // byte offset -> line number
    const std::string text = ss.str();
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) line += text[i] == '\n';
    throw IoError(path.string(), line, e.what());
  }
}

}  // namespace

json to_json(const RunConfig& cfg) {
  const auto& e = cfg.engine;
  const auto& n = cfg.noise;
  auto score = [](const ScoreModel& m) { return json::array({m.mean, m.sigma}); };
  return {
      {"format", kConfigFormat},
      {"version", jsonl::kVersion},
      {"bandit",
       {{"num_segments", e.bandit.num_segments},
        {"max_rounds", e.bandit.max_rounds},
        {"alpha0", e.bandit.alpha0},
        {"beta0", e.bandit.beta0},
        {"relevance_threshold", e.bandit.relevance_threshold},
        {"rng_seed", e.bandit.rng_seed}}},
      {"oracle",
       {{"stage1_threshold", e.oracle.stage1_threshold},
        {"mining_threshold", e.oracle.mining_threshold},
        {"filter_threshold", e.oracle.filter_threshold},
        {"reid_threshold", e.oracle.reid_threshold}}},
      {"patterns",
       {{"init_window", e.patterns.init_window},
        {"num_clusters", e.patterns.num_clusters},
        {"fuzzifier", e.patterns.fuzzifier},
        {"resample_points", e.patterns.resample_points},
        {"fcm_tol", e.patterns.fcm_tol},
        {"fcm_max_iter", e.patterns.fcm_max_iter},
        {"fcm_restarts", e.patterns.fcm_restarts},
        {"k_candidates", e.patterns.k_candidates},
        {"n_confirm", e.patterns.n_confirm},
        {"cost_gate_fraction", e.patterns.cost_gate_fraction},
        {"require_corroboration", e.patterns.require_corroboration},
        {"min_support_fraction", e.patterns.min_support_fraction},
        {"rng_seed", e.patterns.rng_seed}}},
      {"engine",
       {{"scan_stride", e.scan_stride},
        {"dedup_iou", e.dedup_iou},
        {"selection_includes_rejected", e.selection_includes_rejected},
        {"merge_overlapping_tracks", e.merge_overlapping_tracks}}},
      {"noise",
       {{"miss_rate", n.miss_rate},
        {"fp_rate_per_frame", n.fp_rate_per_frame},
        {"center_jitter_sigma", n.center_jitter_sigma},
        {"tp_confidence", score(n.tp_confidence)},
        {"fp_confidence", score(n.fp_confidence)},
        {"filter_match", score(n.filter_match)},
        {"filter_nonmatch", score(n.filter_nonmatch)},
        {"reid_same", score(n.reid_same)},
        {"reid_different", score(n.reid_different)},
        {"fp_box_width", n.fp_box_width},
        {"fp_box_height", n.fp_box_height},
        {"rng_seed", n.rng_seed}}},
      {"latency",
       {{"detect_us", cfg.latency.detect.count()},
        {"filter_us", cfg.latency.filter.count()},
        {"reid_us", cfg.latency.reid.count()}}},
  };
}

RunConfig run_config_from_json(const json& j) {
  check_header(j, kConfigFormat);
  RunConfig cfg;
  auto& e = cfg.engine;
  auto& n = cfg.noise;
  Section top(j, "<root>");
  top.mark("format");
  top.mark("version");
  const json empty = json::object();
  auto section = [&](const char* name) -> const json& {
    top.mark(name);
    return j.contains(name) ? j.at(name) : empty;
  };
  {
    Section s(section("bandit"), "bandit");
    s.get("num_segments", e.bandit.num_segments);
    s.get("max_rounds", e.bandit.max_rounds);
    s.get("alpha0", e.bandit.alpha0);
    s.get("beta0", e.bandit.beta0);
    s.get("relevance_threshold", e.bandit.relevance_threshold);
    s.get("rng_seed", e.bandit.rng_seed);
  }
  {
    Section s(section("oracle"), "oracle");
    s.get("stage1_threshold", e.oracle.stage1_threshold);
    s.get("mining_threshold", e.oracle.mining_threshold);
    s.get("filter_threshold", e.oracle.filter_threshold);
    s.get("reid_threshold", e.oracle.reid_threshold);
  }
  {
    Section s(section("patterns"), "patterns");
    s.get("init_window", e.patterns.init_window);
    s.get("num_clusters", e.patterns.num_clusters);
    s.get("fuzzifier", e.patterns.fuzzifier);
    s.get("resample_points", e.patterns.resample_points);
    s.get("fcm_tol", e.patterns.fcm_tol);
    s.get("fcm_max_iter", e.patterns.fcm_max_iter);
    s.get("fcm_restarts", e.patterns.fcm_restarts);
    s.get("k_candidates", e.patterns.k_candidates);
    s.get("n_confirm", e.patterns.n_confirm);
    s.get("cost_gate_fraction", e.patterns.cost_gate_fraction);
    s.get("require_corroboration", e.patterns.require_corroboration);
    s.get("min_support_fraction", e.patterns.min_support_fraction);
    s.get("rng_seed", e.patterns.rng_seed);
  }
  {
    Section s(section("engine"), "engine");
    s.get("scan_stride", e.scan_stride);
    s.get("dedup_iou", e.dedup_iou);
    s.get("selection_includes_rejected", e.selection_includes_rejected);
    s.get("merge_overlapping_tracks", e.merge_overlapping_tracks);
  }
  {
    Section s(section("noise"), "noise");
    s.get("miss_rate", n.miss_rate);
    s.get("fp_rate_per_frame", n.fp_rate_per_frame);
    s.get("center_jitter_sigma", n.center_jitter_sigma);
    s.get("tp_confidence", n.tp_confidence);
    s.get("fp_confidence", n.fp_confidence);
    s.get("filter_match", n.filter_match);
    s.get("filter_nonmatch", n.filter_nonmatch);
    s.get("reid_same", n.reid_same);
    s.get("reid_different", n.reid_different);
    s.get("fp_box_width", n.fp_box_width);
    s.get("fp_box_height", n.fp_box_height);
    s.get("rng_seed", n.rng_seed);
  }
  {
    Section s(section("latency"), "latency");
    s.get_us("detect_us", cfg.latency.detect);
    s.get_us("filter_us", cfg.latency.filter);
    s.get_us("reid_us", cfg.latency.reid);
  }
  check_config(cfg.engine);
  check_config(cfg.noise);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json_file(path));
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  jsonl::write_atomic(path, to_json(cfg).dump(2) + "\n");
}

std::string config_hash(const RunConfig& cfg) {
  const auto h = hash_tag(to_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const SceneSpec& spec) {
  json lanes = json::array();
  for (const auto& l : spec.lanes) {
    json pts = json::array();
    for (const auto& p : l.waypoints) pts.push_back({p.x, p.y});
    lanes.push_back({{"waypoints", pts}, {"speed_min", l.speed_min}, {"speed_max", l.speed_max}});
  }
  json objects = json::array();
  for (const auto& c : spec.objects) {
    json o = {{"label", c.label},
              {"spawn_rate_per_min", c.spawn_rate_per_min},
              {"lane_weights", c.lane_weights},
              {"box_width", c.box_width},
              {"box_height", c.box_height}};
    if (c.target_selectivity) o["target_selectivity"] = *c.target_selectivity;
    objects.push_back(o);
  }
  return {{"format", kSceneFormat},
          {"version", jsonl::kVersion},
          {"video_id", spec.video_id},
          {"duration_s", spec.duration_s},
          {"fps", spec.fps},
          {"width", spec.width},
          {"height", spec.height},
          {"lanes", lanes},
          {"objects", objects},
          {"min_headway_s", spec.min_headway_s},
          {"max_spawn_rate_per_min", spec.max_spawn_rate_per_min},
          {"selectivity_tolerance", spec.selectivity_tolerance},
          {"rng_seed", spec.rng_seed}};
}

SceneSpec scene_from_json(const json& j) {
  check_header(j, kSceneFormat);
  SceneSpec spec;
  Section s(j, "scene");
  s.mark("format");
  s.mark("version");
  s.get("video_id", spec.video_id);
  s.get("duration_s", spec.duration_s);
  s.get("fps", spec.fps);
  s.get("width", spec.width);
  s.get("height", spec.height);
  s.get("min_headway_s", spec.min_headway_s);
  s.get("max_spawn_rate_per_min", spec.max_spawn_rate_per_min);
  s.get("selectivity_tolerance", spec.selectivity_tolerance);
  s.get("rng_seed", spec.rng_seed);
  s.mark("lanes");
  s.mark("objects");
  if (j.contains("lanes")) {
    spec.lanes.clear();
    for (const auto& lj : j.at("lanes")) {
      Lane lane;
      Section ls(lj, "lane");
      ls.get("speed_min", lane.speed_min);
      ls.get("speed_max", lane.speed_max);
      std::vector<std::vector<double>> pts;
      ls.get("waypoints", pts);
      for (const auto& p : pts) {
        if (p.size() != 2) throw InvalidConfig("waypoint must be [x, y]");
        lane.waypoints.push_back({p[0], p[1]});
      }
      spec.lanes.push_back(std::move(lane));
    }
  } else {
    spec.lanes = default_lanes();
  }
  if (j.contains("objects")) {
    for (const auto& oj : j.at("objects")) {
      ObjectClass c;
      Section os(oj, "object");
      os.get("label", c.label);
      os.get("spawn_rate_per_min", c.spawn_rate_per_min);
      os.get("lane_weights", c.lane_weights);
      os.get("box_width", c.box_width);
      os.get("box_height", c.box_height);
      double target = -1.0;
      os.get("target_selectivity", target);
      if (oj.contains("target_selectivity")) c.target_selectivity = target;
      spec.objects.push_back(std::move(c));
    }
  }
  check_scene(spec);
  return spec;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  return scene_from_json(read_json_file(path));
}

}  // namespace vidq

#include "vidq/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vidq/rng.hpp"

namespace vidq {

void check_scene(const SceneSpec& spec) {
  if (!(spec.duration_s > 0.0) || spec.fps < 1 || spec.width < 1 || spec.height < 1) {
    throw InvalidConfig("scene needs positive duration, fps and frame size");
  }
  if (spec.lanes.empty()) throw InvalidConfig("scene needs at least one lane");
  for (const auto& lane : spec.lanes) {
    if (lane.waypoints.size() < 2) throw InvalidConfig("lane needs >= 2 waypoints");
    if (!(lane.speed_min > 0.0) || lane.speed_max < lane.speed_min) {
      throw InvalidConfig("lane speed range must be positive and ordered");
    }
    for (const auto& p : lane.waypoints) {
      if (p.x < 0 || p.y < 0 || p.x > spec.width || p.y > spec.height) {
        throw InvalidConfig("lane waypoint outside the frame");
      }
    }
  }
  for (const auto& c : spec.objects) {
    if (c.spawn_rate_per_min < 0.0) throw InvalidConfig("spawn rates must be >= 0");
    if (c.target_selectivity && (*c.target_selectivity < 0.0 || *c.target_selectivity > 1.0)) {
      throw InvalidConfig("target selectivity must lie in [0, 1]");
    }
    if (!c.lane_weights.empty() && c.lane_weights.size() != spec.lanes.size()) {
      throw InvalidConfig("lane_weights must match the number of lanes");
    }
    if (!(c.box_width > 0.0) || !(c.box_height > 0.0)) {
      throw InvalidConfig("box size must be positive");
    }
  }
}

std::vector<Lane> default_lanes() {
  return {
      {{{40, 250}, {640, 240}, {1240, 255}}, 140.0, 140.0},
      {{{40, 310}, {640, 300}, {1240, 315}}, 120.0, 120.0},
      {{{1240, 420}, {640, 410}, {40, 425}}, 130.0, 130.0},
      {{{1240, 480}, {640, 470}, {40, 485}}, 150.0, 150.0},
      {{{200, 690}, {600, 610}, {1240, 570}}, 110.0, 110.0},
      {{{1180, 40}, {900, 140}, {600, 180}, {40, 185}}, 125.0, 125.0},
  };
}

SceneSpec default_scene(std::uint64_t seed) {
  SceneSpec s;
  s.video_id = "scene-" + std::to_string(seed);
  s.lanes = default_lanes();
  ObjectClass truck{"white semi-truck", 1.0, {}, 0.03, 64.0, 36.0};
  ObjectClass suv{"suv with roof rack", 4.0, {}, 0.4, 52.0, 34.0};
  ObjectClass sedan{"sedan", 12.0, {}, 0.9, 46.0, 30.0};
  s.objects = {truck, suv, sedan};
  s.rng_seed = seed;
  return s;
}

SceneSpec selectivity_preset_scene(double target, std::uint64_t seed) {
  SceneSpec s;
  s.video_id = "preset-" + std::to_string(seed);
  s.lanes = default_lanes();
  s.objects = {
      {"white semi-truck", 1.0, {}, target, 64.0, 36.0},
      {"sedan", 6.0, {}, std::nullopt, 46.0, 30.0},
      {"van", 3.0, {}, std::nullopt, 50.0, 34.0},
  };
  s.rng_seed = seed;
  return s;
}

namespace {

struct LanePath {
  std::vector<Point2> pts;
  std::vector<double> cumulative;

  explicit LanePath(const Lane& lane) : pts(lane.waypoints) {
    cumulative.assign(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      cumulative[i] = cumulative[i - 1] + distance(pts[i - 1], pts[i]);
    }
  }
  double length() const { return cumulative.back(); }
  Point2 at(double s) const {
    if (s <= 0.0) return pts.front();
    if (s >= length()) return pts.back();
    std::size_t i = 1;
    while (cumulative[i] < s) ++i;
    const double a = (s - cumulative[i - 1]) / (cumulative[i] - cumulative[i - 1]);
    return {pts[i - 1].x + a * (pts[i].x - pts[i - 1].x),
            pts[i - 1].y + a * (pts[i].y - pts[i - 1].y)};
  }
};

// One arrival before rate scaling: unit-rate arrival time plus its lane and
// speed draws. Scaling only the time keeps the rest fixed across rates.
struct Arrival {
  double unit_time = 0.0;
  double lane_u = 0.0;
  double speed_u = 0.0;
};

struct Spawn {
  std::size_t cls = 0;
  std::size_t lane = 0;
  FrameIndex first = 0;
  FrameIndex last = 0;
  double px_per_frame = 0.0;
};

std::vector<Arrival> unit_arrivals(const SceneSpec& spec, std::size_t cls) {
  // Enough unit-rate arrivals for the maximum spawn rate.
  const double max_units = spec.max_spawn_rate_per_min * spec.duration_s / 60.0;
  auto rng = CounterRng::stream(spec.rng_seed, "arrivals", {cls});
  std::vector<Arrival> out;
  double t = 0.0;
  for (;;) {
    t += -std::log(uniform_open0(rng));
    if (t > max_units) break;
    out.push_back({t, uniform01(rng), uniform01(rng)});
  }
  return out;
}

std::size_t pick_lane(const SceneSpec& spec, const ObjectClass& cls, double u) {
  const std::size_t n = spec.lanes.size();
  if (cls.lane_weights.empty()) return std::min(n - 1, std::size_t(u * double(n)));
  double total = 0.0;
  for (double w : cls.lane_weights) total += w;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += cls.lane_weights[i] / total;
    if (u < acc) return i;
  }
  return n - 1;
}

struct Simulation {
  const SceneSpec& spec;
  std::vector<LanePath> paths;
  std::vector<std::vector<Arrival>> arrivals;
  FrameIndex frame_count = 0;

  explicit Simulation(const SceneSpec& s) : spec(s) {
    for (const auto& lane : s.lanes) paths.emplace_back(lane);
    for (std::size_t c = 0; c < s.objects.size(); ++c) arrivals.push_back(unit_arrivals(s, c));
    frame_count = std::max<FrameIndex>(1, FrameIndex(std::llround(s.duration_s * s.fps)));
  }

  std::vector<Spawn> spawns(const std::vector<double>& rates) const {
    std::vector<Spawn> all;
    for (std::size_t c = 0; c < rates.size(); ++c) {
      if (rates[c] <= 0.0) continue;
      const auto& cls = spec.objects[c];
      for (const auto& a : arrivals[c]) {
        const double t_s = a.unit_time / rates[c] * 60.0;
        const auto first = FrameIndex(std::floor(t_s * spec.fps));
        if (first >= frame_count) break;
        const std::size_t lane = pick_lane(spec, cls, a.lane_u);
        const auto& l = spec.lanes[lane];
        const double speed = l.speed_min + a.speed_u * (l.speed_max - l.speed_min);
        const double ppf = speed / spec.fps;
        const FrameIndex duration = FrameIndex(std::floor(paths[lane].length() / ppf));
        if (first + 1 >= frame_count || duration < 1) continue;
        all.push_back({c, lane, first, std::min(first + duration, frame_count - 1), ppf});
      }
    }
    std::stable_sort(all.begin(), all.end(), [](const Spawn& a, const Spawn& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.cls < b.cls;
    });
    // Enforce headway per lane.
    const auto headway = FrameIndex(std::ceil(spec.min_headway_s * spec.fps));
    std::vector<FrameIndex> last_spawn(spec.lanes.size(), -(headway + 1));
    std::vector<Spawn> kept;
    for (const auto& s : all) {
      if (s.first - last_spawn[s.lane] < headway) continue;
      last_spawn[s.lane] = s.first;
      kept.push_back(s);
    }
    return kept;
  }

  std::vector<double> selectivity(const std::vector<Spawn>& spawns) const {
    const std::size_t nc = spec.objects.size();
    std::vector<std::vector<int>> delta(nc, std::vector<int>(std::size_t(frame_count) + 1, 0));
    for (const auto& s : spawns) {
      ++delta[s.cls][std::size_t(s.first)];
      --delta[s.cls][std::size_t(s.last + 1)];
    }
    std::vector<double> out(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
      int running = 0;
      long long covered = 0;
      for (FrameIndex f = 0; f < frame_count; ++f) {
        running += delta[c][std::size_t(f)];
        covered += running > 0;
      }
      out[c] = double(covered) / double(frame_count);
    }
    return out;
  }
};

double round_to(double v, double step) { return std::round(v / step) * step; }

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Dataset generate_scene(const SceneSpec& spec) {
  check_scene(spec);
  Simulation sim(spec);
  std::vector<double> rates;
  for (const auto& c : spec.objects) rates.push_back(c.spawn_rate_per_min);

  Dataset d;
  // Calibrate targeted classes one at a time. Classes sharing lanes are
  // coupled through headway, so sweep until all targets hold.
  auto all_within = [&] {
    const auto r = sim.selectivity(sim.spawns(rates));
    for (std::size_t c = 0; c < spec.objects.size(); ++c) {
      const auto& t = spec.objects[c].target_selectivity;
      if (t && std::abs(r[c] - *t) > 0.25 * spec.selectivity_tolerance) return false;
    }
    return true;
  };
  for (int sweep = 0; sweep < 8 && !all_within(); ++sweep) {
    for (std::size_t c = 0; c < spec.objects.size(); ++c) {
      const auto& target = spec.objects[c].target_selectivity;
      if (!target) continue;
      auto realized = [&](double rate) {
        auto r = rates;
        r[c] = rate;
        return sim.selectivity(sim.spawns(r))[c];
      };
      double lo = 0.0;
      double hi = spec.max_spawn_rate_per_min;
      double best_rate = rates[c];
      double best_err = std::abs(realized(best_rate) - *target);
      for (int it = 0; it < 60 && best_err > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double s = realized(mid);
        const double err = std::abs(s - *target);
        if (err < best_err) {
          best_err = err;
          best_rate = mid;
        }
        (s < *target ? lo : hi) = mid;
      }
      // Selectivity is a step function of the rate; scan near the bisection
      // result for a closer step.
      const double centre = best_rate;
      for (int i = -60; i <= 60 && best_err > 0.0 && centre > 0.0; ++i) {
        const double rate = centre * std::exp(0.005 * i);
        const double err = std::abs(realized(rate) - *target);
        if (err < best_err) {
          best_err = err;
          best_rate = rate;
        }
      }
      rates[c] = best_rate;
    }
  }

  const auto spawns = sim.spawns(rates);
  const auto realized = sim.selectivity(spawns);
  for (std::size_t c = 0; c < spec.objects.size(); ++c) {
    const auto& cls = spec.objects[c];
    d.realized_selectivity[cls.label] = realized[c];
    if (cls.target_selectivity &&
        std::abs(realized[c] - *cls.target_selectivity) > spec.selectivity_tolerance) {
      d.warnings.push_back("label '" + cls.label + "': target selectivity " +
                           format_double(*cls.target_selectivity) +
                           " unreachable, realized " + format_double(realized[c]));
    }
  }

  d.meta = {spec.video_id, spec.fps, sim.frame_count, spec.width, spec.height};
  ObjectId next_id = 1;
  for (const auto& s : spawns) {
    const auto& cls = spec.objects[s.cls];
    const auto& path = sim.paths[s.lane];
    GroundTruthTrack track;
    track.object_id = next_id++;
    for (FrameIndex f = s.first; f <= s.last; ++f) {
      const Point2 p = path.at(s.px_per_frame * double(f - s.first));
      BBox box{round_to(p.x - cls.box_width / 2, 0.01), round_to(p.y - cls.box_height / 2, 0.01),
               round_to(p.x + cls.box_width / 2, 0.01), round_to(p.y + cls.box_height / 2, 0.01)};
      box = box.clamped(spec.width, spec.height);
      // Track points are box centers so detections and tracks agree exactly.
      const Point2 c = box.center();
      track.points.push_back({f, c.x, c.y});
      d.annotations.push_back({f, track.object_id, box, {cls.label}});
    }
    d.tracks.push_back(std::move(track));
  }
  d.canonicalize();
  return d;
}

}  // namespace vidq

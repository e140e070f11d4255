#include "vidq/synthetic_oracle.hpp"

#include <algorithm>
#include <bit>
#include <thread>

#include "vidq/rng.hpp"

namespace vidq {

NoiseModel NoiseModel::perfect(std::uint64_t seed) {
  NoiseModel n;
  n.tp_confidence.sigma = 0.0;
  n.fp_confidence.sigma = 0.0;
  n.filter_match.sigma = 0.0;
  n.filter_nonmatch.sigma = 0.0;
  n.reid_same.sigma = 0.0;
  n.reid_different.sigma = 0.0;
  n.rng_seed = seed;
  return n;
}

void check_config(const NoiseModel& n) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(n.miss_rate)) throw InvalidConfig("miss_rate must lie in [0, 1]");
  if (n.fp_rate_per_frame < 0.0) throw InvalidConfig("fp_rate_per_frame must be >= 0");
  if (n.center_jitter_sigma < 0.0) throw InvalidConfig("jitter sigma must be >= 0");
  for (const auto* m : {&n.tp_confidence, &n.fp_confidence, &n.filter_match,
                        &n.filter_nonmatch, &n.reid_same, &n.reid_different}) {
    if (m->sigma < 0.0) throw InvalidConfig("score sigmas must be >= 0");
  }
}

namespace {

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::uint64_t bbox_key(const BBox& b) {
  std::uint64_t h = hash_combine(bits(b.x_min), bits(b.y_min));
  h = hash_combine(h, bits(b.x_max));
  return hash_combine(h, bits(b.y_max));
}

void simulate(std::chrono::microseconds us) {
  if (us.count() > 0) std::this_thread::sleep_for(us);
}

}  // namespace

SyntheticOracle::SyntheticOracle(std::shared_ptr<const Dataset> dataset,
                                 NoiseModel noise, SimulatedLatency latency)
    : dataset_(std::move(dataset)),
      index_(*dataset_),
      noise_(noise),
      latency_(latency) {
  check_config(noise_);
}

std::vector<Detection> SyntheticOracle::detect_candidates(FrameIndex frame,
                                                          const QuerySpec&) {
  simulate(latency_.detect);
  std::vector<Detection> out;
  const auto& meta = dataset_->meta;
  for (const auto* rec : index_.records_at(frame)) {
    auto rng = CounterRng::stream(noise_.rng_seed, "detect",
                                  {std::uint64_t(frame), std::uint64_t(rec->object_id)});
    // Draw everything up front so each quantity keeps its slot in the stream.
    const double miss = uniform01(rng);
    const double conf = clipped_normal(rng, noise_.tp_confidence.mean,
                                       noise_.tp_confidence.sigma);
    const double dx = noise_.center_jitter_sigma * standard_normal(rng);
    const double dy = noise_.center_jitter_sigma * standard_normal(rng);
    if (miss < noise_.miss_rate) continue;
    Detection d;
    d.frame = frame;
    d.bbox = rec->bbox;
    if (noise_.center_jitter_sigma > 0.0) {
      d.bbox = BBox{rec->bbox.x_min + dx, rec->bbox.y_min + dy,
                    rec->bbox.x_max + dx, rec->bbox.y_max + dy}
                   .clamped(meta.width, meta.height);
      if (!d.bbox.well_formed()) continue;
    }
    d.det_confidence = conf;
    d.oracle_object_id = rec->object_id;
    out.push_back(d);
  }
  if (noise_.fp_rate_per_frame > 0.0) {
    auto rng = CounterRng::stream(noise_.rng_seed, "false-positive",
                                  {std::uint64_t(frame)});
    const auto n = poisson(rng, noise_.fp_rate_per_frame);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double cx = uniform01(rng) * meta.width;
      const double cy = uniform01(rng) * meta.height;
      const double conf = clipped_normal(rng, noise_.fp_confidence.mean,
                                         noise_.fp_confidence.sigma);
      const BBox box = BBox{cx - noise_.fp_box_width / 2, cy - noise_.fp_box_height / 2,
                            cx + noise_.fp_box_width / 2, cy + noise_.fp_box_height / 2}
                           .clamped(meta.width, meta.height);
      if (!box.well_formed()) continue;
      Detection d;
      d.frame = frame;
      d.bbox = box;
      d.det_confidence = conf;
      out.push_back(d);
    }
  }
  return out;
}

const AnnotationRecord* SyntheticOracle::record_for(const Detection& d) const {
  if (!d.oracle_object_id) return nullptr;
  for (const auto* rec : index_.records_at(d.frame)) {
    if (rec->object_id == *d.oracle_object_id) return rec;
  }
  return nullptr;
}

std::uint64_t SyntheticOracle::identity_key(const Detection& d) const {
  if (d.oracle_object_id) {
    return hash_combine(hash_combine(1, std::uint64_t(d.frame)),
                        std::uint64_t(*d.oracle_object_id));
  }
  return hash_combine(hash_combine(2, std::uint64_t(d.frame)), bbox_key(d.bbox));
}

std::vector<Detection> SyntheticOracle::semantic_filter(
    std::vector<Detection> detections, const QuerySpec& spec) {
  if (!detections.empty()) simulate(latency_.filter);
  const auto predicate = hash_tag(spec.predicate_text);
  for (auto& d : detections) {
    const auto* rec = record_for(d);
    const bool match = rec != nullptr && rec->has_label(spec.predicate_text);
    const auto& model = match ? noise_.filter_match : noise_.filter_nonmatch;
    auto rng = CounterRng::stream(noise_.rng_seed, "filter",
                                  {predicate, identity_key(d)});
    d.filter_score = clipped_normal(rng, model.mean, model.sigma);
  }
  return detections;
}

double SyntheticOracle::reid_similarity(const Detection& a, const Detection& b) {
  simulate(latency_.reid);
  const bool same = a.oracle_object_id && b.oracle_object_id &&
                    *a.oracle_object_id == *b.oracle_object_id;
  const bool identical = identity_key(a) == identity_key(b);
  const auto& model = (same || identical) ? noise_.reid_same : noise_.reid_different;
  const auto ka = identity_key(a);
  const auto kb = identity_key(b);
  auto rng = CounterRng::stream(noise_.rng_seed, "reid",
                                {std::min(ka, kb), std::max(ka, kb)});
  return clipped_normal(rng, model.mean, model.sigma);
}

std::vector<Trajectory> SyntheticOracle::init_trajectories(const VideoMeta&,
                                                           FrameIndex window) {
  std::vector<Trajectory> out;
  for (const auto& track : dataset_->tracks) {
    Trajectory t;
    t.track_id = std::to_string(track.object_id);
    for (const auto& p : track.points) {
      if (p.frame < 0 || p.frame >= window) continue;
      TrajectoryPoint q = p;
      if (noise_.center_jitter_sigma > 0.0) {
        auto rng = CounterRng::stream(noise_.rng_seed, "track",
                                      {std::uint64_t(track.object_id), std::uint64_t(p.frame)});
        q.x += noise_.center_jitter_sigma * standard_normal(rng);
        q.y += noise_.center_jitter_sigma * standard_normal(rng);
      }
      t.points.push_back(q);
    }
    if (t.points.size() >= 2) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace vidq

#include "vidq/oracle.hpp"

#include <algorithm>

#include "vidq/jsonl.hpp"

namespace vidq {

namespace {

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void check_config(const OracleConfig& cfg) {
  if (!unit(cfg.stage1_threshold) || !unit(cfg.mining_threshold) ||
      !unit(cfg.filter_threshold) || !unit(cfg.reid_threshold)) {
    throw InvalidConfig("oracle thresholds must lie in [0, 1]");
  }
  if (cfg.mining_threshold < cfg.stage1_threshold) {
    throw InvalidConfig("mining_threshold must be >= stage1_threshold");
  }
}

std::vector<Detection> detect(DetectionOracle& oracle, FrameIndex frame,
                              const QuerySpec& spec, const OracleConfig& cfg) {
  auto dets = oracle.detect_candidates(frame, spec);
  std::erase_if(dets, [&](const Detection& d) {
    return d.det_confidence < cfg.stage1_threshold;
  });
  return dets;
}

bool passes_filter(const Detection& d, const OracleConfig& cfg) {
  return d.filter_score.has_value() && *d.filter_score >= cfg.filter_threshold;
}

std::vector<Detection> detect_and_filter(DetectionOracle& oracle, FrameIndex frame,
                                         const QuerySpec& spec,
                                         const OracleConfig& cfg) {
  auto dets = detect(oracle, frame, spec, cfg);
  if (dets.empty()) return dets;
  dets = oracle.semantic_filter(std::move(dets), spec);
  std::erase_if(dets, [&](const Detection& d) { return !passes_filter(d, cfg); });
  return dets;
}

PseudoLabelSet mine_pseudo_labels(DetectionOracle& oracle, const VideoMeta& meta,
                                  const QuerySpec& spec, FrameIndex sampling_stride,
                                  const OracleConfig& cfg) {
  if (sampling_stride < 1) throw InvalidConfig("sampling_stride must be >= 1");
  PseudoLabelSet out;
  for (FrameIndex f = 0; f < meta.frame_count; f += sampling_stride) {
    ++out.frames_sampled;
    for (const auto& d : detect(oracle, f, spec, cfg)) {
      PseudoLabel label{d.frame, d.bbox, d.det_confidence};
      if (d.det_confidence >= cfg.mining_threshold) {
        out.positives.push_back(label);
      } else {
        out.negatives.push_back(label);
      }
    }
  }
  return out;
}

void write_pseudo_labels(const PseudoLabelSet& labels, const QuerySpec& spec,
                         const std::filesystem::path& path) {
  using jsonl::json;
  std::vector<json> records;
  records.push_back({{"predicate", spec.predicate_text},
                     {"frames_sampled", labels.frames_sampled}});
  auto emit = [&](const PseudoLabel& l, int label) {
    records.push_back(
        {{"frame", l.frame},
         {"bbox", {l.bbox.x_min, l.bbox.y_min, l.bbox.x_max, l.bbox.y_max}},
         {"conf", l.det_confidence},
         {"label", label}});
  };
  for (const auto& l : labels.positives) emit(l, 1);
  for (const auto& l : labels.negatives) emit(l, 0);
  jsonl::write_atomic(path, jsonl::serialize("vidq.pseudolabels", records));
}

}  // namespace vidq

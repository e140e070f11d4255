#include "vidq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace vidq {

PrecisionRecall f1_score(const std::vector<FrameIndex>& predicted,
                         const std::vector<FrameIndex>& truth) {
  std::vector<FrameIndex> p = predicted;
  std::vector<FrameIndex> t = truth;
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (p.empty() && t.empty()) return {1.0, 1.0, 1.0};
  if (p.empty() || t.empty()) return {0.0, 0.0, 0.0};
  std::vector<FrameIndex> common;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(),
                        std::back_inserter(common));
  const double tp = double(common.size());
  PrecisionRecall r;
  r.precision = tp / double(p.size());
  r.recall = tp / double(t.size());
  r.f1 = tp == 0.0 ? 0.0 : 2.0 * tp / double(p.size() + t.size());
  return r;
}

double mape(double predicted, double truth) {
  if (truth == 0.0) {
    throw UndefinedDenominator("MAPE is undefined when the true value is 0");
  }
  return std::abs(predicted - truth) / std::abs(truth);
}

PrecisionAtK precision_at_k(const std::vector<FrameIndex>& returned,
                            const std::vector<bool>& relevant, int k) {
  if (returned.size() > std::size_t(std::max(k, 0))) {
    throw InvalidConfig("precision_at_k: more than k frames returned");
  }
  if (returned.empty()) return {0.0, true};
  std::size_t hits = 0;
  for (auto f : returned) {
    if (f >= 0 && std::size_t(f) < relevant.size() && relevant[std::size_t(f)]) ++hits;
  }
  return {double(hits) / double(returned.size()), false};
}

std::vector<bool> topk_relevance(const std::vector<int>& counts, int k) {
  std::vector<bool> out(counts.size(), false);
  if (counts.empty() || k < 1) return out;
  std::vector<int> sorted = counts;
  const auto kth = std::min<std::size_t>(std::size_t(k), sorted.size()) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + std::ptrdiff_t(kth), sorted.end(),
                   std::greater<>());
  const int cutoff = std::max(sorted[kth], 1);
  for (std::size_t f = 0; f < counts.size(); ++f) out[f] = counts[f] >= cutoff;
  return out;
}

EvalReport evaluate(const QuerySpec& spec, const QueryResult& result,
                    const GroundTruthIndex* truth,
                    const std::map<std::string, double>& stage_seconds) {
  if (truth == nullptr) {
    throw EvaluationUnavailable("no ground truth available for evaluation");
  }
  check_query(spec);
  EvalReport report;
  report.query_type = spec.query_type;
  report.stage_seconds = stage_seconds;
  const auto& predicate = spec.predicate_text;
  switch (spec.query_type) {
    case QueryType::kSelection: {
      const auto* sel = std::get_if<SelectionResult>(&result);
      if (!sel) throw InvalidConfig("result does not match a selection query");
      const auto pr = f1_score(sel->frames, truth->frames_with(predicate));
      report.precision = pr.precision;
      report.recall = pr.recall;
      report.f1 = pr.f1;
      break;
    }
    case QueryType::kAggregation: {
      const auto* agg = std::get_if<AggregationResult>(&result);
      if (!agg) throw InvalidConfig("result does not match an aggregation query");
      try {
        report.mape = mape(agg->mean_objects_per_frame, truth->mean_count(predicate));
      } catch (const UndefinedDenominator& e) {
        report.warnings.push_back(e.what());
      }
      break;
    }
    case QueryType::kTopK: {
      const auto* top = std::get_if<TopKResult>(&result);
      if (!top) throw InvalidConfig("result does not match a top-k query");
      std::vector<FrameIndex> frames;
      for (const auto& r : top->frames) frames.push_back(r.frame);
      const auto relevance = topk_relevance(truth->count_per_frame(predicate), *spec.k);
      const auto p = precision_at_k(frames, relevance, *spec.k);
      report.precision_at_k = p.precision;
      if (p.empty_warning) report.warnings.push_back("top-k result is empty");
      break;
    }
  }
  return report;
}

}  // namespace vidq

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vidq/core.hpp"
#include "vidq/dataset.hpp"

namespace vidq {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Frame-set precision / recall / F1. Both sets empty scores a perfect 1.
PrecisionRecall f1_score(const std::vector<FrameIndex>& predicted,
                         const std::vector<FrameIndex>& truth);

/// |predicted - truth| / truth. Throws UndefinedDenominator when truth == 0.
double mape(double predicted, double truth);

struct PrecisionAtK {
  double precision = 0.0;
  bool empty_warning = false;
};

/// Share of returned frames that are relevant; empty input scores 0 with a
/// warning flag.
PrecisionAtK precision_at_k(const std::vector<FrameIndex>& returned,
                            const std::vector<bool>& relevant, int k);

/// Frames counting as correct top-k answers: those whose true count reaches
/// the k-th largest true count (and is positive).
std::vector<bool> topk_relevance(const std::vector<int>& counts, int k);

struct EvalReport {
  QueryType query_type = QueryType::kSelection;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> mape;
  std::optional<double> precision_at_k;
  std::vector<std::string> warnings;
  std::map<std::string, double> stage_seconds;
};

/// Scores a result against ground truth. Throws EvaluationUnavailable when
/// `truth` is null.
EvalReport evaluate(const QuerySpec& spec, const QueryResult& result,
                    const GroundTruthIndex* truth,
                    const std::map<std::string, double>& stage_seconds = {});

}  // namespace vidq

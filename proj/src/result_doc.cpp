#include "vidq/result_doc.hpp"

#include <cmath>

#include "vidq/jsonl.hpp"

namespace vidq {

ResultDocument make_result_document(const QueryRun& run, const VideoMeta& meta,
                                    const RunConfig& cfg) {
  ResultDocument doc;
  doc.spec = run.spec;
  doc.video_id = meta.video_id;
  doc.config_hash = config_hash(cfg);
  doc.seeds = {{"bandit", cfg.engine.bandit.rng_seed},
               {"patterns", cfg.engine.patterns.rng_seed},
               {"noise", cfg.noise.rng_seed}};
  doc.confirmed_tracks = int(run.tracks.size());
  doc.rejected_seeds = int(run.rejected.size());
  doc.frames_probed = int(run.probes.size());
  doc.degraded = run.degraded;
  doc.result = run.result;
  doc.stage_seconds = run.stage_seconds;
  return doc;
}

using jsonl::json;

namespace {

double round_ms(double s) { return std::round(s * 1000.0) / 1000.0; }

json spec_json(const QuerySpec& spec) {
  json j = {{"kind", "spec"},
            {"predicate", spec.predicate_text},
            {"query_type", to_string(spec.query_type)}};
  if (spec.k) j["k"] = *spec.k;
  return j;
}

json result_json(const QueryResult& result) {
  json j = {{"kind", "result"}};
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SelectionResult>) {
          j["frames"] = r.frames;
        } else if constexpr (std::is_same_v<T, TopKResult>) {
          json frames = json::array();
          for (const auto& f : r.frames) {
            frames.push_back(
                {{"frame", f.frame}, {"coverage", f.coverage}, {"filter_sum", f.filter_sum}});
          }
          j["ranked"] = frames;
        } else {
          j["mean_objects_per_frame"] = r.mean_objects_per_frame;
        }
      },
      result);
  return j;
}

json metrics_json(const EvalReport& m) {
  json j = {{"kind", "metrics"}, {"query_type", to_string(m.query_type)}};
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("precision", m.precision);
  put("recall", m.recall);
  put("f1", m.f1);
  put("mape", m.mape);
  put("precision_at_k", m.precision_at_k);
  j["warnings"] = m.warnings;
  return j;
}

json timings_json(const std::map<std::string, double>& stages) {
  json s = json::object();
  for (const auto& [name, secs] : stages) s[name] = round_ms(secs);
  return {{"kind", "timings"}, {"stage_seconds", s}};
}

std::vector<json> records(const ResultDocument& doc, bool with_timings) {
  std::vector<json> out;
  out.push_back(spec_json(doc.spec));
  out.push_back({{"kind", "run"},
                 {"video_id", doc.video_id},
                 {"config_hash", doc.config_hash},
                 {"seeds", doc.seeds},
                 {"confirmed_tracks", doc.confirmed_tracks},
                 {"rejected_seeds", doc.rejected_seeds},
                 {"frames_probed", doc.frames_probed},
                 {"degraded", doc.degraded}});
  out.push_back(result_json(doc.result));
  if (doc.metrics) out.push_back(metrics_json(*doc.metrics));
  if (with_timings) out.push_back(timings_json(doc.stage_seconds));
  return out;
}

}  // namespace

std::string serialize_result(const ResultDocument& doc) {
  return jsonl::serialize(kResultFormat, records(doc, true));
}

std::string serialize_result_without_timings(const ResultDocument& doc) {
  return jsonl::serialize(kResultFormat, records(doc, false));
}

void write_result(const ResultDocument& doc, const std::filesystem::path& path) {
  jsonl::write_atomic(path, serialize_result(doc));
}

ResultDocument read_result(const std::filesystem::path& path) {
  ResultDocument doc;
  bool have_spec = false;
  bool have_result = false;
  const std::string p = path.string();
  for (const auto& line : jsonl::read(path, kResultFormat)) {
    const auto& v = line.value;
    try {
      const std::string kind = v.at("kind").get<std::string>();
      if (kind == "spec") {
        doc.spec.predicate_text = v.at("predicate").get<std::string>();
        doc.spec.query_type = parse_query_type(v.at("query_type").get<std::string>());
        if (v.contains("k")) doc.spec.k = v.at("k").get<int>();
        check_query(doc.spec);
        have_spec = true;
      } else if (kind == "run") {
        doc.video_id = v.at("video_id").get<std::string>();
        doc.config_hash = v.at("config_hash").get<std::string>();
        doc.seeds = v.at("seeds").get<std::map<std::string, std::uint64_t>>();
        doc.confirmed_tracks = v.value("confirmed_tracks", 0);
        doc.rejected_seeds = v.value("rejected_seeds", 0);
        doc.frames_probed = v.value("frames_probed", 0);
        doc.degraded = v.value("degraded", false);
      } else if (kind == "result") {
        if (!have_spec) throw IoError(p, line.number, "result before spec");
        switch (doc.spec.query_type) {
          case QueryType::kSelection:
            doc.result = SelectionResult{v.at("frames").get<std::vector<FrameIndex>>()};
            break;
          case QueryType::kTopK: {
            TopKResult r;
            for (const auto& f : v.at("ranked")) {
              r.frames.push_back({f.at("frame").get<FrameIndex>(), f.at("coverage").get<int>(),
                                  f.at("filter_sum").get<double>()});
            }
            doc.result = std::move(r);
            break;
          }
          case QueryType::kAggregation:
            doc.result = AggregationResult{v.at("mean_objects_per_frame").get<double>()};
            break;
        }
        have_result = true;
      } else if (kind == "metrics") {
        EvalReport m;
        m.query_type = parse_query_type(v.at("query_type").get<std::string>());
        auto get = [&](const char* key, std::optional<double>& out) {
          if (v.contains(key)) out = v.at(key).get<double>();
        };
        get("precision", m.precision);
        get("recall", m.recall);
        get("f1", m.f1);
        get("mape", m.mape);
        get("precision_at_k", m.precision_at_k);
        m.warnings = v.value("warnings", std::vector<std::string>{});
        doc.metrics = std::move(m);
      } else if (kind == "timings") {
        doc.stage_seconds = v.at("stage_seconds").get<std::map<std::string, double>>();
      } else {
        throw IoError(p, line.number, "unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw IoError(p, line.number, e.what());
    } catch (const InvalidConfig& e) {
      throw IoError(p, line.number, e.what());
    }
  }
  if (!have_spec || !have_result) throw IoError(p, 0, "result document incomplete");
  return doc;
}

}  // namespace vidq

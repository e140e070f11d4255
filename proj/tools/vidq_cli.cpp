#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "vidq/bench.hpp"
#include "vidq/config.hpp"
#include "vidq/engine.hpp"
#include "vidq/metrics.hpp"
#include "vidq/result_doc.hpp"
#include "vidq/scene.hpp"
#include "vidq/synthetic_oracle.hpp"
#include "vidq/wire.hpp"

namespace {

using namespace vidq;

std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream in(cmd);
  std::vector<std::string> argv;
  for (std::string tok; in >> tok;) argv.push_back(tok);
  return argv;
}

void print_report(const EvalReport& r) {
  auto show = [](const char* name, const std::optional<double>& v) {
    if (v) std::cout << name << "\t" << *v << "\n";
  };
  show("precision", r.precision);
  show("recall", r.recall);
  show("f1", r.f1);
  show("mape", r.mape);
  show("precision_at_k", r.precision_at_k);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

struct GenerateArgs {
  std::string out;
  std::string scene_file;
  std::uint64_t seed = 1;
  std::optional<double> selectivity;
  std::optional<double> duration_s;
  std::optional<int> fps;
};

int cmd_generate(const GenerateArgs& a) {
  SceneSpec spec;
  if (!a.scene_file.empty()) {
    spec = load_scene(a.scene_file);
  } else if (a.selectivity) {
    spec = selectivity_preset_scene(*a.selectivity, a.seed);
  } else {
    spec = default_scene(a.seed);
  }
  if (a.duration_s) spec.duration_s = *a.duration_s;
  if (a.fps) spec.fps = *a.fps;
  const auto data = generate_scene(spec);
  write_dataset(data, a.out);
  std::cout << "frames\t" << data.meta.frame_count << "\n";
  std::cout << "objects\t" << data.tracks.size() << "\n";
  for (const auto& [label, s] : data.realized_selectivity) {
    std::cout << "selectivity\t" << label << "\t" << s << "\n";
  }
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_ingest(const std::string& dir) {
  const auto report = ingest(dir);
  const auto& d = report.dataset;
  GroundTruthIndex index(d);
  std::cout << "video\t" << d.meta.video_id << "\n";
  std::cout << "frames\t" << d.meta.frame_count << "\n";
  std::cout << "records\t" << d.annotations.size() << "\n";
  std::cout << "tracks\t" << d.tracks.size() << "\n";
  for (const auto& label : index.labels()) {
    std::cout << "selectivity\t" << label << "\t" << index.selectivity(label) << "\n";
  }
  for (const auto& v : report.violations) {
    std::cerr << "violation: " << to_string(v.kind) << ": " << v.detail << "\n";
  }
  return report.violations.empty() ? 0 : 2;
}

struct QueryArgs {
  std::string dataset;
  std::string predicate;
  std::string type = "selection";
  std::optional<int> k;
  std::string config;
  std::string out = "result.jsonl";
  std::string provider;
  int provider_timeout_ms = 10000;
  std::string observations;
  std::string load_patterns;
  std::string save_patterns;
  bool evaluate = false;
};

int cmd_query(const QueryArgs& a) {
  const RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  auto data = std::make_shared<const Dataset>(read_dataset(a.dataset));
  QuerySpec spec;
  const auto type = parse_query_type(a.type);
  if (type == QueryType::kTopK) {
    if (!a.k) throw InvalidConfig("--k is required for topk queries");
    spec = QuerySpec::topk(a.predicate, *a.k);
  } else {
    if (a.k) throw InvalidConfig("--k only applies to topk queries");
    spec = type == QueryType::kSelection ? QuerySpec::selection(a.predicate)
                                         : QuerySpec::aggregation(a.predicate);
  }

  std::unique_ptr<DetectionOracle> oracle;
  if (a.provider.empty()) {
    oracle = std::make_unique<SyntheticOracle>(data, cfg.noise, cfg.latency);
  } else {
    std::vector<Trajectory> tracks;
    for (const auto& t : data->tracks) {
      tracks.push_back({std::to_string(t.object_id), t.points});
    }
    oracle = std::make_unique<ExternalOracle>(
        std::make_unique<SubprocessTransport>(split_command(a.provider),
                                              std::chrono::milliseconds(a.provider_timeout_ms)),
        std::move(tracks));
  }

  std::optional<std::vector<MotionPattern>> cached;
  if (!a.load_patterns.empty()) cached = read_patterns(a.load_patterns);
  const auto run =
      execute_query(data->meta, spec, *oracle, cfg.engine, cached ? &*cached : nullptr);
  if (!a.save_patterns.empty()) write_patterns(run.patterns, a.save_patterns);
  if (!a.observations.empty()) write_observation_log(run.localization.log, a.observations);

  auto doc = make_result_document(run, data->meta, cfg);
  if (a.evaluate) {
    GroundTruthIndex truth(*data);
    doc.metrics = vidq::evaluate(spec, run.result, &truth, run.stage_seconds);
    print_report(*doc.metrics);
  }
  write_result(doc, a.out);
  std::cout << "tracks\t" << doc.confirmed_tracks << "\n";
  std::cout << "frames_probed\t" << doc.frames_probed << "\n";
  for (const auto& [stage, s] : run.stage_seconds) std::cout << stage << "\t" << s << "\n";
  std::cout << "result\t" << a.out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& result_path, const std::string& dataset,
                 const std::string& out) {
  auto doc = read_result(result_path);
  const auto data = read_dataset(dataset);
  if (data.meta.video_id != doc.video_id) {
    std::cerr << "warning: result was produced on video '" << doc.video_id << "', not '"
              << data.meta.video_id << "'\n";
  }
  GroundTruthIndex truth(data);
  doc.metrics = vidq::evaluate(doc.spec, doc.result, &truth, doc.stage_seconds);
  print_report(*doc.metrics);
  if (!out.empty()) write_result(doc, out);
  return 0;
}

struct BenchArgs {
  std::uint64_t seed = 1;
  std::optional<double> duration_s;
  std::string config;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  auto opts = default_bench_options();
  if (!a.config.empty()) opts.run = load_run_config(a.config);
  opts.scene_seed = a.seed;
  if (a.duration_s) opts.duration_s = *a.duration_s;
  const auto table = format_bench_table(run_bench(opts));
  std::cout << table;
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw IoError(a.out, 0, "cannot write file");
    f << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video query engine: synthetic data, query execution and evaluation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Synthesize a scene dataset");
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--scene", gen.scene_file, "Scene spec file")->check(CLI::ExistingFile);
  g->add_option("--seed", gen.seed, "Scene seed");
  g->add_option("--selectivity", gen.selectivity,
                "Use the preset scene with this target selectivity")
      ->check(CLI::Range(0.0, 1.0));
  g->add_option("--duration", gen.duration_s, "Duration in seconds");
  g->add_option("--fps", gen.fps, "Frames per second");

  std::string ingest_dir;
  auto* in = app.add_subcommand("ingest", "Validate a dataset directory");
  in->add_option("dataset", ingest_dir, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  QueryArgs q;
  auto* qc = app.add_subcommand("query", "Run a query and write a result document");
  qc->add_option("--dataset", q.dataset, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  qc->add_option("--predicate", q.predicate, "Object predicate")->required();
  qc->add_option("--type", q.type, "selection, topk or aggregation")
      ->check(CLI::IsMember({"selection", "topk", "aggregation"}));
  qc->add_option("--k", q.k, "Frames to return for topk")->check(CLI::PositiveNumber);
  qc->add_option("--config", q.config, "Run config file")->check(CLI::ExistingFile);
  qc->add_option("--out", q.out, "Result document path");
  qc->add_option("--provider", q.provider, "External detector command (wire protocol)");
  qc->add_option("--provider-timeout-ms", q.provider_timeout_ms, "Per-request timeout");
  qc->add_option("--observations", q.observations, "Write the bandit observation log");
  qc->add_option("--load-patterns", q.load_patterns, "Reuse cached motion patterns")
      ->check(CLI::ExistingFile);
  qc->add_option("--save-patterns", q.save_patterns, "Write motion patterns");
  qc->add_flag("--evaluate", q.evaluate, "Score against the dataset's ground truth");

  std::string eval_result;
  std::string eval_dataset;
  std::string eval_out;
  auto* ev = app.add_subcommand("evaluate", "Score a result document against ground truth");
  ev->add_option("--result", eval_result, "Result document")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--dataset", eval_dataset, "Dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ev->add_option("--out", eval_out, "Write the result document with metrics");

  BenchArgs b;
  auto* bc = app.add_subcommand("bench", "Stage runtimes over the selectivity presets");
  bc->add_option("--seed", b.seed, "Scene seed");
  bc->add_option("--duration", b.duration_s, "Scene duration in seconds");
  bc->add_option("--config", b.config, "Run config file")->check(CLI::ExistingFile);
  bc->add_option("--out", b.out, "Also write the table here");

  std::string config_out;
  auto* cc = app.add_subcommand("config", "Write the default run config");
  cc->add_option("--out", config_out, "Config path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return cmd_generate(gen);
    if (*in) return cmd_ingest(ingest_dir);
    if (*qc) return cmd_query(q);
    if (*ev) return cmd_evaluate(eval_result, eval_dataset, eval_out);
    if (*bc) return cmd_bench(b);
    if (*cc) {
      save_run_config(RunConfig{}, config_out);
      return 0;
    }
  } catch (const vidq::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

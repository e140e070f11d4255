#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "helpers.hpp"
#include "vidq/config.hpp"
#include "vidq/dataset.hpp"
#include "vidq/result_doc.hpp"

using namespace vidq;
using vidq::testing::slurp;
using vidq::testing::TempDir;

namespace {

struct Outcome {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with `args` (already shell-quoted) and captures both streams.
Outcome vidq_cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + VIDQ_CLI + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Outcome o;
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    const auto o = vidq_cli(*dir_, "generate --out '" + data().string() + "' --seed 2 --duration 120");
    ASSERT_EQ(o.status, 0) << o.err;
    RunConfig perfect;
    perfect.noise = NoiseModel::perfect();
    save_run_config(perfect, *dir_ / "perfect.json");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::filesystem::path data() { return *dir_ / "data"; }
  static std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }
  static inline TempDir* dir_ = nullptr;
};

}  // namespace

TEST_F(Cli, GenerateWritesAValidDataset) {
  const auto report = ingest(data());
  EXPECT_TRUE(report.violations.empty());
  EXPECT_EQ(report.dataset.meta.frame_count, 1200);
  const auto o = vidq_cli(*dir_, "ingest " + q(data()));
  EXPECT_EQ(o.status, 0) << o.err;
  EXPECT_NE(o.out.find("sedan"), std::string::npos);
}

TEST_F(Cli, IngestFlagsViolationsWithExitStatus) {
  TempDir bad("cli-bad");
  write_dataset(read_dataset(data()), bad.path());
  std::ofstream(bad / kAnnotationFile, std::ios::app)
      << R"({"frame":5,"object_id":900,"bbox":[9,9,1,1],"labels":["sedan"]})" << "\n";
  EXPECT_EQ(vidq_cli(bad, "ingest " + q(bad.path())).status, 2);
}

TEST_F(Cli, TopKQueryReturnsAtMostKFrames) {
  const auto out = *dir_ / "topk.jsonl";
  const auto o = vidq_cli(*dir_, "query --dataset " + q(data()) +
                                     " --predicate 'white semi-truck' --type topk --k 5 --out " + q(out));
  ASSERT_EQ(o.status, 0) << o.err;
  const auto doc = read_result(out);
  EXPECT_LE(std::get<TopKResult>(doc.result).frames.size(), 5u);
  EXPECT_EQ(doc.config_hash, config_hash(RunConfig{}));
  EXPECT_EQ(doc.seeds.count("bandit"), 1u);
}

TEST_F(Cli, EvaluateOnAPerfectRunScoresOne) {
  const auto out = *dir_ / "sel.jsonl";
  const auto scored = *dir_ / "sel-scored.jsonl";
  ASSERT_EQ(vidq_cli(*dir_, "query --dataset " + q(data()) + " --predicate sedan --config " +
                                q(*dir_ / "perfect.json") + " --out " + q(out))
                .status,
            0);
  const auto o = vidq_cli(*dir_, "evaluate --result " + q(out) + " --dataset " + q(data()) +
                                     " --out " + q(scored));
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_NE(o.out.find("f1\t1"), std::string::npos) << o.out;
  EXPECT_EQ(*read_result(scored).metrics->f1, 1.0);
}

TEST_F(Cli, QueryIsDeterministicApartFromTimings) {
  const auto a = *dir_ / "agg-a.jsonl";
  const auto b = *dir_ / "agg-b.jsonl";
  for (const auto& p : {a, b}) {
    ASSERT_EQ(vidq_cli(*dir_, "query --dataset " + q(data()) +
                                  " --predicate 'suv with roof rack' --type aggregation --out " + q(p))
                  .status,
              0);
  }
  EXPECT_EQ(serialize_result_without_timings(read_result(a)),
            serialize_result_without_timings(read_result(b)));
}

TEST_F(Cli, ExternalProviderGivesTheSameAnswer) {
  const auto local = *dir_ / "local.jsonl";
  const auto remote = *dir_ / "remote.jsonl";
  const auto cfg = *dir_ / "perfect.json";
  ASSERT_EQ(vidq_cli(*dir_, "query --dataset " + q(data()) + " --predicate sedan --config " + q(cfg) +
                                " --out " + q(local))
                .status,
            0);
  const std::string provider = std::string(VIDQ_MOCK_BRIDGE) + " --dataset " + data().string() +
                               " --config " + cfg.string();
  const auto o = vidq_cli(*dir_, "query --dataset " + q(data()) + " --predicate sedan --config " + q(cfg) +
                                     " --provider '" + provider + "' --out " + q(remote));
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_EQ(std::get<SelectionResult>(read_result(local).result).frames,
            std::get<SelectionResult>(read_result(remote).result).frames);
}

TEST_F(Cli, UsageErrorsExitNonZero) {
  EXPECT_NE(vidq_cli(*dir_, "").status, 0);
  EXPECT_NE(vidq_cli(*dir_, "query --dataset " + q(data()) + " --predicate x --bogus").status, 0);
  EXPECT_NE(vidq_cli(*dir_, "query --dataset /nonexistent/dir --predicate x").status, 0);
  EXPECT_NE(vidq_cli(*dir_, "evaluate --result /nonexistent.jsonl --dataset " + q(data())).status, 0);
  EXPECT_NE(vidq_cli(*dir_, "query --dataset " + q(data()) + " --predicate x --type topk").status, 0);
  EXPECT_NE(vidq_cli(*dir_, "frobnicate").status, 0);
}

TEST_F(Cli, ConfigCommandWritesLoadableDefaults) {
  const auto p = *dir_ / "default.json";
  ASSERT_EQ(vidq_cli(*dir_, "config --out " + q(p)).status, 0);
  EXPECT_EQ(config_hash(load_run_config(p)), config_hash(RunConfig{}));
}

TEST_F(Cli, BenchPrintsOneRowPerPreset) {
  const auto o = vidq_cli(*dir_, "bench --duration 60 --out " + q(*dir_ / "bench.tsv"));
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_EQ(std::count(o.out.begin(), o.out.end(), '\n'), 4);
  EXPECT_EQ(o.out.rfind("selectivity\t", 0), 0u);
  EXPECT_EQ(slurp(*dir_ / "bench.tsv"), o.out);
}

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "test_support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path work() {
  static const fs::path dir = peerkt::testing::scratch_dir("cli");
  return dir;
}

// Runs the CLI inside the scratch directory; `env` is a prefix such as "PEERKT_K=1".
Run cli(const std::string& args, const std::string& env = "") {
  const auto out = work() / "stdout.txt";
  const auto err = work() / "stderr.txt";
  const std::string cmd = "cd '" + work().string() + "' && env -u PEERKT_API_BASE -u PEERKT_API_KEY " +
                          "-u PEERKT_MODEL " + env + " '" + PEERKT_CLI + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return Run{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

json error_line(const Run& r) {
  const auto nl = r.err.rfind('\n', r.err.size() - 2);
  return json::parse(nl == std::string::npos ? r.err : r.err.substr(nl + 1));
}

const char* kTarget = " --bundle kb --student src0/src0-s1 --question src0/src0-q1";

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    auto r = cli("simulate --out sim --students 30 --questions 20 --concepts 4 --sources 2 "
                 "--responses 20 --label-styles canonical,upper --seed 3");
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli("build sim/src0/manifest.json sim/src1/manifest.json --out kb");
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli("build sim/src0/manifest.json --out kb0");
    ASSERT_EQ(r.code, 0) << r.err;
  }
};

}  // namespace

TEST_F(Cli, BuildIsReproducible) {
  const auto first = json::parse(cli("build sim/src0/manifest.json sim/src1/manifest.json --out kb_a").out);
  const auto again = cli("build sim/src0/manifest.json sim/src1/manifest.json --out kb_b");
  ASSERT_EQ(again.code, 0) << again.err;
  const auto second = json::parse(again.out);
  EXPECT_EQ(first.at("checksums"), second.at("checksums"));
  EXPECT_EQ(slurp(work() / "kb_a" / "checksums.txt"), slurp(work() / "kb_b" / "checksums.txt"));
  EXPECT_EQ(first.at("version"), second.at("version"));
  EXPECT_TRUE(first.contains("config"));
  const auto manifest = json::parse(slurp(work() / "kb_a" / "manifest.json"));
  EXPECT_TRUE(manifest.contains("run"));
}

TEST_F(Cli, MissingFileNamesError) {
  const auto r = cli("build does/not/exist.json --out kb_missing");
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(error_line(r).at("error"), "UnreadableFile");
}

TEST_F(Cli, MissingColumnNamesError) {
  fs::create_directories(work() / "bad");
  std::ofstream(work() / "bad" / "interactions.csv") << "student_id,question_id,correct\ns,q,1\n";
  std::ofstream(work() / "bad" / "manifest.json")
      << R"({"source_id": "bad", "interactions_path": "interactions.csv", "columns": )"
      << R"({"student": "student_id", "question": "question_id", "correct": "correct", )"
      << R"("concept": "concept"}})";
  const auto r = cli("build bad/manifest.json --out kb_bad");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_line(r).at("error"), "MissingColumn");
}

TEST_F(Cli, RetrieveDefaultAndK1) {
  auto r = cli(std::string("retrieve") + kTarget);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("peers").size(), 2u);
  r = cli(std::string("retrieve") + kTarget + " --k 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("peers").size(), 1u);
  EXPECT_TRUE(j.at("context").contains("target_perf"));
  EXPECT_EQ(j.at("config").at("k"), "1");
}

TEST_F(Cli, EnvironmentBeatsFlags) {
  const auto r = cli(std::string("retrieve") + kTarget + " --k 2", "PEERKT_K=1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("peers").size(), 1u);
}

TEST_F(Cli, ConfigFileSection) {
  std::ofstream(work() / "run.toml") << "[retrieve]\nk = 3\n";
  auto r = cli(std::string("--config run.toml retrieve") + kTarget);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("peers").size(), 3u);
  r = cli(std::string("--config run.toml retrieve") + kTarget + " --k 1");
  EXPECT_EQ(json::parse(r.out).at("peers").size(), 1u);
}

TEST_F(Cli, UnknownConceptIsUnresolved) {
  const auto r = cli("retrieve --bundle kb --student src0/src0-s1 --question src9/x1 "
                     "--concept 'underwater basket weaving' --matcher none");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_line(r).at("error"), "ConceptUnresolved");
}

TEST_F(Cli, UnqualifiedStudentRejected) {
  const auto r = cli("retrieve --bundle kb --student src0-s1 --question src0/src0-q1");
  EXPECT_NE(r.code, 0);
}

TEST_F(Cli, PredictHeuristic) {
  const auto r = cli(std::string("predict") + kTarget);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  const double p = j.at("result").at("probability");
  EXPECT_GE(p, 0.01);
  EXPECT_LE(p, 0.99);
  EXPECT_TRUE(j.at("result").contains("rationale"));
  EXPECT_EQ(cli(std::string("predict") + kTarget).out, r.out);
}

TEST_F(Cli, RemoteWithoutCredentialsIsConfigError) {
  const auto r = cli(std::string("predict") + kTarget + " --backend remote");
  EXPECT_EQ(r.code, 1);
  const auto e = error_line(r);
  EXPECT_EQ(e.at("error"), "BadConfig");
  EXPECT_NE(e.at("message").get<std::string>().find("PEERKT_API_BASE"), std::string::npos);
}

TEST_F(Cli, DumpPromptCallsNoBackend) {
  const auto r = cli(std::string("predict") + kTarget + " --backend remote --dump-prompt");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("=== user ==="), std::string::npos);
  EXPECT_NE(r.out.find("Reasoning framework"), std::string::npos);
}

TEST_F(Cli, EvaluateFiveSeeds) {
  const auto r = cli("evaluate --data sim/src0/manifest.json sim/src1/manifest.json --n-test 20 "
                     "--length 10 --out report.json --records records.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(work() / "report.json"));
  ASSERT_EQ(j.at("runs").size(), 5u);
  EXPECT_EQ(j.at("mean").at("seeds"), 5);
  for (const auto& run : j.at("runs")) EXPECT_TRUE(run.at("metrics").contains("auc"));
  const auto csv = slurp(work() / "records.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 20);

  const auto again = cli("evaluate --data sim/src0/manifest.json sim/src1/manifest.json --n-test 20 "
                         "--length 10 --out report2.json");
  ASSERT_EQ(again.code, 0);
  auto a = j;
  auto b = json::parse(slurp(work() / "report2.json"));
  a.erase("config");
  b.erase("config");
  EXPECT_EQ(a, b);
}

TEST_F(Cli, ColdStartOverlapExits) {
  const auto r = cli("evaluate --bundle kb --test sim/src1/manifest.json --cold-start --n-test 10 "
                     "--length 10 --seeds 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_line(r).at("error"), "SourceOverlap");
}

TEST_F(Cli, ColdStartOnForeignSource) {
  const auto r = cli("evaluate --bundle kb0 --test sim/src1/manifest.json --cold-start --n-test 30 "
                     "--length 10 --seeds 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto run = json::parse(r.out).at("runs").at(0);
  EXPECT_DOUBLE_EQ(run.at("qg_resolved").at("fraction").get<double>(), 1.0);
}

TEST_F(Cli, SimulateNeedsSeed) {
  const auto r = cli("simulate --out sim_noseed");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(error_line(r).at("error"), "BadConfig");
}

TEST_F(Cli, LintTemplate) {
  EXPECT_EQ(cli("lint-template").code, 0);
  std::ofstream(work() / "bad.txt") << "=== user ===\n{{metadata}} about 0.5 of students\n";
  const auto r = cli("lint-template bad.txt");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("0.5"), std::string::npos);
}

TEST_F(Cli, HelpListsDefaults) {
  const auto r = cli("retrieve --help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--k UINT:POSITIVE [2]", "--hops UINT:POSITIVE [2]",
                           "--cap UINT:POSITIVE [10]", "[0.5]", "--beta", "[0.8]", "[0.4,0.3,0.3]",
                           "--conf-n0 UINT:POSITIVE [5]", "--conf-window UINT:POSITIVE [10]"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  const auto p = cli("predict --help");
  for (const char* flag : {"--w-irt FLOAT [0.5]", "--w-self FLOAT [0.3]", "--w-peer FLOAT [0.2]",
                           "--threshold", "--backend TEXT:{heuristic,remote} [heuristic]"}) {
    EXPECT_NE(p.out.find(flag), std::string::npos) << flag;
  }
  const auto e = cli("evaluate --help");
  EXPECT_NE(e.out.find("--seeds UINT:POSITIVE [5]"), std::string::npos);
  EXPECT_NE(e.out.find("--n-test UINT [1000]"), std::string::npos);
  for (const char* cmd : {"build", "simulate", "lint-template"}) EXPECT_EQ(cli(std::string(cmd) + " --help").code, 0);
}

TEST_F(Cli, Version) {
  const auto r = cli("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
}

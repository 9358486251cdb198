#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "peerkt/error.hpp"
#include "peerkt/irt.hpp"
#include "peerkt/simulator.hpp"
#include "test_support.hpp"

using namespace peerkt;
using namespace peerkt::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Simulator, ForcedCenterGivesHalfRate) {
  sim::SimConfig cfg;
  cfg.force_center = true;
  cfg.n_students = 100;
  cfg.n_questions = 20;
  cfg.responses_per_student = 100;
  cfg.seed = 1;
  const auto data = sim::generate(cfg);
  const auto& events = data.sources[0].interactions;
  ASSERT_EQ(events.size(), 10000u);
  double correct = 0;
  for (const auto& e : events) correct += e.correct;
  EXPECT_NEAR(correct / events.size(), 0.5, 0.02);
}

TEST(Simulator, EmpiricalAccuracyConvergesPerCell) {
  for (std::uint64_t seed : {2u, 3u, 4u, 5u, 6u}) {
    sim::SimConfig cfg;
    cfg.n_students = 1;
    cfg.n_questions = 1;
    cfg.n_concepts = 1;
    cfg.responses_per_student = 2000;
    cfg.seed = seed;
    const auto data = sim::generate(cfg);
    const auto& [qid, q] = *data.truth.questions.begin();
    const double theta = data.truth.theta.begin()->second;
    const double p = irt::predict_prob(theta, q.a, q.b);
    double hits = 0;
    for (const auto& e : data.sources[0].interactions) hits += e.correct;
    const double n = static_cast<double>(data.sources[0].interactions.size());
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_LE(std::abs(hits / n - p), 3 * se) << "seed " << seed;
  }
}

TEST(Simulator, SharedVocabularyAlignsIntoSharedGroups) {
  sim::SimConfig cfg;
  cfg.n_sources = 2;
  cfg.n_students = 40;
  cfg.n_questions = 30;
  cfg.n_concepts = 4;
  cfg.responses_per_student = 20;
  cfg.label_styles = {sim::LabelStyle::Canonical, sim::LabelStyle::Hyphen};
  cfg.seed = 9;
  const auto kb = kb_of(sim::generate(cfg));
  EXPECT_EQ(kb.canonical_concepts.size(), 4u);
  std::map<std::string, std::set<std::string>> by_group;
  for (const auto& [_, info] : kb.questions) by_group[info.qg].insert(info.source_id);
  std::size_t shared = 0;
  for (const auto& [_, s] : by_group) shared += s.size() == 2;
  EXPECT_GE(shared, 4u);
}

TEST(Simulator, SameSeedSameFiles) {
  sim::SimConfig cfg;
  cfg.n_sources = 2;
  cfg.n_students = 10;
  cfg.n_questions = 8;
  cfg.responses_per_student = 6;
  cfg.seed = 77;
  const auto a = scratch_dir("sim_a");
  const auto b = scratch_dir("sim_b");
  sim::generate_files(cfg, a);
  sim::generate_files(cfg, b);
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 7u);  // 3 per source plus truth.json
}

TEST(Simulator, DifferentSeedsDiffer) {
  sim::SimConfig cfg;
  cfg.n_students = 10;
  cfg.seed = 1;
  const auto a = sim::generate(cfg);
  cfg.seed = 2;
  const auto b = sim::generate(cfg);
  EXPECT_NE(a.sources[0].interactions, b.sources[0].interactions);
}

TEST(Simulator, FilesRoundTripThroughLoader) {
  sim::SimConfig cfg;
  cfg.n_sources = 2;
  cfg.n_students = 12;
  cfg.n_questions = 9;
  cfg.responses_per_student = 7;
  cfg.label_styles = {sim::LabelStyle::Reversed, sim::LabelStyle::Upper};
  cfg.seed = 5;
  const auto out = sim::generate_files(cfg, scratch_dir("sim_roundtrip"));
  ASSERT_EQ(out.manifest_paths.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto manifest = DatasetManifest::load(out.manifest_paths[i]);
    const auto report = load_interactions(manifest);
    EXPECT_EQ(report.rows_skipped, 0u);
    EXPECT_EQ(report.interactions, out.data.sources[i].interactions);
  }
}

TEST(Simulator, Topologies) {
  sim::SimConfig cfg;
  cfg.n_concepts = 7;
  cfg.n_students = 2;
  cfg.n_questions = 7;
  cfg.responses_per_student = 2;
  cfg.seed = 3;
  EXPECT_EQ(sim::generate(cfg).truth.prereq_edges.size(), 6u);
  cfg.topology = sim::Topology::BalancedTree;
  const auto tree = sim::generate(cfg);
  EXPECT_EQ(tree.truth.prereq_edges.size(), 6u);
  const auto g = kc_of(tree).graph;
  EXPECT_EQ(shortest_kk_path_len(g, sim::concept_label(3), sim::concept_label(4)), 2u);
  cfg.topology = sim::Topology::Random;
  cfg.density = 1.0;
  EXPECT_EQ(sim::generate(cfg).truth.prereq_edges.size(), 21u);
  cfg.density = 0.0;
  EXPECT_TRUE(sim::generate(cfg).truth.prereq_edges.empty());
  EXPECT_FALSE(has_prereq_cycle(kc_of(sim::generate(cfg)).graph));
}

TEST(Simulator, RoundRobinConcepts) {
  sim::SimConfig cfg;
  cfg.n_concepts = 3;
  cfg.n_questions = 9;
  cfg.n_students = 2;
  cfg.responses_per_student = 3;
  cfg.seed = 4;
  const auto data = sim::generate(cfg);
  std::map<std::size_t, int> per_concept;
  for (const auto& [_, q] : data.truth.questions) ++per_concept[q.concept_index];
  EXPECT_EQ(per_concept, (std::map<std::size_t, int>{{0, 3}, {1, 3}, {2, 3}}));
}

TEST(Simulator, LabelStyles) {
  EXPECT_EQ(sim::styled_label("fraction addition", sim::LabelStyle::Upper), "FRACTION ADDITION");
  EXPECT_EQ(sim::styled_label("fraction addition", sim::LabelStyle::Hyphen), "fraction-addition");
  EXPECT_EQ(sim::styled_label("fraction addition", sim::LabelStyle::Reversed), "addition fraction");
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(normalize_label(sim::styled_label(sim::concept_label(i), sim::LabelStyle::Upper)),
              normalize_label(sim::concept_label(i)));
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < 30; ++i) labels.insert(sim::concept_label(i));
  EXPECT_EQ(labels.size(), 30u);
}

TEST(SimConfig, Validation) {
  sim::SimConfig cfg;
  cfg.n_students = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
  }
  EXPECT_THROW(sim::SimConfig::from_json(nlohmann::json{{"n_students", 5}}), Error);
  EXPECT_THROW(sim::SimConfig::from_json(nlohmann::json{{"seed", 1}, {"bogus", 2}}), Error);
  const auto ok = sim::SimConfig::from_json(
      nlohmann::json{{"seed", 4}, {"n_sources", 2}, {"topology", "balanced-tree"}});
  EXPECT_EQ(ok.seed, 4u);
  EXPECT_EQ(ok.n_sources, 2u);
  EXPECT_EQ(ok.topology, sim::Topology::BalancedTree);
  const auto back = sim::SimConfig::from_json(ok.to_json());
  EXPECT_EQ(back.to_json(), ok.to_json());
}

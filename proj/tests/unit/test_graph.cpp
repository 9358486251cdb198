#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "peerkt/bundle.hpp"
#include "peerkt/error.hpp"
#include "peerkt/graph.hpp"
#include "peerkt/kc_match.hpp"
#include "peerkt/knowledge_base.hpp"
#include "test_support.hpp"

using namespace peerkt;
using peerkt::testing::ev;
using peerkt::testing::source_of;

namespace {

NodeId K(const std::string& k) { return NodeId{NodeKind::K, k}; }

Graph chain(std::size_t n) {
  std::string text;
  for (std::size_t i = 1; i < n; ++i) {
    text += "K" + std::to_string(i) + ",assoc,K" + std::to_string(i + 1) + "\n";
  }
  return parse_kc_graph(text).graph;
}

class FixedJudge : public JudgeBackend {
 public:
  explicit FixedJudge(std::optional<bool> answer) : answer_(answer) {}
  std::optional<bool> equivalent(std::string_view, std::string_view) override {
    ++calls;
    return answer_;
  }
  int calls = 0;

 private:
  std::optional<bool> answer_;
};

class DownSimilarity : public SimilarityBackend {
 public:
  double similarity(std::string_view, std::string_view) override {
    throw Error(ErrorCode::BackendUnavailable, "offline");
  }
  std::string name() const override { return "down"; }
};

}  // namespace

TEST(KcGraph, PrereqAndAssoc) {
  const auto f = parse_kc_graph("A,prereq,B\nB,assoc,C\n");
  EXPECT_EQ(f.graph.count(NodeKind::K), 3u);
  EXPECT_EQ(f.graph.count(EdgeKind::KKPrereq), 1u);
  EXPECT_EQ(f.graph.count(EdgeKind::KKAssoc), 1u);
  EXPECT_TRUE(f.graph.has_edge(K("A"), K("B"), EdgeKind::KKPrereq));
  EXPECT_FALSE(f.graph.has_edge(K("B"), K("A"), EdgeKind::KKPrereq));
  EXPECT_TRUE(f.graph.has_edge(K("C"), K("B"), EdgeKind::KKAssoc));
  EXPECT_FALSE(f.has_prereq_cycle);
}

TEST(KcGraph, DuplicateRowsCollapse) {
  const auto f = parse_kc_graph("A,prereq,B\nA,prereq,B\n");
  EXPECT_EQ(f.graph.edge_count(), 1u);
  EXPECT_EQ(f.duplicate_rows, 1u);
}

TEST(KcGraph, UnknownRelation) {
  try {
    parse_kc_graph("A,requires,B\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadRelation);
  }
}

TEST(KcGraph, CycleIsReportedNotRejected) {
  const auto f = parse_kc_graph("A,prereq,B\nB,prereq,C\nC,prereq,A\n");
  EXPECT_TRUE(f.has_prereq_cycle);
  EXPECT_EQ(f.graph.count(EdgeKind::KKPrereq), 3u);
}

TEST(KcMatch, Examples) {
  MatcherBackend m;
  const auto exact = kc_match("Fractions", {"fractions"}, m);
  EXPECT_EQ(exact.method, MatchMethod::Exact);
  EXPECT_EQ(exact.canonical_key, "fractions");
  EXPECT_DOUBLE_EQ(exact.score, 1.0);

  TokenJaccardBackend jac;
  EXPECT_DOUBLE_EQ(jac.similarity("adding fractions", "fraction addition"), 0.0);
  const auto miss = kc_match("adding fractions", {"fraction addition"}, m);
  EXPECT_EQ(miss.method, MatchMethod::Unmatched);
  EXPECT_EQ(miss.canonical_key, "adding fractions");

  const auto empty = kc_match("anything", {}, m);
  EXPECT_EQ(empty.method, MatchMethod::Unmatched);
}

TEST(KcMatch, SimilarityStageAndThreshold) {
  MatcherBackend m;
  const auto r = kc_match("addition fraction", {"fraction addition", "ratio"}, m);
  EXPECT_EQ(r.method, MatchMethod::Similarity);
  EXPECT_EQ(r.canonical_key, "fraction addition");
  // 2/3 overlap stays below 0.85.
  EXPECT_EQ(kc_match("fraction addition basics", {"fraction addition"}, m).method,
            MatchMethod::Unmatched);
}

TEST(KcMatch, JudgeStageAndDegradation) {
  MatcherBackend m;
  auto yes = std::make_shared<FixedJudge>(true);
  m.judge = yes;
  const auto r = kc_match("adding fractions", {"fraction addition"}, m);
  EXPECT_EQ(r.method, MatchMethod::LlmJudge);
  EXPECT_EQ(r.canonical_key, "fraction addition");
  EXPECT_EQ(yes->calls, 1);

  MatcherBackend down;
  down.similarity = std::make_shared<DownSimilarity>();
  EXPECT_EQ(kc_match("addition fraction", {"fraction addition"}, down).method,
            MatchMethod::Unmatched);
  EXPECT_EQ(kc_match("Fraction-Addition", {"fraction addition"}, down).method, MatchMethod::Exact);
}

TEST(KcMatch, JudgeReplyParsing) {
  EXPECT_EQ(parse_judge_reply("EQUIVALENT\nbecause"), true);
  EXPECT_EQ(parse_judge_reply("NOT_EQUIVALENT"), false);
  EXPECT_EQ(parse_judge_reply("hmm"), std::nullopt);
  const auto p = judge_prompt("a", "b");
  EXPECT_NE(p.find("a"), std::string::npos);
}

TEST(QuestionGroup, Examples) {
  KnowledgeBase kb;
  kb.graph.add_node(K("fractions"));
  for (auto l : kAllLevels) kb.graph.add_node(NodeId{NodeKind::D, std::string(to_string(l))});
  const auto g1 = assign_question_group(kb, "a/q1", "fractions", Level::Medium, "a");
  const auto g2 = assign_question_group(kb, "a/q2", "fractions", Level::Medium, "a");
  EXPECT_EQ(g1, g2);
  EXPECT_EQ(kb.graph.count(EdgeKind::QQG), 2u);
  const auto lo = assign_question_group(kb, "a/q3", "fractions", Level::Low, "a");
  const auto hi = assign_question_group(kb, "a/q4", "fractions", Level::High, "a");
  EXPECT_NE(lo, hi);
  const auto cross = assign_question_group(kb, "b/x9", "fractions", Level::Medium, "b");
  EXPECT_EQ(cross, g1);
  try {
    assign_question_group(kb, "a/q5", "decimals", Level::Low, "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownConcept);
  }
}

TEST(Build, SchemaCompleteness) {
  const auto kb = build_from_sources(
      {source_of("a", {ev("a", "s1", "q1", "fractions", true, 0), ev("a", "s1", "q2", "fractions", false, 1),
                       ev("a", "s2", "q1", "fractions", false, 0), ev("a", "s2", "q2", "fractions", true, 1)})},
      {});
  EXPECT_GE(kb.graph.count(NodeKind::K), 1u);
  EXPECT_GE(kb.graph.count(NodeKind::QG), 1u);
  EXPECT_LE(kb.graph.count(NodeKind::QG), 2u);
  EXPECT_EQ(kb.graph.count(NodeKind::Q), 2u);
  EXPECT_EQ(kb.graph.count(NodeKind::S), 2u);
  EXPECT_EQ(kb.graph.count(NodeKind::A), 3u);
  EXPECT_EQ(kb.graph.count(NodeKind::D), 3u);
  EXPECT_EQ(kb.graph.count(EdgeKind::SA), 2u);
  EXPECT_EQ(kb.graph.count(EdgeKind::QQG), 2u);
  EXPECT_TRUE(validate(kb).empty());
}

TEST(Build, CrossSourceQuestionGroups) {
  sim::SimConfig cfg;
  cfg.n_sources = 2;
  cfg.n_students = 20;
  cfg.n_questions = 12;
  cfg.n_concepts = 3;
  cfg.responses_per_student = 15;
  cfg.label_styles = {sim::LabelStyle::Canonical, sim::LabelStyle::Upper};
  cfg.seed = 4;
  const auto data = sim::generate(cfg);
  const auto kb = peerkt::testing::kb_of(data);
  EXPECT_TRUE(validate(kb).empty());

  std::map<std::string, std::set<std::string>> sources_per_qg;
  for (const auto& [q, info] : kb.questions) sources_per_qg[info.qg].insert(info.source_id);
  std::size_t shared = 0;
  for (const auto& [_, s] : sources_per_qg) shared += s.size() == 2;
  EXPECT_GE(shared, 1u);

  std::set<std::pair<std::string, Level>> pairs;
  for (const auto& [_, info] : kb.questions) pairs.emplace(info.concept_key, info.level);
  EXPECT_EQ(kb.graph.count(NodeKind::QG), pairs.size());
  EXPECT_EQ(kb.canonical_concepts.size(), 3u);
}

TEST(Build, DeterministicRebuild) {
  sim::SimConfig cfg;
  cfg.n_students = 15;
  cfg.n_questions = 10;
  cfg.responses_per_student = 12;
  cfg.seed = 8;
  const auto data = sim::generate(cfg);
  const auto a = peerkt::testing::kb_of(data);
  const auto b = peerkt::testing::kb_of(data);
  EXPECT_TRUE(a.graph == b.graph);
  EXPECT_EQ(a.irt, b.irt);
  EXPECT_EQ(serialize_bundle(a), serialize_bundle(b));
}

TEST(KHop, Examples) {
  Graph g;
  g.add_node(K("lonely"));
  EXPECT_EQ(g.k_hop(K("lonely"), 2), std::set<NodeId>{K("lonely")});
  const auto c = chain(4);
  EXPECT_EQ(c.k_hop(K("K1"), 2), (std::set<NodeId>{K("K1"), K("K2"), K("K3")}));
  try {
    c.k_hop(K("missing"), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownNode);
  }
}

TEST(KHop, Monotone) {
  std::mt19937_64 gen(3);
  std::string text;
  for (int i = 0; i < 60; ++i) {
    text += "c" + std::to_string(gen() % 25) + ",assoc,c" + std::to_string(gen() % 25) + "\n";
  }
  const auto g = parse_kc_graph(text).graph;
  for (const auto& n : g.nodes()) {
    for (std::size_t h = 0; h < 5; ++h) {
      const auto small = g.k_hop(n, h);
      const auto big = g.k_hop(n, h + 1);
      EXPECT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
    }
  }
}

TEST(ShortestPath, Examples) {
  const auto c = chain(3);
  EXPECT_EQ(shortest_kk_path_len(c, "K1", "K1"), 0u);
  EXPECT_EQ(shortest_kk_path_len(c, "K1", "K3"), 2u);
  const auto g = parse_kc_graph("A,assoc,B\nC,assoc,D\n").graph;
  EXPECT_EQ(shortest_kk_path_len(g, "A", "D", 10), std::nullopt);
  // Prerequisite edges count in both directions.
  const auto p = parse_kc_graph("A,prereq,B\nC,prereq,B\n").graph;
  EXPECT_EQ(shortest_kk_path_len(p, "A", "C"), 2u);
}

TEST(ShortestPath, TriangleInequality) {
  std::mt19937_64 gen(17);
  std::string text;
  for (int i = 0; i < 45; ++i) {
    text += "c" + std::to_string(gen() % 30) + (gen() % 2 ? ",prereq,c" : ",assoc,c") +
            std::to_string(gen() % 30) + "\n";
  }
  const auto g = parse_kc_graph(text).graph;
  const auto nodes = g.nodes_of(NodeKind::K);
  int checked = 0;
  for (int i = 0; checked < 100 && i < 100000; ++i) {
    const auto& a = nodes[gen() % nodes.size()].key;
    const auto& b = nodes[gen() % nodes.size()].key;
    const auto& c = nodes[gen() % nodes.size()].key;
    const auto ab = shortest_kk_path_len(g, a, b, 100);
    const auto bc = shortest_kk_path_len(g, b, c, 100);
    const auto ac = shortest_kk_path_len(g, a, c, 100);
    if (!ab || !bc || !ac) continue;
    EXPECT_LE(*ac, *ab + *bc);
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Bundle, RoundTripIsBitExact) {
  sim::SimConfig cfg;
  cfg.n_sources = 2;
  cfg.n_students = 25;
  cfg.n_questions = 15;
  cfg.responses_per_student = 12;
  cfg.label_styles = {sim::LabelStyle::Canonical, sim::LabelStyle::Reversed};
  cfg.seed = 12;
  const auto kb = peerkt::testing::kb_of(sim::generate(cfg));
  const auto dir = peerkt::testing::scratch_dir("bundle");
  const auto sums = save_bundle(kb, dir);
  const auto back = load_bundle(dir);
  EXPECT_TRUE(kb.graph == back.graph);
  EXPECT_TRUE(kb.kc_graph == back.kc_graph);
  EXPECT_EQ(kb.irt, back.irt);
  EXPECT_EQ(kb.questions, back.questions);
  EXPECT_EQ(kb.qg_index, back.qg_index);
  EXPECT_EQ(kb.repo.by_student().size(), back.repo.by_student().size());
  EXPECT_EQ(serialize_bundle(kb), serialize_bundle(back));
  const auto dir2 = peerkt::testing::scratch_dir("bundle2");
  EXPECT_EQ(save_bundle(back, dir2), sums);
}

TEST(Bundle, TamperingIsDetected) {
  const auto kb = build_from_sources({source_of("a", {ev("a", "s", "q", "k", true, 0)})}, {});
  const auto dir = peerkt::testing::scratch_dir("bundle_tamper");
  save_bundle(kb, dir);
  std::ofstream(dir / "irt.json", std::ios::app) << " ";
  try {
    load_bundle(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptBundle);
  }
}

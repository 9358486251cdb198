// Throughput of the hot paths: IRT fitting, knowledge-base build, retrieval,
// prompt rendering and AUC.

#include <benchmark/benchmark.h>

#include <random>

#include "peerkt/experiment.hpp"
#include "peerkt/irt.hpp"
#include "peerkt/simulator.hpp"

using namespace peerkt;

namespace {

sim::SimData population(std::size_t students, std::size_t sources = 2) {
  sim::SimConfig cfg;
  cfg.n_sources = sources;
  cfg.n_students = students;
  cfg.n_questions = 100;
  cfg.n_concepts = 10;
  cfg.responses_per_student = 50;
  cfg.seed = 1;
  return sim::generate(cfg);
}

std::vector<SourceData> sources(const sim::SimData& data) {
  std::vector<SourceData> out;
  for (const auto& s : data.sources) {
    SourceData d;
    d.source_id = s.source_id;
    d.interactions = s.interactions;
    out.push_back(std::move(d));
  }
  return out;
}

KcGraphFile kc(const sim::SimData& data) {
  std::string text;
  for (const auto& [a, b] : data.truth.prereq_edges) text += a + ",prereq," + b + "\n";
  return parse_kc_graph(text);
}

const KnowledgeBase& shared_kb() {
  static const KnowledgeBase kb = [] {
    const auto data = population(200);
    return build_from_sources(sources(data), {kc(data)});
  }();
  return kb;
}

void BM_IrtFit(benchmark::State& state) {
  const auto data = population(static_cast<std::size_t>(state.range(0)), 1);
  InteractionRepository repo;
  for (auto e : data.sources[0].interactions) {
    e.student_id = qualify(e.source_id, e.student_id);
    e.question_id = qualify(e.source_id, e.question_id);
    repo.record(e, {});
  }
  for (auto _ : state) benchmark::DoNotOptimize(irt::fit_2pl(repo));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(repo.interaction_count()));
}
BENCHMARK(BM_IrtFit)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_BuildKnowledgeBase(benchmark::State& state) {
  const auto data = population(static_cast<std::size_t>(state.range(0)));
  const auto src = sources(data);
  const auto graph = kc(data);
  for (auto _ : state) benchmark::DoNotOptimize(build_from_sources(src, {graph}));
}
BENCHMARK(BM_BuildKnowledgeBase)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_RetrievePeers(benchmark::State& state) {
  const auto& kb = shared_kb();
  const auto students = kb.students();
  RetrievalConfig cfg;
  cfg.k = static_cast<std::size_t>(state.range(0));
  ConceptResolver resolver(kb, MatcherBackend{});
  std::mt19937_64 gen(3);
  for (auto _ : state) {
    const auto& s = students[gen() % students.size()];
    const auto& h = kb.repo.history(s);
    const auto& e = h[gen() % h.size()];
    const auto t = resolve_target(
        kb, resolver,
        target_from_kb(kb, s, e.question_id, kb.questions.at(e.question_id).concept_key, e.order_index),
        cfg);
    benchmark::DoNotOptimize(retrieve_peers(kb, t, cfg));
  }
}
BENCHMARK(BM_RetrievePeers)->Arg(2)->Arg(5)->Unit(benchmark::kMicrosecond);

void BM_PredictHeuristic(benchmark::State& state) {
  const auto& kb = shared_kb();
  const auto s = kb.students().front();
  const auto& e = kb.repo.history(s)[30];
  RetrievalConfig cfg;
  ConceptResolver resolver(kb, MatcherBackend{});
  const auto t = resolve_target(
      kb, resolver,
      target_from_kb(kb, s, e.question_id, kb.questions.at(e.question_id).concept_key, e.order_index),
      cfg);
  const auto ctx = assemble_context(kb, t, retrieve_peers(kb, t, cfg), cfg);
  const auto tmpl = PromptTemplate::default_template();
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_prompt(ctx, tmpl));
    benchmark::DoNotOptimize(predict_heuristic(ctx));
  }
}
BENCHMARK(BM_PredictHeuristic)->Unit(benchmark::kMicrosecond);

void BM_Auc(benchmark::State& state) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(state.range(0)));
  std::vector<std::uint8_t> y(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = u(gen);
    y[i] = u(gen) < p[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(p, y));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();

#include "peerkt/knowledge_base.hpp"

#include <algorithm>
#include <set>

#include "peerkt/error.hpp"
#include "peerkt/rng.hpp"

namespace peerkt {

using nlohmann::json;

std::string qg_key(std::string_view concept_key, Level level) {
  std::string out(concept_key);
  out += '|';
  out += to_string(level);
  return out;
}

std::optional<std::string> KnowledgeBase::qg_for(const std::string& concept_key,
                                                 Level level) const {
  const auto it = qg_index.find({concept_key, level});
  if (it == qg_index.end()) return std::nullopt;
  return it->second;
}

std::set<std::string> KnowledgeBase::sources() const {
  std::set<std::string> out(repo.sources().begin(), repo.sources().end());
  for (const auto& [_, info] : questions) out.insert(info.source_id);
  return out;
}

std::vector<std::string> KnowledgeBase::students() const {
  std::vector<std::string> out;
  for (const auto& n : graph.nodes_of(NodeKind::S)) out.push_back(n.key);
  return out;
}

std::string assign_question_group(KnowledgeBase& kb, const std::string& question,
                                  const std::string& concept_key, Level level,
                                  const std::string& source_id) {
  const NodeId k{NodeKind::K, concept_key};
  if (!kb.graph.has_node(k)) {
    throw Error(ErrorCode::UnknownConcept, "concept '" + concept_key + "' is not a canonical K node");
  }
  auto [it, inserted] = kb.qg_index.try_emplace({concept_key, level}, qg_key(concept_key, level));
  const NodeId qg{NodeKind::QG, it->second};
  if (inserted) {
    kb.graph.add_node(qg);
    const NodeId d{NodeKind::D, std::string(to_string(level))};
    kb.graph.add_node(d);
    kb.graph.add_edge(Edge{qg, k, EdgeKind::QGK, 1});
    kb.graph.add_edge(Edge{qg, d, EdgeKind::QGD, 1});
  }
  const NodeId q{NodeKind::Q, question};
  kb.graph.add_node(q);
  kb.graph.add_edge(Edge{q, qg, EdgeKind::QQG, 1});
  kb.questions[question] = QuestionInfo{source_id, concept_key, level, it->second};
  return it->second;
}

namespace {

Interaction qualified(const Interaction& i) {
  Interaction out = i;
  out.student_id = qualify(i.source_id, i.student_id);
  out.question_id = qualify(i.source_id, i.question_id);
  return out;
}

void add_canonical(KnowledgeBase& kb, const std::string& k) {
  if (kb.graph.add_node(NodeId{NodeKind::K, k})) {
    kb.kc_graph.add_node(NodeId{NodeKind::K, k});
    kb.canonical_concepts.push_back(k);
  }
}

}  // namespace

KnowledgeBase build_from_sources(const std::vector<SourceData>& sources,
                                 const std::vector<KcGraphFile>& kc_graphs,
                                 const BuildConfig& cfg) {
  if (sources.empty()) throw Error(ErrorCode::NoData, "no sources given");
  KnowledgeBase kb;

  // Basic KC graph: union of all supplied files.
  bool cyclic = false;
  for (const auto& file : kc_graphs) {
    for (const auto& c : file.concepts) add_canonical(kb, c);
    for (const auto& e : file.graph.edges()) {
      kb.graph.add_edge(e);
      kb.kc_graph.add_edge(e);
    }
    cyclic = cyclic || file.has_prereq_cycle;
  }
  cyclic = cyclic || has_prereq_cycle(kb.kc_graph);

  // Concept alignment, first-appearance order across sources.
  std::map<std::string, std::string> question_concept;
  std::map<std::string, std::string> question_source;
  for (const auto& src : sources) {
    for (const auto& i : src.interactions) {
      auto it = kb.alignments.find(i.concept_label);
      if (it == kb.alignments.end()) {
        auto m = kc_match(i.concept_label, kb.canonical_concepts, cfg.matcher);
        if (m.method == MatchMethod::Unmatched) add_canonical(kb, m.canonical_key);
        it = kb.alignments.emplace(i.concept_label, std::move(m)).first;
      }
      const auto q = qualify(i.source_id, i.question_id);
      question_concept.try_emplace(q, it->second.canonical_key);
      question_source.try_emplace(q, i.source_id);
    }
  }

  // Joint IRT fit over every source.
  InteractionRepository fit_repo;
  for (const auto& src : sources) {
    for (const auto& i : src.interactions) fit_repo.record(qualified(i), {});
  }
  kb.irt = irt::fit_2pl(fit_repo, cfg.irt);

  for (auto level : kAllLevels) {
    kb.graph.add_node(NodeId{NodeKind::D, std::string(to_string(level))});
    kb.graph.add_node(NodeId{NodeKind::A, std::string(to_string(level))});
  }

  for (const auto& [q, concept_key] : question_concept) {
    const auto level = kb.irt.questions.at(q).level;
    assign_question_group(kb, q, concept_key, level, question_source.at(q));
  }

  for (const auto& k : kb.canonical_concepts) {
    kb.repo.register_dimension(Dimension{DimensionKind::Concept, k});
  }
  for (auto level : kAllLevels) {
    kb.repo.register_dimension(Dimension{DimensionKind::Difficulty, std::string(to_string(level))});
  }
  for (const auto& [_, qg] : kb.qg_index) {
    kb.repo.register_dimension(Dimension{DimensionKind::QuestionGroup, qg});
  }

  json source_docs = json::array();
  for (const auto& src : sources) {
    for (const auto& raw : src.interactions) {
      const auto i = qualified(raw);
      const auto& info = kb.questions.at(i.question_id);
      const Dimension dims[] = {
          {DimensionKind::Concept, info.concept_key},
          {DimensionKind::Difficulty, std::string(to_string(info.level))},
          {DimensionKind::QuestionGroup, info.qg},
      };
      kb.repo.record(i, dims);

      const NodeId s{NodeKind::S, i.student_id};
      if (kb.graph.add_node(s)) {
        const auto level = kb.irt.students.at(i.student_id).level;
        kb.graph.add_edge(Edge{s, NodeId{NodeKind::A, std::string(to_string(level))},
                               EdgeKind::SA, 1});
      }
      kb.graph.add_edge(Edge{s, NodeId{NodeKind::QG, info.qg}, EdgeKind::SQG, 1});
    }
    json doc;
    doc["source_id"] = src.source_id;
    doc["interactions"] = src.interactions.size();
    doc["rows_read"] = src.rows_read;
    doc["rows_skipped"] = src.rows_skipped;
    if (src.interactions_path) doc["path"] = src.interactions_path->filename().string();
    source_docs.push_back(std::move(doc));
  }

  std::map<std::string, std::size_t> methods;
  for (const auto& [_, m] : kb.alignments) ++methods[std::string(to_string(m.method))];

  kb.build_manifest = json{
      {"sources", source_docs},
      {"seed", cfg.seed},
      {"rng", std::string(Rng::kAlgorithm)},
      {"irt",
       {{"min_attempts", cfg.irt.min_attempts},
        {"tol", cfg.irt.tol},
        {"max_iters", cfg.irt.max_iters},
        {"iterations", kb.irt.iterations},
        {"converged", kb.irt.converged}}},
      {"matcher",
       {{"similarity", cfg.matcher.similarity ? cfg.matcher.similarity->name() : "none"},
        {"judge", cfg.matcher.judge ? "configured" : "none"},
        {"threshold", cfg.matcher.threshold}}},
      {"kc_match_methods", methods},
      {"prereq_cycle", cyclic},
  };
  return kb;
}

LoadedSources load_sources(const std::vector<DatasetManifest>& manifests, char kc_delimiter) {
  if (manifests.empty()) throw Error(ErrorCode::NoData, "at least one manifest is required");
  LoadedSources out;
  for (const auto& m : manifests) {
    auto report = load_interactions(m);
    SourceData src;
    src.source_id = m.source_id;
    src.interactions = std::move(report.interactions);
    src.rows_read = report.rows_read;
    src.rows_skipped = report.rows_skipped;
    src.interactions_path = m.interactions_path;
    out.sources.push_back(std::move(src));
    if (m.kc_graph_path) out.kc_graphs.push_back(load_kc_graph(*m.kc_graph_path, kc_delimiter));
  }
  return out;
}

KnowledgeBase build_knowledge_base(const std::vector<DatasetManifest>& manifests,
                                   const BuildConfig& cfg) {
  const auto loaded = load_sources(manifests, cfg.kc_delimiter);
  return build_from_sources(loaded.sources, loaded.kc_graphs, cfg);
}

std::vector<std::string> validate(const KnowledgeBase& kb) {
  auto problems = kb.graph.validate_schema();

  std::set<std::string> qg_nodes;
  for (const auto& n : kb.graph.nodes_of(NodeKind::QG)) qg_nodes.insert(n.key);
  std::set<std::string> indexed;
  for (const auto& [key, qg] : kb.qg_index) {
    if (!indexed.insert(qg).second) problems.push_back("qg_index maps two keys onto " + qg);
    if (qg != qg_key(key.first, key.second)) problems.push_back("qg_index key mismatch for " + qg);
  }
  if (indexed != qg_nodes) problems.push_back("qg_index is not a bijection onto QG nodes");

  for (const auto& s : kb.graph.nodes_of(NodeKind::S)) {
    std::size_t sa = 0;
    for (const auto& [_, kind] : kb.graph.neighbours(s)) sa += kind == EdgeKind::SA;
    if (!kb.repo.history(s.key).empty() && sa != 1) {
      problems.push_back(s.str() + " must have exactly one S_A edge");
    }
  }
  if (!(kb.graph.kc_subgraph() == kb.kc_graph)) {
    problems.push_back("kc_graph differs from the K/K-K restriction of the graph");
  }
  return problems;
}

ConceptResolver::ConceptResolver(const KnowledgeBase& kb, MatcherBackend matcher)
    : kb_(kb), matcher_(std::move(matcher)) {}

KcMatch ConceptResolver::resolve(const std::string& label) {
  std::lock_guard lock(mutex_);
  if (const auto it = cache_.find(label); it != cache_.end()) return it->second;
  if (const auto it = kb_.alignments.find(label); it != kb_.alignments.end()) {
    cache_.emplace(label, it->second);
    return it->second;
  }
  auto m = kc_match(label, kb_.canonical_concepts, matcher_);
  cache_.emplace(label, m);
  return m;
}

QuestionResolution resolve_question(const KnowledgeBase& kb, ConceptResolver& resolver,
                                    const std::string& question, const std::string& concept_label) {
  QuestionResolution r;
  r.question = question;
  if (const auto it = kb.questions.find(r.question); it != kb.questions.end()) {
    r.known = true;
    r.concept_key = it->second.concept_key;
    r.level = it->second.level;
    r.qg = it->second.qg;
    if (const auto p = kb.irt.questions.find(r.question); p != kb.irt.questions.end()) {
      if (!(p->second.flags & irt::kBelowMinAttempts)) r.params = p->second;
    }
    if (const auto a = kb.alignments.find(concept_label); a != kb.alignments.end()) {
      r.concept_method = a->second.method;
    }
    return r;
  }
  const auto m = resolver.resolve(concept_label);
  r.concept_key = m.canonical_key;
  r.concept_method = m.method;
  for (auto level : {Level::Medium, Level::Low, Level::High}) {
    if (auto qg = kb.qg_for(r.concept_key, level)) {
      r.level = level;
      r.qg = std::move(qg);
      break;
    }
  }
  return r;
}

std::optional<irt::QuestionParam> group_params(const KnowledgeBase& kb, const std::string& qg) {
  const NodeId node{NodeKind::QG, qg};
  if (!kb.graph.has_node(node)) return std::nullopt;
  double sum_a = 0.0;
  double sum_b = 0.0;
  std::size_t n = 0;
  for (const auto& [m, kind] : kb.graph.neighbours(node)) {
    if (kind != EdgeKind::QQG) continue;
    const auto it = kb.irt.questions.find(m.key);
    if (it == kb.irt.questions.end() || (it->second.flags & irt::kBelowMinAttempts)) continue;
    sum_a += it->second.a;
    sum_b += it->second.b;
    ++n;
  }
  if (n == 0) return std::nullopt;
  irt::QuestionParam p;
  p.a = sum_a / static_cast<double>(n);
  p.b = sum_b / static_cast<double>(n);
  return p;
}

}  // namespace peerkt

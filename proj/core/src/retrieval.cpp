#include "peerkt/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "peerkt/error.hpp"

namespace peerkt {

using nlohmann::json;

std::string_view to_string(PoolLevel level) {
  switch (level) {
    case PoolLevel::Subgraph: return "subgraph";
    case PoolLevel::SharedQuestionGroup: return "shared-qg";
    case PoolLevel::Global: return "global";
  }
  return "global";
}

PredictionTarget target_from_sequence(const EvalSequence& seq) {
  const auto& last = seq.target();
  PredictionTarget t;
  t.student_id = qualify(last.source_id, last.student_id);
  t.question_id = qualify(last.source_id, last.question_id);
  t.concept_label = last.concept_label;
  t.as_of = last.order_index;
  for (std::size_t i = 0; i + 1 < seq.window.size(); ++i) {
    auto ev = seq.window[i];
    ev.student_id = t.student_id;
    ev.question_id = qualify(ev.source_id, ev.question_id);
    t.history.push_back(std::move(ev));
  }
  return t;
}

PredictionTarget target_from_kb(const KnowledgeBase& kb, const std::string& student,
                                const std::string& question, const std::string& concept_label,
                                std::int64_t as_of) {
  PredictionTarget t;
  t.student_id = student;
  t.question_id = question;
  t.concept_label = concept_label;
  t.as_of = as_of;
  for (const auto& ev : kb.repo.history(student)) {
    if (ev.order_index >= as_of) break;
    t.history.push_back(ev);
  }
  return t;
}

double behavior_score(const PerfTuple& perf, double alpha) {
  return (alpha * perf.acc + (1.0 - alpha) * perf.dwa) * perf.conf;
}

std::optional<double> behavior_score(std::span<const std::uint8_t> outcomes, double alpha,
                                     const ConfConfig& cfg) {
  const auto p = perf_of(outcomes, cfg);
  if (!p) return std::nullopt;
  return behavior_score(*p, alpha);
}

Dimension dimension_of(const NodeId& node) {
  switch (node.kind) {
    case NodeKind::K: return {DimensionKind::Concept, node.key};
    case NodeKind::QG: return {DimensionKind::QuestionGroup, node.key};
    case NodeKind::D: return {DimensionKind::Difficulty, node.key};
    default: break;
  }
  throw Error(ErrorCode::UnknownDimension, node.str() + " does not map to a dimension");
}

std::optional<double> behavior_score(const InteractionRepository& repo, const std::string& student,
                                     const NodeId& node, double alpha, const ConfConfig& cfg,
                                     std::int64_t as_of) {
  const auto* list = repo.outcomes(student, dimension_of(node));
  if (list == nullptr) return std::nullopt;
  return behavior_score(list->before(as_of), alpha, cfg);
}

double behavior_similarity(const BehaviorVector& target, const BehaviorVector& candidate) {
  if (target.node_order != candidate.node_order ||
      target.scores.size() != candidate.scores.size()) {
    throw Error(ErrorCode::DimensionMismatch, "behaviour vectors span different nodes");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < target.scores.size(); ++i) {
    const double a = target.present.empty() || target.present[i] ? target.scores[i] : 0.0;
    const double b = candidate.present.empty() || candidate.present[i] ? candidate.scores[i] : 0.0;
    dot += a * b;
    na += a * a;
    nb += b * b;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double structural_score(std::span<const std::optional<std::size_t>> lengths, std::size_t cap) {
  if (lengths.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& len : lengths) {
    if (!len) {
      sum += 1.0 / static_cast<double>(cap + 1);
    } else if (*len == 0) {
      sum += 1.0;
    } else {
      sum += 1.0 / static_cast<double>(*len);
    }
  }
  return sum / static_cast<double>(lengths.size());
}

namespace {

std::map<std::string, std::size_t> distances_from(const KnowledgeBase& kb,
                                                  const std::string& concept_key,
                                                  std::size_t cap) {
  if (!kb.kc_graph.has_node(NodeId{NodeKind::K, concept_key})) return {{concept_key, 0}};
  return kk_distances(kb.kc_graph, concept_key, cap);
}

std::vector<std::string> concepts_before(const KnowledgeBase& kb, const std::string& student,
                                         std::int64_t as_of) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& ev : kb.repo.history(student)) {
    if (ev.order_index >= as_of) break;
    const auto it = kb.questions.find(ev.question_id);
    if (it == kb.questions.end()) continue;
    if (seen.insert(it->second.concept_key).second) out.push_back(it->second.concept_key);
  }
  return out;
}

double score_concepts(const std::vector<std::string>& concepts,
                      const std::map<std::string, std::size_t>& dist, std::size_t cap) {
  std::vector<std::optional<std::size_t>> lengths;
  lengths.reserve(concepts.size());
  for (const auto& c : concepts) {
    const auto it = dist.find(c);
    lengths.push_back(it == dist.end() ? std::nullopt : std::optional<std::size_t>(it->second));
  }
  return structural_score(lengths, cap);
}

double theta_norm_of(const KnowledgeBase& kb, const std::string& student) {
  const auto it = kb.irt.students.find(student);
  return it == kb.irt.students.end() ? 0.5 : it->second.theta_norm;
}

}  // namespace

double structural_score(const KnowledgeBase& kb, const std::string& student,
                        const std::string& target_concept, std::int64_t as_of, std::size_t cap) {
  return score_concepts(concepts_before(kb, student, as_of),
                        distances_from(kb, target_concept, cap), cap);
}

double structural_similarity(double score_target, double score_candidate, double pool_min,
                             double pool_max) {
  const double range = pool_max - pool_min;
  if (!(range > 0.0)) return 1.0;
  return std::clamp(1.0 - std::abs(score_target - score_candidate) / range, 0.0, 1.0);
}

double ability_similarity(double theta_target_norm, double theta_candidate_norm) {
  return std::clamp(1.0 - std::abs(theta_target_norm - theta_candidate_norm), 0.0, 1.0);
}

double fuse(const std::array<double, 3>& weights, double bhv, double struc, double abil) {
  return weights[0] * bhv + weights[1] * struc + weights[2] * abil;
}

bool ranks_before(const SimilarityBreakdown& a, const SimilarityBreakdown& b) {
  if (a.sim_final != b.sim_final) return a.sim_final > b.sim_final;
  return a.candidate < b.candidate;
}

std::optional<Dimension> ResolvedTarget::group_dim() const {
  if (!question.qg) return std::nullopt;
  return Dimension{DimensionKind::QuestionGroup, *question.qg};
}

OptionalPerf ResolvedTarget::perf(const Dimension& d, const ConfConfig& cfg) const {
  const auto it = outcomes.find(d);
  if (it == outcomes.end()) return std::nullopt;
  return perf_of(it->second, cfg);
}

std::set<std::string> ResolvedTarget::provenance(const Dimension& d) const {
  const auto it = sources.find(d);
  return it == sources.end() ? std::set<std::string>{} : it->second;
}

ResolvedTarget resolve_target(const KnowledgeBase& kb, ConceptResolver& resolver,
                              PredictionTarget target, const RetrievalConfig& cfg) {
  ResolvedTarget t;
  if (target.concept_label.empty() && !kb.questions.contains(target.question_id)) {
    throw Error(ErrorCode::ConceptUnresolved,
                "question " + target.question_id + " is unknown and carries no concept label");
  }
  t.question = resolve_question(kb, resolver, target.question_id, target.concept_label);
  if (cfg.require_known_concept && !kb.has_concept(t.question.concept_key)) {
    throw Error(ErrorCode::ConceptUnresolved,
                "concept '" + target.concept_label + "' does not resolve to a known concept");
  }

  std::erase_if(target.history,
                [&](const Interaction& ev) { return ev.order_index >= target.as_of; });
  std::stable_sort(target.history.begin(), target.history.end(),
                   [](const Interaction& a, const Interaction& b) {
                     return a.order_index < b.order_index;
                   });

  std::vector<irt::ItemResponse> responses;
  std::set<std::string> seen_concepts;
  for (const auto& ev : target.history) {
    const auto r = resolve_question(kb, resolver, ev.question_id, ev.concept_label);
    std::vector<Dimension> dims{{DimensionKind::Concept, r.concept_key},
                                {DimensionKind::Difficulty, std::string(to_string(r.level))}};
    if (r.qg) dims.push_back({DimensionKind::QuestionGroup, *r.qg});
    for (const auto& d : dims) {
      t.outcomes[d].push_back(ev.correct ? 1 : 0);
      t.sources[d].insert(ev.source_id);
    }
    if (seen_concepts.insert(r.concept_key).second) t.practiced_concepts.push_back(r.concept_key);

    auto params = r.params;
    if (!params && r.qg) params = group_params(kb, *r.qg);
    if (params) responses.push_back({params->a, params->b, ev.correct});
  }

  const auto fitted = kb.irt.students.find(target.student_id);
  if (fitted != kb.irt.students.end() && !(fitted->second.flags & irt::kBelowMinAttempts)) {
    t.theta = fitted->second.theta;
    t.theta_norm = fitted->second.theta_norm;
    t.ability_level = fitted->second.level;
    t.theta_from_fit = true;
  } else {
    t.theta = irt::estimate_ability(responses);
    t.theta_norm = kb.irt.normalize_theta(t.theta);
    std::vector<double> pop;
    pop.reserve(kb.irt.students.size());
    for (const auto& [_, s] : kb.irt.students) pop.push_back(s.theta_norm);
    const auto [mu, sd] = irt::mean_sd(pop);
    t.ability_level = irt::bucket_level(t.theta_norm, mu, sd);
  }
  t.target = std::move(target);
  return t;
}

std::vector<NodeId> interest_nodes(const KnowledgeBase& kb, const std::string& concept_key,
                                   std::size_t hops) {
  std::vector<NodeId> out;
  const NodeId k{NodeKind::K, concept_key};
  if (!kb.graph.has_node(k)) return out;
  for (const auto& n : kb.graph.k_hop(k, hops)) {
    if (n.kind == NodeKind::K || n.kind == NodeKind::QG || n.kind == NodeKind::D) {
      out.push_back(n);
    }
  }
  return out;
}

std::pair<std::vector<std::string>, PoolLevel> candidate_pool(const KnowledgeBase& kb,
                                                              const ResolvedTarget& t,
                                                              const RetrievalConfig& cfg) {
  const auto& self = t.target.student_id;
  const auto as_of = t.target.as_of;
  auto collect = [&](const std::set<std::string>& groups) {
    std::set<std::string> pool;
    for (const auto& qg : groups) {
      for (auto& s : kb.repo.students_on({DimensionKind::QuestionGroup, qg}, as_of)) {
        if (s != self || cfg.admit_self) pool.insert(std::move(s));
      }
    }
    return std::vector<std::string>(pool.begin(), pool.end());
  };

  // An interaction lies inside the interest subgraph when its S_QG endpoint does.
  std::set<std::string> groups;
  for (const auto& n : interest_nodes(kb, t.question.concept_key, cfg.hops)) {
    if (n.kind == NodeKind::QG) groups.insert(n.key);
  }
  if (auto pool = collect(groups); !pool.empty()) return {std::move(pool), PoolLevel::Subgraph};

  groups.clear();
  if (t.question.qg) groups.insert(*t.question.qg);
  for (const auto& [d, _] : t.outcomes) {
    if (d.kind == DimensionKind::QuestionGroup) groups.insert(d.key);
  }
  if (auto pool = collect(groups); !pool.empty()) {
    return {std::move(pool), PoolLevel::SharedQuestionGroup};
  }

  std::vector<std::string> all;
  for (const auto& s : kb.students()) {
    if (s != self || cfg.admit_self) all.push_back(s);
  }
  if (all.empty()) {
    throw Error(ErrorCode::EmptyPopulation, "knowledge base holds no other students");
  }
  return {std::move(all), PoolLevel::Global};
}

BehaviorVector target_behavior(const ResolvedTarget& t, const std::vector<NodeId>& nodes,
                               const RetrievalConfig& cfg) {
  BehaviorVector v;
  v.node_order = nodes;
  v.scores.reserve(nodes.size());
  v.present.reserve(nodes.size());
  for (const auto& n : nodes) {
    std::optional<double> score;
    if (const auto it = t.outcomes.find(dimension_of(n)); it != t.outcomes.end()) {
      score = behavior_score(it->second, cfg.alpha, cfg.conf);
    }
    v.scores.push_back(score.value_or(0.0));
    v.present.push_back(score.has_value());
  }
  return v;
}

BehaviorVector candidate_behavior(const KnowledgeBase& kb, const std::string& student,
                                  const std::vector<NodeId>& nodes, std::int64_t as_of,
                                  const RetrievalConfig& cfg) {
  BehaviorVector v;
  v.node_order = nodes;
  v.scores.reserve(nodes.size());
  v.present.reserve(nodes.size());
  for (const auto& n : nodes) {
    const auto score = behavior_score(kb.repo, student, n, cfg.alpha, cfg.conf, as_of);
    v.scores.push_back(score.value_or(0.0));
    v.present.push_back(score.has_value());
  }
  return v;
}

RetrievalResult retrieve_peers(const KnowledgeBase& kb, const ResolvedTarget& t,
                               const RetrievalConfig& cfg) {
  RetrievalResult result;
  auto [pool, level] = candidate_pool(kb, t, cfg);
  result.pool_level = level;
  result.pool_size = pool.size();
  result.subgraph_nodes = interest_nodes(kb, t.question.concept_key, cfg.hops);

  const auto as_of = t.target.as_of;
  const auto b_tgt = target_behavior(t, result.subgraph_nodes, cfg);
  const auto dist = distances_from(kb, t.question.concept_key, cfg.cap);
  const double struc_tgt = score_concepts(t.practiced_concepts, dist, cfg.cap);

  std::vector<double> struc(pool.size());
  double lo = struc_tgt;
  double hi = struc_tgt;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    struc[i] = score_concepts(concepts_before(kb, pool[i], as_of), dist, cfg.cap);
    lo = std::min(lo, struc[i]);
    hi = std::max(hi, struc[i]);
  }

  std::vector<SimilarityBreakdown> scored;
  scored.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    SimilarityBreakdown s;
    s.candidate = pool[i];
    s.sim_bhv = behavior_similarity(
        b_tgt, candidate_behavior(kb, pool[i], result.subgraph_nodes, as_of, cfg));
    s.sim_struc = structural_similarity(struc_tgt, struc[i], lo, hi);
    s.sim_abil = ability_similarity(t.theta_norm, theta_norm_of(kb, pool[i]));
    s.sim_final = fuse(cfg.weights, s.sim_bhv, s.sim_struc, s.sim_abil);
    scored.push_back(std::move(s));
  }
  const auto k = std::min(cfg.k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    ranks_before);
  scored.resize(k);
  result.peers = std::move(scored);
  return result;
}

RetrievedContext assemble_context(const KnowledgeBase& kb, const ResolvedTarget& t,
                                  const RetrievalResult& peers, const RetrievalConfig& cfg) {
  RetrievedContext ctx;
  ctx.as_of = t.target.as_of;
  ctx.pool_level = peers.pool_level;
  ctx.pool_size = peers.pool_size;

  auto& m = ctx.meta;
  m.student_id = t.target.student_id;
  m.question_id = t.target.question_id;
  m.theta = t.theta;
  m.theta_norm = t.theta_norm;
  m.ability_level = t.ability_level;
  m.concept_key = t.question.concept_key;
  m.concept_method = t.question.concept_method;
  m.difficulty_level = t.question.level;
  m.qg = t.question.qg;
  m.question_known = t.question.known;
  m.question_params = t.question.params;

  ctx.dims.push_back(t.concept_dim());
  ctx.dims.push_back(t.difficulty_dim());
  if (auto g = t.group_dim()) ctx.dims.push_back(*g);

  for (const auto& d : ctx.dims) {
    ctx.target_perf[d] = t.perf(d, cfg.conf);
    ctx.target_provenance[d] = t.provenance(d);
  }

  const auto& hist = t.target.history;
  const auto m_len = std::min(cfg.trajectory, hist.size());
  for (auto it = hist.end() - static_cast<std::ptrdiff_t>(m_len); it != hist.end(); ++it) {
    ctx.trajectory.push_back(it->correct ? 1 : 0);
  }

  for (const auto& s : peers.peers) {
    PeerContext p;
    p.similarity = s;
    p.theta_norm = theta_norm_of(kb, s.candidate);
    for (const auto& d : ctx.dims) {
      p.perf[d] = kb.repo.perf(s.candidate, d, cfg.conf, ctx.as_of);
      p.provenance[d] = kb.repo.provenance(s.candidate, d, ctx.as_of);
    }
    std::vector<std::uint8_t> tail;
    for (const auto& ev : kb.repo.history(s.candidate)) {
      if (ev.order_index >= ctx.as_of) break;
      tail.push_back(ev.correct ? 1 : 0);
    }
    const auto keep = std::min(cfg.trajectory, tail.size());
    p.trajectory.assign(tail.end() - static_cast<std::ptrdiff_t>(keep), tail.end());
    ctx.peers.push_back(std::move(p));
  }
  return ctx;
}

namespace {

json perf_json(const OptionalPerf& p, const std::set<std::string>& sources) {
  if (!p) return json{{"attempts", 0}, {"evidence", "none"}, {"sources", json::array()}};
  return json{{"acc", p->acc},
              {"dwa", p->dwa},
              {"attempts", p->attempts},
              {"conf", p->conf},
              {"sources", sources}};
}

json trajectory_json(const std::vector<std::uint8_t>& t) {
  json out = json::array();
  for (auto r : t) out.push_back(static_cast<int>(r));
  return out;
}

}  // namespace

json to_json(const SimilarityBreakdown& s) {
  return json{{"candidate", s.candidate},
              {"sim_bhv", s.sim_bhv},
              {"sim_struc", s.sim_struc},
              {"sim_abil", s.sim_abil},
              {"sim_final", s.sim_final}};
}

json to_json(const RetrievedContext& ctx) {
  const auto& m = ctx.meta;
  json meta{{"student", m.student_id},
            {"question", m.question_id},
            {"theta", m.theta},
            {"theta_norm", m.theta_norm},
            {"ability_level", std::string(to_string(m.ability_level))},
            {"concept", m.concept_key},
            {"concept_match", std::string(to_string(m.concept_method))},
            {"difficulty_level", std::string(to_string(m.difficulty_level))},
            {"question_group", m.qg ? json(*m.qg) : json(nullptr)},
            {"question_known", m.question_known}};
  json target = json::object();
  for (const auto& d : ctx.dims) {
    target[d.str()] = perf_json(ctx.target_perf.at(d), ctx.target_provenance.at(d));
  }
  json peers = json::array();
  for (const auto& p : ctx.peers) {
    json perf = json::object();
    for (const auto& d : ctx.dims) perf[d.str()] = perf_json(p.perf.at(d), p.provenance.at(d));
    peers.push_back(json{{"similarity", to_json(p.similarity)},
                         {"theta_norm", p.theta_norm},
                         {"perf", perf},
                         {"trajectory", trajectory_json(p.trajectory)}});
  }
  return json{{"meta", meta},
              {"as_of", ctx.as_of},
              {"target_perf", target},
              {"peers", peers},
              {"trajectory", trajectory_json(ctx.trajectory)},
              {"pool", {{"level", std::string(to_string(ctx.pool_level))}, {"size", ctx.pool_size}}}};
}

}  // namespace peerkt

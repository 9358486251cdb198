#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "peerkt/ingest.hpp"
#include "peerkt/knowledge_base.hpp"

namespace peerkt {

struct RetrievalConfig {
  std::size_t hops = 2;
  std::size_t cap = kDefaultPathCap;
  std::size_t k = 2;
  double alpha = 0.5;
  ConfConfig conf;
  std::array<double, 3> weights{0.4, 0.3, 0.3};  // behavior, structure, ability
  std::size_t trajectory = 10;
  // Unmatched target concepts raise ConceptUnresolved instead of falling back.
  bool require_known_concept = false;
  // Test-only: admit the target student to its own candidate pool.
  bool admit_self = false;
};

/// A (student, question) prediction request. Ids are source-qualified; the
/// history holds only events strictly before as_of.
struct PredictionTarget {
  std::string student_id;
  std::string question_id;
  std::string concept_label;
  std::vector<Interaction> history;
  std::int64_t as_of = 0;
};

/// Target built from an evaluation window: the last event is predicted from
/// the ones before it.
PredictionTarget target_from_sequence(const EvalSequence& seq);

/// Target for a student already in the knowledge base; history is taken from
/// the repository up to (excluding) as_of.
PredictionTarget target_from_kb(const KnowledgeBase& kb, const std::string& student,
                                const std::string& question, const std::string& concept_label,
                                std::int64_t as_of);

enum class PoolLevel { Subgraph, SharedQuestionGroup, Global };
std::string_view to_string(PoolLevel level);

/// Behaviour score [alpha*Acc + (1-alpha)*DWA] * Conf; nullopt without attempts.
double behavior_score(const PerfTuple& perf, double alpha);
std::optional<double> behavior_score(std::span<const std::uint8_t> outcomes, double alpha,
                                     const ConfConfig& cfg);
std::optional<double> behavior_score(const InteractionRepository& repo, const std::string& student,
                                     const NodeId& node, double alpha, const ConfConfig& cfg,
                                     std::int64_t as_of);

/// K -> Concept, QG -> QuestionGroup, D -> Difficulty. Throws UnknownDimension.
Dimension dimension_of(const NodeId& node);

struct BehaviorVector {
  std::vector<NodeId> node_order;
  std::vector<double> scores;  // 0 where absent
  std::vector<bool> present;
};

/// Cosine of the masked vectors, 0 when either has zero norm. Throws
/// DimensionMismatch when the node orders differ.
double behavior_similarity(const BehaviorVector& target, const BehaviorVector& candidate);

/// Mean inverse K-K distance; a distance of 0 contributes 1, unreachable
/// contributes 1/(cap+1), empty input scores 0.
double structural_score(std::span<const std::optional<std::size_t>> lengths, std::size_t cap);
double structural_score(const KnowledgeBase& kb, const std::string& student,
                        const std::string& target_concept, std::int64_t as_of, std::size_t cap);

/// 1 - |a - b| / (max - min) over the pool; 1 for a degenerate pool.
double structural_similarity(double score_target, double score_candidate, double pool_min,
                             double pool_max);

double ability_similarity(double theta_target_norm, double theta_candidate_norm);

struct SimilarityBreakdown {
  std::string candidate;
  double sim_bhv = 0.0;
  double sim_struc = 0.0;
  double sim_abil = 0.0;
  double sim_final = 0.0;
};

double fuse(const std::array<double, 3>& weights, double bhv, double struc, double abil);

/// Descending sim_final, ties broken by ascending student id.
bool ranks_before(const SimilarityBreakdown& a, const SimilarityBreakdown& b);

/// Target mapped into the knowledge base: concept, level, QG, ability and
/// per-dimension outcomes drawn only from the pre-as_of history.
struct ResolvedTarget {
  PredictionTarget target;
  QuestionResolution question;
  double theta = 0.0;
  double theta_norm = 0.5;
  Level ability_level = Level::Medium;
  bool theta_from_fit = false;
  std::map<Dimension, std::vector<std::uint8_t>> outcomes;
  std::map<Dimension, std::set<std::string>> sources;
  std::vector<std::string> practiced_concepts;  // distinct, pre-as_of

  Dimension concept_dim() const { return {DimensionKind::Concept, question.concept_key}; }
  Dimension difficulty_dim() const {
    return {DimensionKind::Difficulty, std::string(to_string(question.level))};
  }
  std::optional<Dimension> group_dim() const;
  OptionalPerf perf(const Dimension& d, const ConfConfig& cfg) const;
  std::set<std::string> provenance(const Dimension& d) const;
};

ResolvedTarget resolve_target(const KnowledgeBase& kb, ConceptResolver& resolver,
                              PredictionTarget target, const RetrievalConfig& cfg);

struct RetrievalResult {
  std::vector<SimilarityBreakdown> peers;  // top-k
  PoolLevel pool_level = PoolLevel::Subgraph;
  std::size_t pool_size = 0;
  std::vector<NodeId> subgraph_nodes;  // behaviour vector order
};

/// Candidate pool at the first non-empty fallback level (target excluded
/// unless admit_self), sorted by id.
std::pair<std::vector<std::string>, PoolLevel> candidate_pool(const KnowledgeBase& kb,
                                                              const ResolvedTarget& t,
                                                              const RetrievalConfig& cfg);

BehaviorVector target_behavior(const ResolvedTarget& t, const std::vector<NodeId>& nodes,
                               const RetrievalConfig& cfg);
BehaviorVector candidate_behavior(const KnowledgeBase& kb, const std::string& student,
                                  const std::vector<NodeId>& nodes, std::int64_t as_of,
                                  const RetrievalConfig& cfg);

/// K, QG and D nodes of the KC interest subgraph, sorted.
std::vector<NodeId> interest_nodes(const KnowledgeBase& kb, const std::string& concept_key,
                                   std::size_t hops);

RetrievalResult retrieve_peers(const KnowledgeBase& kb, const ResolvedTarget& t,
                               const RetrievalConfig& cfg);

struct PeerContext {
  SimilarityBreakdown similarity;
  std::map<Dimension, OptionalPerf> perf;
  std::map<Dimension, std::set<std::string>> provenance;
  std::vector<std::uint8_t> trajectory;
  double theta_norm = 0.5;
};

struct TargetMeta {
  std::string student_id;
  std::string question_id;
  double theta = 0.0;
  double theta_norm = 0.5;
  Level ability_level = Level::Medium;
  std::string concept_key;
  MatchMethod concept_method = MatchMethod::Exact;
  Level difficulty_level = Level::Medium;
  std::optional<std::string> qg;
  bool question_known = false;
  std::optional<irt::QuestionParam> question_params;
};

struct RetrievedContext {
  TargetMeta meta;
  std::vector<Dimension> dims;  // K_tgt, D_tgt[, QG_tgt]
  std::map<Dimension, OptionalPerf> target_perf;
  std::map<Dimension, std::set<std::string>> target_provenance;
  std::vector<PeerContext> peers;
  std::vector<std::uint8_t> trajectory;  // last m outcomes, oldest first
  PoolLevel pool_level = PoolLevel::Subgraph;
  std::size_t pool_size = 0;
  std::int64_t as_of = 0;
};

RetrievedContext assemble_context(const KnowledgeBase& kb, const ResolvedTarget& t,
                                  const RetrievalResult& peers, const RetrievalConfig& cfg);

nlohmann::json to_json(const SimilarityBreakdown& s);
nlohmann::json to_json(const RetrievedContext& ctx);

}  // namespace peerkt

#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "peerkt/graph.hpp"
#include "peerkt/ingest.hpp"
#include "peerkt/irt.hpp"
#include "peerkt/kc_match.hpp"
#include "peerkt/repository.hpp"

namespace peerkt {

struct QuestionInfo {
  std::string source_id;
  std::string concept_key;  // canonical K key
  Level level = Level::Medium;
  std::string qg;

  bool operator==(const QuestionInfo&) const = default;
};

struct BuildConfig {
  irt::IrtFitConfig irt;
  MatcherBackend matcher;
  std::uint64_t seed = 0;
  char kc_delimiter = ',';
};

/// Interactions of one platform plus optional KC-graph rows.
struct SourceData {
  std::string source_id;
  std::vector<Interaction> interactions;  // raw ids, grouped by student, ordered
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::optional<std::filesystem::path> interactions_path;
};

/// Built artifact: heterogeneous graph, KC graph, repository and IRT fit.
/// Entity keys for S and Q nodes are source-qualified ("source/raw").
struct KnowledgeBase {
  Graph graph;
  Graph kc_graph;
  InteractionRepository repo;
  irt::IrtParams irt;
  std::map<std::pair<std::string, Level>, std::string> qg_index;
  std::map<std::string, QuestionInfo> questions;
  std::map<std::string, KcMatch> alignments;   // dataset label -> match
  std::vector<std::string> canonical_concepts; // K keys, creation order
  nlohmann::json build_manifest;

  bool has_student(const std::string& qualified) const {
    return graph.has_node(NodeId{NodeKind::S, qualified});
  }
  bool has_concept(const std::string& k) const {
    return graph.has_node(NodeId{NodeKind::K, k});
  }
  std::optional<std::string> qg_for(const std::string& concept_key, Level level) const;
  std::set<std::string> sources() const;
  std::vector<std::string> students() const;
};

std::string qg_key(std::string_view concept_key, Level level);

/// Returns the QG for (concept, level), creating the QG node with its QG_K and
/// QG_D edges if needed, and attaches the Q node via Q_QG.
std::string assign_question_group(KnowledgeBase& kb, const std::string& question,
                                  const std::string& concept_key, Level level,
                                  const std::string& source_id);

struct LoadedSources {
  std::vector<SourceData> sources;
  std::vector<KcGraphFile> kc_graphs;
};

/// Reads every manifest's interactions and optional KC graph. Throws NoData
/// for an empty list.
LoadedSources load_sources(const std::vector<DatasetManifest>& manifests, char kc_delimiter = ',');

KnowledgeBase build_knowledge_base(const std::vector<DatasetManifest>& manifests,
                                   const BuildConfig& cfg = {});

/// Same pipeline over already-loaded sources; kc_rows are merged KC graphs.
KnowledgeBase build_from_sources(const std::vector<SourceData>& sources,
                                 const std::vector<KcGraphFile>& kc_graphs,
                                 const BuildConfig& cfg = {});

/// Schema sweep plus the knowledge-base invariants (QG bijection, S_A
/// coverage, kc_graph restriction). Empty when valid.
std::vector<std::string> validate(const KnowledgeBase& kb);

/// Thread-safe label -> canonical concept resolution against a finished
/// knowledge base. Unmatched labels resolve to themselves (no K node).
class ConceptResolver {
 public:
  ConceptResolver(const KnowledgeBase& kb, MatcherBackend matcher);

  KcMatch resolve(const std::string& label);

 private:
  const KnowledgeBase& kb_;
  MatcherBackend matcher_;
  std::mutex mutex_;
  std::map<std::string, KcMatch> cache_;
};

/// How a (possibly unseen) question maps into the knowledge base.
struct QuestionResolution {
  std::string question;  // source-qualified
  std::string concept_key;
  MatchMethod concept_method = MatchMethod::Exact;
  Level level = Level::Medium;
  std::optional<std::string> qg;
  bool known = false;    // question present in the knowledge base
  std::optional<irt::QuestionParam> params;
};

/// Known questions use their stored concept/QG. Unseen ones resolve their
/// concept label and take the Medium group of that concept, else the nearest
/// existing level.
QuestionResolution resolve_question(const KnowledgeBase& kb, ConceptResolver& resolver,
                                    const std::string& question, const std::string& concept_label);

/// Mean (a, b) of the fitted questions in a QG; nullopt for empty groups.
std::optional<irt::QuestionParam> group_params(const KnowledgeBase& kb, const std::string& qg);

}  // namespace peerkt

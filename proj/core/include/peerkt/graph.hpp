#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace peerkt {

enum class NodeKind : std::uint8_t { K, QG, Q, S, A, D };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view text);

struct NodeId {
  NodeKind kind = NodeKind::K;
  std::string key;

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;
  std::string str() const;
};

enum class EdgeKind : std::uint8_t { KKPrereq, KKAssoc, SA, SQG, QGD, QGK, QQG };

std::string_view to_string(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view text);

/// Endpoint kinds an edge of `kind` must connect, in stored orientation.
std::pair<NodeKind, NodeKind> endpoint_kinds(EdgeKind kind);
inline bool is_directed(EdgeKind kind) { return kind == EdgeKind::KKPrereq; }

struct Edge {
  NodeId from;
  NodeId to;
  EdgeKind kind = EdgeKind::KKAssoc;
  std::int64_t weight = 1;  // attempt count on S-QG edges, 1 elsewhere

  auto operator<=>(const Edge&) const = default;
  bool operator==(const Edge&) const = default;
};

/// Heterogeneous graph. Undirected edges are stored once in canonical
/// orientation (endpoint kinds from endpoint_kinds, K-K assoc by key order).
/// Traversal treats every edge as bidirectional.
class Graph {
 public:
  bool add_node(const NodeId& n);
  /// Adds or merges (weights summed) an edge. Throws UnknownNode when an
  /// endpoint is missing and BadRelation when endpoint kinds do not match.
  void add_edge(Edge e);

  bool has_node(const NodeId& n) const { return adjacency_.contains(n); }
  bool has_edge(const NodeId& from, const NodeId& to, EdgeKind kind) const;
  std::optional<Edge> find_edge(const NodeId& from, const NodeId& to, EdgeKind kind) const;

  std::vector<NodeId> nodes() const;
  std::vector<NodeId> nodes_of(NodeKind kind) const;
  std::vector<Edge> edges() const;
  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t count(NodeKind kind) const;
  std::size_t count(EdgeKind kind) const;

  /// Neighbours over all edges, both directions.
  const std::vector<std::pair<NodeId, EdgeKind>>& neighbours(const NodeId& n) const;

  /// Nodes within n hops of center, center included. Throws UnknownNode.
  std::set<NodeId> k_hop(const NodeId& center, std::size_t hops) const;

  /// Restriction to K nodes and K-K edges.
  Graph kc_subgraph() const;

  /// Every edge connects the kinds its EdgeKind requires; returns violations.
  std::vector<std::string> validate_schema() const;

  bool operator==(const Graph& other) const;

 private:
  static Edge canonical(Edge e);
  using EdgeKey = std::tuple<NodeId, NodeId, EdgeKind>;

  std::map<NodeId, std::vector<std::pair<NodeId, EdgeKind>>> adjacency_;
  std::map<EdgeKey, std::int64_t> edges_;
};

/// Parsed KC-graph file: rows (concept_a, relation, concept_b) with relation
/// in {prereq, assoc}.
struct KcGraphFile {
  Graph graph;
  std::vector<std::string> concepts;  // first-appearance order
  std::size_t duplicate_rows = 0;
  bool has_prereq_cycle = false;
};

KcGraphFile load_kc_graph(const std::filesystem::path& path, char delimiter = ',');
KcGraphFile parse_kc_graph(std::string_view text, char delimiter = ',');

/// True when the directed K-K prereq edges contain a cycle.
bool has_prereq_cycle(const Graph& g);

inline constexpr std::size_t kDefaultPathCap = 10;

/// Hop distances from k over K-K edges only, both directions, up to cap.
std::map<std::string, std::size_t> kk_distances(const Graph& g, const std::string& k,
                                                std::size_t cap = kDefaultPathCap);

/// Shortest K-K hop count, or nullopt when unreachable within cap.
std::optional<std::size_t> shortest_kk_path_len(const Graph& g, const std::string& k1,
                                                const std::string& k2,
                                                std::size_t cap = kDefaultPathCap);

}  // namespace peerkt

#include "peerkt/graph.hpp"

#include <deque>
#include <fstream>
#include <functional>
#include <sstream>

#include "peerkt/error.hpp"
#include "peerkt/ingest.hpp"

namespace peerkt {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::K: return "K";
    case NodeKind::QG: return "QG";
    case NodeKind::Q: return "Q";
    case NodeKind::S: return "S";
    case NodeKind::A: return "A";
    case NodeKind::D: return "D";
  }
  return "K";
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
  for (auto k : {NodeKind::K, NodeKind::QG, NodeKind::Q, NodeKind::S, NodeKind::A, NodeKind::D}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string NodeId::str() const {
  return std::string(to_string(kind)) + ":" + key;
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::KKPrereq: return "K_K_prereq";
    case EdgeKind::KKAssoc: return "K_K_assoc";
    case EdgeKind::SA: return "S_A";
    case EdgeKind::SQG: return "S_QG";
    case EdgeKind::QGD: return "QG_D";
    case EdgeKind::QGK: return "QG_K";
    case EdgeKind::QQG: return "Q_QG";
  }
  return "K_K_assoc";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view text) {
  for (auto k : {EdgeKind::KKPrereq, EdgeKind::KKAssoc, EdgeKind::SA, EdgeKind::SQG,
                 EdgeKind::QGD, EdgeKind::QGK, EdgeKind::QQG}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::pair<NodeKind, NodeKind> endpoint_kinds(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::KKPrereq:
    case EdgeKind::KKAssoc: return {NodeKind::K, NodeKind::K};
    case EdgeKind::SA: return {NodeKind::S, NodeKind::A};
    case EdgeKind::SQG: return {NodeKind::S, NodeKind::QG};
    case EdgeKind::QGD: return {NodeKind::QG, NodeKind::D};
    case EdgeKind::QGK: return {NodeKind::QG, NodeKind::K};
    case EdgeKind::QQG: return {NodeKind::Q, NodeKind::QG};
  }
  return {NodeKind::K, NodeKind::K};
}

bool Graph::add_node(const NodeId& n) {
  return adjacency_.try_emplace(n).second;
}

Edge Graph::canonical(Edge e) {
  const auto [fk, tk] = endpoint_kinds(e.kind);
  if (e.from.kind == tk && e.to.kind == fk && fk != tk) std::swap(e.from, e.to);
  if (e.kind == EdgeKind::KKAssoc && e.to < e.from) std::swap(e.from, e.to);
  return e;
}

void Graph::add_edge(Edge e) {
  e = canonical(std::move(e));
  const auto [fk, tk] = endpoint_kinds(e.kind);
  if (e.from.kind != fk || e.to.kind != tk) {
    throw Error(ErrorCode::BadRelation, std::string(to_string(e.kind)) + " cannot connect " +
                                            e.from.str() + " and " + e.to.str());
  }
  if (!has_node(e.from)) throw Error(ErrorCode::UnknownNode, "unknown node " + e.from.str());
  if (!has_node(e.to)) throw Error(ErrorCode::UnknownNode, "unknown node " + e.to.str());

  auto [it, inserted] = edges_.try_emplace({e.from, e.to, e.kind}, e.weight);
  if (!inserted) {
    if (e.kind == EdgeKind::SQG) it->second += e.weight;
    return;
  }
  adjacency_[e.from].emplace_back(e.to, e.kind);
  if (e.from != e.to) adjacency_[e.to].emplace_back(e.from, e.kind);
}

bool Graph::has_edge(const NodeId& from, const NodeId& to, EdgeKind kind) const {
  return find_edge(from, to, kind).has_value();
}

std::optional<Edge> Graph::find_edge(const NodeId& from, const NodeId& to, EdgeKind kind) const {
  const auto c = canonical(Edge{from, to, kind, 1});
  const auto it = edges_.find({c.from, c.to, c.kind});
  if (it == edges_.end()) return std::nullopt;
  return Edge{c.from, c.to, c.kind, it->second};
}

std::vector<NodeId> Graph::nodes() const {
  std::vector<NodeId> out;
  out.reserve(adjacency_.size());
  for (const auto& [n, _] : adjacency_) out.push_back(n);
  return out;
}

std::vector<NodeId> Graph::nodes_of(NodeKind kind) const {
  std::vector<NodeId> out;
  const auto lo = adjacency_.lower_bound(NodeId{kind, ""});
  for (auto it = lo; it != adjacency_.end() && it->first.kind == kind; ++it) {
    out.push_back(it->first);
  }
  return out;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [key, w] : edges_) {
    out.push_back(Edge{std::get<0>(key), std::get<1>(key), std::get<2>(key), w});
  }
  return out;
}

std::size_t Graph::count(NodeKind kind) const {
  return nodes_of(kind).size();
}

std::size_t Graph::count(EdgeKind kind) const {
  std::size_t n = 0;
  for (const auto& [key, _] : edges_) n += std::get<2>(key) == kind;
  return n;
}

const std::vector<std::pair<NodeId, EdgeKind>>& Graph::neighbours(const NodeId& n) const {
  const auto it = adjacency_.find(n);
  if (it == adjacency_.end()) throw Error(ErrorCode::UnknownNode, "unknown node " + n.str());
  return it->second;
}

std::set<NodeId> Graph::k_hop(const NodeId& center, std::size_t hops) const {
  if (!has_node(center)) throw Error(ErrorCode::UnknownNode, "unknown node " + center.str());
  std::set<NodeId> seen{center};
  std::vector<NodeId> frontier{center};
  for (std::size_t depth = 0; depth < hops && !frontier.empty(); ++depth) {
    std::vector<NodeId> next;
    for (const auto& n : frontier) {
      for (const auto& [m, _] : adjacency_.at(n)) {
        if (seen.insert(m).second) next.push_back(m);
      }
    }
    frontier = std::move(next);
  }
  return seen;
}

Graph Graph::kc_subgraph() const {
  Graph g;
  for (const auto& n : nodes_of(NodeKind::K)) g.add_node(n);
  for (const auto& e : edges()) {
    if (e.kind == EdgeKind::KKPrereq || e.kind == EdgeKind::KKAssoc) g.add_edge(e);
  }
  return g;
}

std::vector<std::string> Graph::validate_schema() const {
  std::vector<std::string> problems;
  for (const auto& e : edges()) {
    const auto [fk, tk] = endpoint_kinds(e.kind);
    if (e.from.kind != fk || e.to.kind != tk) {
      problems.push_back(std::string(to_string(e.kind)) + " edge " + e.from.str() + " -> " +
                         e.to.str() + " has wrong endpoint kinds");
    }
  }
  std::map<NodeId, std::size_t> q_qg, qg_d, qg_k;
  for (const auto& e : edges()) {
    if (e.kind == EdgeKind::QQG) ++q_qg[e.from];
    if (e.kind == EdgeKind::QGD) ++qg_d[e.from];
    if (e.kind == EdgeKind::QGK) ++qg_k[e.from];
  }
  for (const auto& q : nodes_of(NodeKind::Q)) {
    if (q_qg[q] != 1) problems.push_back(q.str() + " must have exactly one Q_QG edge");
  }
  for (const auto& qg : nodes_of(NodeKind::QG)) {
    if (qg_d[qg] != 1) problems.push_back(qg.str() + " must have exactly one QG_D edge");
    if (qg_k[qg] != 1) problems.push_back(qg.str() + " must have exactly one QG_K edge");
  }
  return problems;
}

bool Graph::operator==(const Graph& other) const {
  if (edges_ != other.edges_ || adjacency_.size() != other.adjacency_.size()) return false;
  auto a = adjacency_.begin();
  auto b = other.adjacency_.begin();
  for (; a != adjacency_.end(); ++a, ++b) {
    if (a->first != b->first) return false;
  }
  return true;
}

KcGraphFile parse_kc_graph(std::string_view text, char delimiter) {
  KcGraphFile out;
  std::set<std::tuple<std::string, std::string, std::string>> seen_rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto add_concept = [&](const std::string& c) {
    if (out.graph.add_node(NodeId{NodeKind::K, c})) out.concepts.push_back(c);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_delimited(line, delimiter);
    for (auto& f : fields) {
      const auto first = f.find_first_not_of(" \t");
      const auto last = f.find_last_not_of(" \t");
      f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
    }
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (!fields.empty() && !fields[0].empty() && fields[0][0] == '#') continue;
    if (fields.size() != 3) {
      throw Error(ErrorCode::BadRelation,
                  "KC graph line " + std::to_string(line_no) + ": expected 3 fields");
    }
    if (line_no == 1 && fields[1] == "relation") continue;
    const auto& rel = fields[1];
    EdgeKind kind;
    if (rel == "prereq") {
      kind = EdgeKind::KKPrereq;
    } else if (rel == "assoc") {
      kind = EdgeKind::KKAssoc;
    } else {
      throw Error(ErrorCode::BadRelation,
                  "KC graph line " + std::to_string(line_no) + ": unknown relation '" + rel + "'");
    }
    if (fields[0].empty() || fields[2].empty()) {
      throw Error(ErrorCode::BadRelation,
                  "KC graph line " + std::to_string(line_no) + ": empty concept");
    }
    auto a = fields[0];
    auto b = fields[2];
    if (kind == EdgeKind::KKAssoc && b < a) std::swap(a, b);
    if (!seen_rows.emplace(a, rel, b).second) {
      ++out.duplicate_rows;
      continue;
    }
    add_concept(fields[0]);
    add_concept(fields[2]);
    out.graph.add_edge(Edge{NodeId{NodeKind::K, fields[0]}, NodeId{NodeKind::K, fields[2]}, kind, 1});
  }
  out.has_prereq_cycle = has_prereq_cycle(out.graph);
  return out;
}

KcGraphFile load_kc_graph(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot read KC graph " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_kc_graph(buf.str(), delimiter);
}

bool has_prereq_cycle(const Graph& g) {
  enum class Mark { White, Grey, Black };
  std::map<NodeId, Mark> mark;
  const auto ks = g.nodes_of(NodeKind::K);
  for (const auto& k : ks) mark[k] = Mark::White;
  // Iterative DFS over outgoing prereq edges.
  for (const auto& root : ks) {
    if (mark[root] != Mark::White) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
    mark[root] = Mark::Grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& nbrs = g.neighbours(node);
      bool pushed = false;
      while (next < nbrs.size()) {
        const auto& [m, kind] = nbrs[next++];
        // Prereq edges are stored directed, so this only matches outgoing ones.
        if (kind != EdgeKind::KKPrereq || !g.has_edge(node, m, kind)) continue;
        if (mark[m] == Mark::Grey) return true;
        if (mark[m] == Mark::White) {
          mark[m] = Mark::Grey;
          stack.emplace_back(m, 0);
          pushed = true;
          break;
        }
      }
      if (!pushed) {
        mark[stack.back().first] = Mark::Black;
        stack.pop_back();
      }
    }
  }
  return false;
}

std::map<std::string, std::size_t> kk_distances(const Graph& g, const std::string& k,
                                                std::size_t cap) {
  const NodeId start{NodeKind::K, k};
  if (!g.has_node(start)) throw Error(ErrorCode::UnknownNode, "unknown concept " + k);
  std::map<std::string, std::size_t> dist{{k, 0}};
  std::deque<NodeId> queue{start};
  while (!queue.empty()) {
    const auto n = queue.front();
    queue.pop_front();
    const auto d = dist[n.key];
    if (d >= cap) continue;
    for (const auto& [m, kind] : g.neighbours(n)) {
      if (kind != EdgeKind::KKPrereq && kind != EdgeKind::KKAssoc) continue;
      if (dist.try_emplace(m.key, d + 1).second) queue.push_back(m);
    }
  }
  return dist;
}

std::optional<std::size_t> shortest_kk_path_len(const Graph& g, const std::string& k1,
                                                const std::string& k2, std::size_t cap) {
  if (!g.has_node(NodeId{NodeKind::K, k2})) {
    throw Error(ErrorCode::UnknownNode, "unknown concept " + k2);
  }
  const auto dist = kk_distances(g, k1, cap);
  const auto it = dist.find(k2);
  if (it == dist.end()) return std::nullopt;
  return it->second;
}

}  // namespace peerkt

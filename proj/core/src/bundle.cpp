#include "peerkt/bundle.hpp"

#include <fstream>
#include <sstream>

#include "peerkt/canonical_json.hpp"
#include "peerkt/error.hpp"
#include "peerkt/hash.hpp"

namespace peerkt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json node_json(const NodeId& n) {
  return json::array({std::string(to_string(n.kind)), n.key});
}

NodeId node_from(const json& j) {
  const auto kind = parse_node_kind(j.at(0).get<std::string>());
  if (!kind) throw Error(ErrorCode::CorruptBundle, "bad node kind " + j.dump());
  return NodeId{*kind, j.at(1).get<std::string>()};
}

json graph_json(const Graph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes()) nodes.push_back(node_json(n));
  json edges = json::array();
  for (const auto& e : g.edges()) {
    edges.push_back(json{{"from", node_json(e.from)},
                         {"to", node_json(e.to)},
                         {"kind", std::string(to_string(e.kind))},
                         {"weight", e.weight}});
  }
  return json{{"nodes", nodes}, {"edges", edges}};
}

Graph graph_from(const json& j) {
  Graph g;
  for (const auto& n : j.at("nodes")) g.add_node(node_from(n));
  for (const auto& e : j.at("edges")) {
    const auto kind = parse_edge_kind(e.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::CorruptBundle, "bad edge kind " + e.dump());
    g.add_edge(Edge{node_from(e.at("from")), node_from(e.at("to")), *kind,
                    e.at("weight").get<std::int64_t>()});
  }
  return g;
}

Level level_from(const json& j) {
  const auto l = parse_level(j.get<std::string>());
  if (!l) throw Error(ErrorCode::CorruptBundle, "bad level " + j.dump());
  return *l;
}

json irt_json(const irt::IrtParams& p) {
  json students = json::array();
  for (const auto& [id, s] : p.students) {
    students.push_back(json{{"id", id},
                            {"raw", s.theta},
                            {"normalized", s.theta_norm},
                            {"level", std::string(to_string(s.level))},
                            {"flags", s.flags}});
  }
  json questions = json::array();
  for (const auto& [id, q] : p.questions) {
    questions.push_back(json{{"id", id},
                             {"raw", q.b},
                             {"a", q.a},
                             {"normalized", q.b_norm},
                             {"level", std::string(to_string(q.level))},
                             {"flags", q.flags}});
  }
  return json{{"students", students},
              {"questions", questions},
              {"theta_range", json::array({p.theta_min, p.theta_max})},
              {"b_range", json::array({p.b_min, p.b_max})},
              {"iterations", p.iterations},
              {"converged", p.converged}};
}

irt::IrtParams irt_from(const json& j) {
  irt::IrtParams p;
  for (const auto& s : j.at("students")) {
    irt::StudentParam sp;
    sp.theta = s.at("raw").get<double>();
    sp.theta_norm = s.at("normalized").get<double>();
    sp.level = level_from(s.at("level"));
    sp.flags = s.at("flags").get<std::uint32_t>();
    p.students.emplace(s.at("id").get<std::string>(), sp);
  }
  for (const auto& q : j.at("questions")) {
    irt::QuestionParam qp;
    qp.b = q.at("raw").get<double>();
    qp.a = q.at("a").get<double>();
    qp.b_norm = q.at("normalized").get<double>();
    qp.level = level_from(q.at("level"));
    qp.flags = q.at("flags").get<std::uint32_t>();
    p.questions.emplace(q.at("id").get<std::string>(), qp);
  }
  p.theta_min = j.at("theta_range").at(0).get<double>();
  p.theta_max = j.at("theta_range").at(1).get<double>();
  p.b_min = j.at("b_range").at(0).get<double>();
  p.b_max = j.at("b_range").at(1).get<double>();
  p.iterations = j.at("iterations").get<std::size_t>();
  p.converged = j.at("converged").get<bool>();
  return p;
}

json repo_json(const InteractionRepository& repo) {
  json dims = json::array();
  for (const auto& d : repo.dimensions()) dims.push_back(d.str());
  json students = json::object();
  for (const auto& [sid, hist] : repo.by_student()) {
    json events = json::array();
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const auto& ev = hist[i];
      json ev_dims = json::array();
      for (const auto& d : repo.dims_of(sid, i)) ev_dims.push_back(d.str());
      events.push_back(json{{"question", ev.question_id},
                            {"source", ev.source_id},
                            {"concept_label", ev.concept_label},
                            {"correct", ev.correct},
                            {"order", ev.order_index},
                            {"dims", ev_dims}});
    }
    students[sid] = std::move(events);
  }
  return json{{"dimensions", dims}, {"students", students}};
}

void repo_from(const json& j, InteractionRepository& repo) {
  for (const auto& d : j.at("dimensions")) repo.register_dimension(Dimension::parse(d.get<std::string>()));
  for (const auto& [sid, events] : j.at("students").items()) {
    for (const auto& ev : events) {
      Interaction i;
      i.student_id = sid;
      i.question_id = ev.at("question").get<std::string>();
      i.source_id = ev.at("source").get<std::string>();
      i.concept_label = ev.at("concept_label").get<std::string>();
      i.correct = ev.at("correct").get<bool>();
      i.order_index = ev.at("order").get<std::int64_t>();
      std::vector<Dimension> dims;
      for (const auto& d : ev.at("dims")) dims.push_back(Dimension::parse(d.get<std::string>()));
      repo.record(i, dims);
    }
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::map<std::string, std::string> serialize_bundle(const KnowledgeBase& kb) {
  json graph = graph_json(kb.graph);
  json qg_index = json::array();
  for (const auto& [key, qg] : kb.qg_index) {
    qg_index.push_back(json{{"concept", key.first}, {"level", std::string(to_string(key.second))},
                            {"qg", qg}});
  }
  graph["qg_index"] = qg_index;
  json questions = json::object();
  for (const auto& [q, info] : kb.questions) {
    questions[q] = json{{"source", info.source_id},
                        {"concept", info.concept_key},
                        {"level", std::string(to_string(info.level))},
                        {"qg", info.qg}};
  }
  graph["questions"] = questions;
  json alignments = json::object();
  for (const auto& [label, m] : kb.alignments) {
    alignments[label] = json{{"canonical", m.canonical_key},
                             {"method", std::string(to_string(m.method))},
                             {"score", m.score}};
  }
  graph["alignments"] = alignments;
  graph["canonical_concepts"] = kb.canonical_concepts;

  json manifest = kb.build_manifest;
  manifest["format_version"] = kFormatVersion;

  return {
      {"graph.json", canonical_dump(graph)},
      {"kc_graph.json", canonical_dump(graph_json(kb.kc_graph))},
      {"irt.json", canonical_dump(irt_json(kb.irt))},
      {"repository.json", canonical_dump(repo_json(kb.repo))},
      {"manifest.json", canonical_dump(manifest)},
  };
}

std::map<std::string, std::string> save_bundle(const KnowledgeBase& kb, const fs::path& dir) {
  fs::create_directories(dir);
  const auto docs = serialize_bundle(kb);
  std::map<std::string, std::string> sums;
  for (const auto& [name, text] : docs) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + (dir / name).string());
    out << text;
    sums[name] = sha256_hex(text);
  }
  std::ofstream out(dir / "checksums.txt", std::ios::binary | std::ios::trunc);
  for (const auto* name : kBundleFiles) out << sums.at(name) << "  " << name << '\n';
  return sums;
}

std::map<std::string, std::string> read_checksums(const fs::path& dir) {
  std::map<std::string, std::string> sums;
  std::istringstream in(read_file(dir / "checksums.txt"));
  std::string hash, name;
  while (in >> hash >> name) sums[name] = hash;
  return sums;
}

KnowledgeBase load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::UnreadableFile, "no bundle at " + dir.string());
  const auto sums = read_checksums(dir);
  std::map<std::string, json> docs;
  for (const auto* name : kBundleFiles) {
    const auto text = read_file(dir / name);
    const auto it = sums.find(name);
    if (it == sums.end() || it->second != sha256_hex(text)) {
      throw Error(ErrorCode::CorruptBundle, std::string("checksum mismatch for ") + name);
    }
    try {
      docs[name] = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptBundle, std::string(name) + ": " + e.what());
    }
  }

  KnowledgeBase kb;
  try {
    const auto& g = docs["graph.json"];
    kb.graph = graph_from(g);
    kb.kc_graph = graph_from(docs["kc_graph.json"]);
    for (const auto& e : g.at("qg_index")) {
      kb.qg_index[{e.at("concept").get<std::string>(), level_from(e.at("level"))}] =
          e.at("qg").get<std::string>();
    }
    for (const auto& [q, info] : g.at("questions").items()) {
      kb.questions[q] = QuestionInfo{info.at("source").get<std::string>(),
                                     info.at("concept").get<std::string>(),
                                     level_from(info.at("level")), info.at("qg").get<std::string>()};
    }
    for (const auto& [label, m] : g.at("alignments").items()) {
      const auto method = parse_match_method(m.at("method").get<std::string>());
      if (!method) throw Error(ErrorCode::CorruptBundle, "bad match method for " + label);
      kb.alignments[label] =
          KcMatch{label, m.at("canonical").get<std::string>(), *method, m.at("score").get<double>()};
    }
    kb.canonical_concepts = g.at("canonical_concepts").get<std::vector<std::string>>();
    kb.irt = irt_from(docs["irt.json"]);
    repo_from(docs["repository.json"], kb.repo);
    kb.build_manifest = docs["manifest.json"];
    kb.build_manifest.erase("format_version");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptBundle, std::string("malformed bundle: ") + e.what());
  }
  return kb;
}

}  // namespace peerkt

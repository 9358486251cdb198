#include "peerkt/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "peerkt/canonical_json.hpp"
#include "peerkt/error.hpp"
#include "peerkt/irt.hpp"
#include "peerkt/rng.hpp"

namespace peerkt::sim {

using nlohmann::json;

std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::Chain: return "chain";
    case Topology::BalancedTree: return "balanced-tree";
    case Topology::Random: return "random";
  }
  return "chain";
}

std::optional<Topology> parse_topology(std::string_view text) {
  if (text == "chain") return Topology::Chain;
  if (text == "balanced-tree" || text == "tree") return Topology::BalancedTree;
  if (text == "random" || text == "random-with-density") return Topology::Random;
  return std::nullopt;
}

std::string_view to_string(LabelStyle s) {
  switch (s) {
    case LabelStyle::Canonical: return "canonical";
    case LabelStyle::Upper: return "upper";
    case LabelStyle::Hyphen: return "hyphen";
    case LabelStyle::Reversed: return "reversed";
  }
  return "canonical";
}

std::optional<LabelStyle> parse_label_style(std::string_view text) {
  if (text == "canonical") return LabelStyle::Canonical;
  if (text == "upper") return LabelStyle::Upper;
  if (text == "hyphen") return LabelStyle::Hyphen;
  if (text == "reversed") return LabelStyle::Reversed;
  return std::nullopt;
}

SimConfig SimConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "simulation config must be an object");
  SimConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_students") c.n_students = v.get<std::size_t>();
      else if (key == "n_questions") c.n_questions = v.get<std::size_t>();
      else if (key == "n_concepts") c.n_concepts = v.get<std::size_t>();
      else if (key == "n_sources") c.n_sources = v.get<std::size_t>();
      else if (key == "responses_per_student") c.responses_per_student = v.get<std::size_t>();
      else if (key == "theta_mean") c.theta_mean = v.get<double>();
      else if (key == "theta_sd") c.theta_sd = v.get<double>();
      else if (key == "b_mean") c.b_mean = v.get<double>();
      else if (key == "b_sd") c.b_sd = v.get<double>();
      else if (key == "log_a_mean") c.log_a_mean = v.get<double>();
      else if (key == "log_a_sd") c.log_a_sd = v.get<double>();
      else if (key == "density") c.density = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "force_center") c.force_center = v.get<bool>();
      else if (key == "source_ids") c.source_ids = v.get<std::vector<std::string>>();
      else if (key == "topology") {
        const auto t = parse_topology(v.get<std::string>());
        if (!t) throw Error(ErrorCode::BadConfig, "unknown topology " + v.dump());
        c.topology = *t;
      } else if (key == "label_styles") {
        for (const auto& s : v) {
          const auto style = parse_label_style(s.get<std::string>());
          if (!style) throw Error(ErrorCode::BadConfig, "unknown label style " + s.dump());
          c.label_styles.push_back(*style);
        }
      } else {
        throw Error(ErrorCode::BadConfig, "unknown simulation key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("bad simulation config: ") + e.what());
  }
  if (!j.contains("seed")) throw Error(ErrorCode::BadConfig, "simulation config needs a seed");
  c.validate();
  return c;
}

json SimConfig::to_json() const {
  json styles = json::array();
  for (auto s : label_styles) styles.push_back(std::string(sim::to_string(s)));
  return json{{"n_students", n_students},
              {"n_questions", n_questions},
              {"n_concepts", n_concepts},
              {"n_sources", n_sources},
              {"responses_per_student", responses_per_student},
              {"theta_mean", theta_mean},
              {"theta_sd", theta_sd},
              {"b_mean", b_mean},
              {"b_sd", b_sd},
              {"log_a_mean", log_a_mean},
              {"log_a_sd", log_a_sd},
              {"topology", std::string(sim::to_string(topology))},
              {"density", density},
              {"seed", seed},
              {"force_center", force_center},
              {"label_styles", styles},
              {"source_ids", source_ids}};
}

void SimConfig::validate() const {
  if (n_students == 0 || n_questions == 0 || n_concepts == 0 || n_sources == 0 ||
      responses_per_student == 0) {
    throw Error(ErrorCode::BadConfig, "simulation counts must be positive");
  }
  if (theta_sd < 0 || b_sd < 0 || log_a_sd < 0) {
    throw Error(ErrorCode::BadConfig, "standard deviations must be non-negative");
  }
  if (density < 0.0 || density > 1.0) throw Error(ErrorCode::BadConfig, "density must be in [0, 1]");
  if (!source_ids.empty() && source_ids.size() != n_sources) {
    throw Error(ErrorCode::BadConfig, "source_ids must name every source");
  }
  for (const auto& s : source_ids) {
    if (s.empty() || s.find('/') != std::string::npos) {
      throw Error(ErrorCode::BadConfig, "source id '" + s + "' must be non-empty without '/'");
    }
  }
}

json GroundTruth::to_json() const {
  json q = json::object();
  for (const auto& [id, p] : questions) {
    q[id] = {{"a", p.a}, {"b", p.b}, {"concept", concepts[p.concept_index]}};
  }
  json edges = json::array();
  for (const auto& [a, b] : prereq_edges) edges.push_back({a, b});
  return json{{"concepts", concepts}, {"prereq", edges}, {"theta", theta}, {"questions", q}};
}

namespace {

constexpr const char* kTopics[] = {"fraction", "decimal", "ratio",   "angle",   "area",
                                   "volume",   "integer", "equation", "inequality", "polynomial",
                                   "probability", "statistics", "vector", "matrix", "sequence",
                                   "function"};
constexpr const char* kSkills[] = {"addition", "comparison", "estimation", "simplification",
                                   "modeling", "graphing"};

std::vector<std::pair<std::size_t, std::size_t>> topology_edges(const SimConfig& cfg, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const auto n = cfg.n_concepts;
  switch (cfg.topology) {
    case Topology::Chain:
      for (std::size_t i = 1; i < n; ++i) edges.emplace_back(i - 1, i);
      break;
    case Topology::BalancedTree:
      for (std::size_t i = 1; i < n; ++i) edges.emplace_back((i - 1) / 2, i);
      break;
    case Topology::Random:
      // Only forward edges, so the prerequisite relation stays acyclic.
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (rng.bernoulli(cfg.density)) edges.emplace_back(i, j);
        }
      }
      break;
  }
  return edges;
}

std::string source_name(const SimConfig& cfg, std::size_t s) {
  return cfg.source_ids.empty() ? fmt::format("src{}", s) : cfg.source_ids[s];
}

}  // namespace

std::string concept_label(std::size_t i) {
  constexpr std::size_t nt = std::size(kTopics);
  constexpr std::size_t ns = std::size(kSkills);
  std::string label = fmt::format("{} {}", kTopics[i % nt], kSkills[(i / nt) % ns]);
  if (i >= nt * ns) label += fmt::format(" level {}", i / (nt * ns));
  return label;
}

std::string styled_label(const std::string& canonical, LabelStyle style) {
  std::string out = canonical;
  switch (style) {
    case LabelStyle::Canonical:
      break;
    case LabelStyle::Upper:
      std::transform(out.begin(), out.end(), out.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      break;
    case LabelStyle::Hyphen:
      std::replace(out.begin(), out.end(), ' ', '-');
      break;
    case LabelStyle::Reversed: {
      std::istringstream in(canonical);
      std::vector<std::string> words{std::istream_iterator<std::string>(in), {}};
      std::reverse(words.begin(), words.end());
      out.clear();
      for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
      break;
    }
  }
  return out;
}

SimData generate(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SimData data;
  auto& truth = data.truth;
  for (std::size_t i = 0; i < cfg.n_concepts; ++i) truth.concepts.push_back(concept_label(i));
  for (const auto& [a, b] : topology_edges(cfg, rng)) {
    truth.prereq_edges.emplace_back(truth.concepts[a], truth.concepts[b]);
  }

  for (std::size_t s = 0; s < cfg.n_sources; ++s) {
    SimSource src;
    src.source_id = source_name(cfg, s);
    const auto style = s < cfg.label_styles.size() ? cfg.label_styles[s] : LabelStyle::Canonical;

    std::vector<std::string> qids(cfg.n_questions);
    std::vector<SimQuestion> qs(cfg.n_questions);
    for (std::size_t q = 0; q < cfg.n_questions; ++q) {
      qids[q] = fmt::format("{}-q{}", src.source_id, q);
      auto& p = qs[q];
      p.b = cfg.force_center ? 0.0 : rng.normal(cfg.b_mean, cfg.b_sd);
      p.a = std::exp(rng.normal(cfg.log_a_mean, cfg.log_a_sd));
      p.concept_index = q % cfg.n_concepts;
      truth.questions[qualify(src.source_id, qids[q])] = p;
    }
    for (std::size_t st = 0; st < cfg.n_students; ++st) {
      const auto sid = fmt::format("{}-s{}", src.source_id, st);
      const double theta = cfg.force_center ? 0.0 : rng.normal(cfg.theta_mean, cfg.theta_sd);
      truth.theta[qualify(src.source_id, sid)] = theta;
      for (std::size_t r = 0; r < cfg.responses_per_student; ++r) {
        const auto q = static_cast<std::size_t>(rng.below(cfg.n_questions));
        const auto& p = qs[q];
        Interaction i;
        i.student_id = sid;
        i.question_id = qids[q];
        i.source_id = src.source_id;
        i.concept_label = styled_label(truth.concepts[p.concept_index], style);
        i.correct = rng.bernoulli(irt::predict_prob(theta, p.a, p.b));
        i.order_index = static_cast<std::int64_t>(r);
        src.interactions.push_back(std::move(i));
      }
    }
    data.sources.push_back(std::move(src));
  }
  return data;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out << text;
}

}  // namespace

SimOutput generate_files(const SimConfig& cfg, const std::filesystem::path& out_dir) {
  SimOutput out;
  out.data = generate(cfg);
  std::filesystem::create_directories(out_dir);

  std::string kc = "from,relation,to\n";
  for (const auto& c : out.data.truth.concepts) kc += fmt::format("# concept: {}\n", c);
  for (const auto& [a, b] : out.data.truth.prereq_edges) kc += fmt::format("{},prereq,{}\n", a, b);

  for (const auto& src : out.data.sources) {
    const auto dir = out_dir / src.source_id;
    std::filesystem::create_directories(dir);
    std::string csv = "student_id,question_id,concept,correct,order\n";
    for (const auto& i : src.interactions) {
      csv += fmt::format("{},{},{},{},{}\n", i.student_id, i.question_id, i.concept_label,
                         i.correct ? 1 : 0, i.order_index);
    }
    write_file(dir / "interactions.csv", csv);
    write_file(dir / "kc_graph.csv", kc);

    DatasetManifest m;
    m.source_id = src.source_id;
    m.interactions_path = dir / "interactions.csv";
    m.kc_graph_path = dir / "kc_graph.csv";
    m.column_map = {{"student", "student_id"},
                    {"question", "question_id"},
                    {"concept", "concept"},
                    {"correct", "correct"},
                    {"order", "order"}};
    m.save(dir / "manifest.json");
    out.manifest_paths.push_back(dir / "manifest.json");
    out.manifests.push_back(std::move(m));
  }
  auto truth = out.data.truth.to_json();
  truth["config"] = cfg.to_json();
  write_file(out_dir / "truth.json", canonical_dump(truth) + "\n");
  return out;
}

}  // namespace peerkt::sim

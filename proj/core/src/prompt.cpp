#include "peerkt/prompt.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "peerkt/error.hpp"

namespace peerkt {

namespace detail {
extern const std::string_view kDefaultTemplate;
}

using nlohmann::json;

namespace {

std::string num(double x) { return fmt::format("{:.4f}", x); }

std::string join(const std::set<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ", ";
    out += x;
  }
  return out.empty() ? "none" : out;
}

std::string perf_line(const Dimension& d, const OptionalPerf& p,
                      const std::set<std::string>& sources) {
  if (!p) return fmt::format("- {}: no evidence (0 attempts)", d.str());
  return fmt::format("- {}: accuracy {}, recency-weighted accuracy {}, attempts {}, confidence {} "
                     "[sources: {}]",
                     d.str(), num(p->acc), num(p->dwa), p->attempts, num(p->conf), join(sources));
}

std::string trajectory_text(const std::vector<std::uint8_t>& t) {
  if (t.empty()) return "no prior attempts";
  std::string out;
  for (auto r : t) {
    if (!out.empty()) out += ' ';
    out += r ? '1' : '0';
  }
  return out;
}

struct Slot {
  std::size_t begin;
  std::size_t end;
  std::string name;
};

std::vector<Slot> find_slots(std::string_view text) {
  std::vector<Slot> slots;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const auto close = text.find("}}", pos + 2);
    if (close == std::string_view::npos) break;
    std::string name(text.substr(pos + 2, close - pos - 2));
    name.erase(0, name.find_first_not_of(' '));
    name.erase(name.find_last_not_of(' ') + 1);
    slots.push_back({pos, close + 2, std::move(name)});
    pos = close + 2;
  }
  return slots;
}

std::string render_metadata(const RetrievedContext& ctx) {
  const auto& m = ctx.meta;
  std::string out;
  out += fmt::format("- Student: {}\n", m.student_id);
  out += fmt::format("- Question: {} (present in the knowledge base: {})\n", m.question_id,
                     m.question_known ? "yes" : "no");
  out += fmt::format("- Ability (normalized to [0, 1]): {} (level {})\n", num(m.theta_norm),
                     to_string(m.ability_level));
  out += fmt::format("- Target concept: {} (concept match: {})\n", m.concept_key,
                     to_string(m.concept_method));
  out += fmt::format("- Difficulty level: {}\n", to_string(m.difficulty_level));
  out += fmt::format("- Question group: {}", m.qg ? *m.qg : std::string("none"));
  return out;
}

std::string render_individual(const RetrievedContext& ctx) {
  std::string out;
  for (const auto& d : ctx.dims) {
    if (!out.empty()) out += '\n';
    out += perf_line(d, ctx.target_perf.at(d), ctx.target_provenance.at(d));
  }
  return out;
}

std::string render_peers(const RetrievedContext& ctx) {
  if (ctx.peers.empty()) return "No similar students were retrieved.";
  std::string out = fmt::format("Candidate pool: {} students (pool scope: {}).", ctx.pool_size,
                                to_string(ctx.pool_level));
  for (std::size_t i = 0; i < ctx.peers.size(); ++i) {
    const auto& p = ctx.peers[i];
    const auto& s = p.similarity;
    out += fmt::format(
        "\nPeer {} ({}): overall similarity {} (behaviour {}, structure {}, ability {}); "
        "ability {}",
        i + 1, s.candidate, num(s.sim_final), num(s.sim_bhv), num(s.sim_struc), num(s.sim_abil),
        num(p.theta_norm));
    for (const auto& d : ctx.dims) {
      out += "\n  ";
      out += perf_line(d, p.perf.at(d), p.provenance.at(d));
    }
    out += fmt::format("\n  - recent outcomes: {}", trajectory_text(p.trajectory));
  }
  return out;
}

std::string render_trajectory(const RetrievedContext& ctx) {
  if (ctx.trajectory.empty()) return "No prior attempts (oldest to newest).";
  return fmt::format("{} (last {} outcomes, oldest to newest; 1 = correct)",
                     trajectory_text(ctx.trajectory), ctx.trajectory.size());
}

std::string render_reasoning(const RetrievedContext& ctx) {
  const auto k = Dimension{DimensionKind::Concept, ctx.meta.concept_key};
  const auto& own = ctx.target_perf.at(k);
  std::string peer_counts;
  for (const auto& p : ctx.peers) {
    if (!peer_counts.empty()) peer_counts += ", ";
    const auto& pp = p.perf.at(k);
    peer_counts += fmt::format("{} with {} attempts", p.similarity.candidate, pp ? pp->attempts : 0);
  }
  std::string out;
  out += fmt::format(
      "1. Context reliability: weigh each statistic by its attempt count and confidence. "
      "On the target concept the student has {} attempts; retrieved peers: {}.\n",
      own ? own->attempts : 0, peer_counts.empty() ? std::string("none") : peer_counts);
  out +=
      "2. Attribution: list positive factors (for example peer success, rising trajectory) and "
      "negative factors (for example unstable or low accuracy).\n";
  out +=
      "3. Conflict resolution: when individual and peer evidence disagree, prefer the evidence "
      "that is structurally and behaviourally consistent with the target concept.\n";
  out +=
      "4. Calibration against peer datasets: use the similar students' aggregates, including "
      "those from other platforms, to calibrate the final probability.";
  return out;
}

}  // namespace

std::string output_schema() {
  return "Return exactly one JSON object and nothing else, with fields: "
         "\"probability\" (number between 0 and 1, probability of a correct answer), "
         "\"judgment\" (\"Correct\" or \"Incorrect\"), "
         "\"ability_summary\" (string), \"mastery_summary\" (string), "
         "\"positive_factors\" (array of strings), \"negative_factors\" (array of strings), "
         "\"rationale\" (string explaining the decision and its risks, citing only numbers "
         "from the context).";
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  static constexpr std::string_view kSystem = "=== system ===";
  static constexpr std::string_view kUser = "=== user ===";
  PromptTemplate t;
  std::string_view rest = text;
  if (rest.starts_with(kSystem)) {
    rest.remove_prefix(kSystem.size());
    if (!rest.empty() && rest.front() == '\n') rest.remove_prefix(1);
  }
  const auto user = rest.find(kUser);
  if (user == std::string_view::npos) {
    t.user_text = std::string(rest);
    return t;
  }
  t.system_text = std::string(rest.substr(0, user));
  while (!t.system_text.empty() && t.system_text.back() == '\n') t.system_text.pop_back();
  rest.remove_prefix(user + kUser.size());
  if (!rest.empty() && rest.front() == '\n') rest.remove_prefix(1);
  t.user_text = std::string(rest);
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot read template " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string_view PromptTemplate::default_text() { return detail::kDefaultTemplate; }

PromptTemplate PromptTemplate::default_template() { return parse(default_text()); }

std::vector<std::string> lint_template(const PromptTemplate& tmpl) {
  std::vector<std::string> issues;
  const std::set<std::string> known(std::begin(kRequiredSlots), std::end(kRequiredSlots));
  std::set<std::string> present;
  static const std::regex kLiteral(R"((^|[^\w.])(\d+\.\d+|\.\d+|\d+\s*%))");
  for (const auto* part : {&tmpl.system_text, &tmpl.user_text}) {
    const auto slots = find_slots(*part);
    std::size_t prev = 0;
    std::string static_text;
    for (const auto& s : slots) {
      if (!known.contains(s.name)) issues.push_back("unknown slot {{" + s.name + "}}");
      present.insert(s.name);
      static_text += part->substr(prev, s.begin - prev);
      static_text += ' ';
      prev = s.end;
    }
    static_text += part->substr(prev);
    std::smatch m;
    if (std::regex_search(static_text, m, kLiteral)) {
      issues.push_back("numeric literal '" + m[2].str() + "' in template text");
    }
  }
  for (const auto& slot : known) {
    if (!present.contains(slot)) issues.push_back("missing slot {{" + slot + "}}");
  }
  return issues;
}

PromptDocument render_prompt(const RetrievedContext& ctx, const PromptTemplate& tmpl) {
  std::set<std::string> present;
  for (const auto* part : {&tmpl.system_text, &tmpl.user_text}) {
    for (const auto& s : find_slots(*part)) present.insert(s.name);
  }
  for (const auto* slot : kRequiredSlots) {
    if (!present.contains(slot)) {
      throw Error(ErrorCode::TemplateSlotMissing, std::string("template lacks {{") + slot + "}}");
    }
  }

  const std::map<std::string, std::string> values{
      {"metadata", render_metadata(ctx)},
      {"individual_metrics", render_individual(ctx)},
      {"peer_aggregates", render_peers(ctx)},
      {"trajectory", render_trajectory(ctx)},
      {"reasoning_framework", render_reasoning(ctx)},
      {"output_format", output_schema()},
  };
  auto fill = [&](const std::string& text) {
    std::string out;
    std::size_t prev = 0;
    for (const auto& s : find_slots(text)) {
      out += text.substr(prev, s.begin - prev);
      const auto it = values.find(s.name);
      if (it == values.end()) {
        throw Error(ErrorCode::TemplateSlotMissing, "template uses unknown slot {{" + s.name + "}}");
      }
      out += it->second;
      prev = s.end;
    }
    out += text.substr(prev);
    return out;
  };
  PromptDocument doc;
  doc.system_text = fill(tmpl.system_text);
  doc.user_text = fill(tmpl.user_text);
  doc.schema_hint = output_schema();
  return doc;
}

std::string_view to_string(Label label) {
  return label == Label::Correct ? "Correct" : "Incorrect";
}

namespace {

// Index one past the brace matching text[open], honouring JSON strings.
std::optional<std::size_t> matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

std::optional<json> first_object(std::string_view text) {
  static const std::regex kBareKey(R"(([\{,]\s*)([A-Za-z_][A-Za-z0-9_]*)\s*:)");
  for (auto pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    const auto end = matching_brace(text, pos);
    if (!end) continue;
    const std::string candidate(text.substr(pos, *end - pos));
    for (const auto& attempt : {candidate, std::regex_replace(candidate, kBareKey, "$1\"$2\":")}) {
      try {
        auto j = json::parse(attempt);
        if (j.is_object()) return j;
      } catch (const json::exception&) {
      }
    }
  }
  return std::nullopt;
}

// +1 correct, -1 incorrect, 0 unknown.
int judgment_sign(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower.find("incorrect") != std::string::npos || lower.find("wrong") != std::string::npos ||
      lower.find("not correct") != std::string::npos) {
    return -1;
  }
  if (lower.find("correct") != std::string::npos || lower.find("right") != std::string::npos) {
    return 1;
  }
  return 0;
}

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j[key];
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<std::string> list_field(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j[key];
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(x.is_string() ? x.get<std::string>() : x.dump());
  } else if (v.is_string()) {
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<double> number_field(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j[key];
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const auto s = v.get<std::string>();
      const double x = std::stod(s, &used);
      if (used > 0) return x;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

}  // namespace

PredictionResult parse_response(std::string_view text, double threshold) {
  PredictionResult r;
  r.raw = std::string(text);
  const auto obj = first_object(text);
  std::optional<double> prob;
  int sign = 0;
  if (obj) {
    prob = number_field(*obj, "probability");
    for (const char* key : {"judgment", "prediction", "label", "verdict"}) {
      if (obj->contains(key) && (*obj)[key].is_string()) {
        sign = judgment_sign((*obj)[key].get<std::string>());
        if (sign != 0) break;
      }
    }
    r.report.ability_summary = string_field(*obj, "ability_summary");
    r.report.mastery_summary = string_field(*obj, "mastery_summary");
    r.report.positive_factors = list_field(*obj, "positive_factors");
    r.report.negative_factors = list_field(*obj, "negative_factors");
    r.report.rationale = string_field(*obj, "rationale");
  } else {
    static const std::regex kJudgment(
        R"((judg(e)?ment|prediction|verdict)\s*[:=\-]?\s*"?\s*(likely\s+)?(in)?correct)",
        std::regex::icase);
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(text.begin(), text.end(), m, kJudgment)) {
      sign = m[4].matched ? -1 : 1;
    }
  }

  if (prob && std::isfinite(*prob)) {
    r.probability = *prob;
  } else if (sign != 0) {
    r.probability = sign > 0 ? 0.75 : 0.25;
    r.imputed = true;
  } else {
    throw Error(ErrorCode::Unparseable, "response holds neither a probability nor a judgment");
  }
  if (r.probability < 0.0 || r.probability > 1.0) {
    r.probability = std::clamp(r.probability, 0.0, 1.0);
    r.clamped = true;
  }
  r.label = label_for(r.probability, threshold);
  return r;
}

json to_json(const PredictionResult& result) {
  return json{{"probability", result.probability},
              {"judgment", std::string(to_string(result.label))},
              {"ability_summary", result.report.ability_summary},
              {"mastery_summary", result.report.mastery_summary},
              {"positive_factors", result.report.positive_factors},
              {"negative_factors", result.report.negative_factors},
              {"rationale", result.report.rationale}};
}

std::string format_response(const PredictionResult& result) {
  return to_json(result).dump();
}

}  // namespace peerkt

#include "peerkt/kc_match.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "peerkt/error.hpp"

namespace peerkt {

std::string_view to_string(MatchMethod method) {
  switch (method) {
    case MatchMethod::Exact: return "Exact";
    case MatchMethod::Similarity: return "Similarity";
    case MatchMethod::LlmJudge: return "LlmJudge";
    case MatchMethod::Unmatched: return "Unmatched";
  }
  return "Unmatched";
}

std::optional<MatchMethod> parse_match_method(std::string_view text) {
  for (auto m : {MatchMethod::Exact, MatchMethod::Similarity, MatchMethod::LlmJudge,
                 MatchMethod::Unmatched}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

std::string normalize_label(std::string_view label) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : label) {
    if (std::isalnum(c) || c >= 0x80) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::vector<std::string> label_tokens(std::string_view label) {
  const auto norm = normalize_label(label);
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < norm.size()) {
    auto end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    tokens.push_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

double TokenJaccardBackend::similarity(std::string_view label, std::string_view canonical) {
  const auto ta = label_tokens(label);
  const auto tb = label_tokens(canonical);
  const std::set<std::string> a(ta.begin(), ta.end());
  const std::set<std::string> b(tb.begin(), tb.end());
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.contains(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string judge_prompt(std::string_view label, std::string_view canonical) {
  std::string p;
  p += "You align knowledge concepts between educational platforms.\n";
  p += "Decide whether the two concepts below are equivalent. They are equivalent only if ";
  p += "ALL of the following hold:\n";
  p += "1. Pedagogical Equivalence: the concepts are pedagogically equivalent or share a very "
       "high degree of content overlap.\n";
  p += "2. Syllabus Coherence: they are typically classified under the same specific module of "
       "an educational syllabus.\n";
  p += "3. Core Skill Identity: they teach the same fundamental mathematical essence or target "
       "the same core skills.\n";
  p += "4. Exclusion of Weak Relations: the relationship is one of equivalence, not merely "
       "topical relevance or partial overlap.\n\n";
  p += "Concept A (dataset): ";
  p += label;
  p += "\nConcept B (canonical): ";
  p += canonical;
  p += "\n\nAnswer with exactly one word on the first line: EQUIVALENT or NOT_EQUIVALENT.\n";
  return p;
}

std::optional<bool> parse_judge_reply(std::string_view reply) {
  const auto first = reply.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return std::nullopt;
  auto line = reply.substr(first, reply.find('\n', first) - first);
  const auto norm = normalize_label(line);
  if (norm.starts_with("not equivalent") || norm.starts_with("no")) return false;
  if (norm.starts_with("equivalent") || norm.starts_with("yes")) return true;
  return std::nullopt;
}

KcMatch kc_match(std::string_view label, const std::vector<std::string>& canon,
                 const MatcherBackend& matcher) {
  KcMatch m;
  m.source_label = std::string(label);
  const auto norm = normalize_label(label);

  for (const auto& c : canon) {
    if (normalize_label(c) == norm) {
      m.canonical_key = c;
      m.method = MatchMethod::Exact;
      m.score = 1.0;
      return m;
    }
  }

  const std::string* best = nullptr;
  double best_score = -1.0;
  if (matcher.similarity) {
    try {
      for (const auto& c : canon) {
        const double s = matcher.similarity->similarity(label, c);
        if (s > best_score) {
          best_score = s;
          best = &c;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendUnavailable) throw;
      best = nullptr;
    }
  }
  if (best != nullptr && best_score >= matcher.threshold) {
    m.canonical_key = *best;
    m.method = MatchMethod::Similarity;
    m.score = std::clamp(best_score, 0.0, 1.0);
    return m;
  }

  if (matcher.judge && !canon.empty()) {
    // Without a similarity ranking the judge only sees the first candidate.
    const std::string& candidate = best != nullptr ? *best : canon.front();
    try {
      if (matcher.judge->equivalent(label, candidate).value_or(false)) {
        m.canonical_key = candidate;
        m.method = MatchMethod::LlmJudge;
        m.score = best != nullptr ? std::clamp(best_score, 0.0, 1.0) : 0.0;
        return m;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendUnavailable) throw;
    }
  }

  m.canonical_key = std::string(label);
  m.method = MatchMethod::Unmatched;
  m.score = best != nullptr ? std::clamp(best_score, 0.0, 1.0) : 0.0;
  return m;
}

}  // namespace peerkt

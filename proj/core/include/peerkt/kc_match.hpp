#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace peerkt {

enum class MatchMethod { Exact, Similarity, LlmJudge, Unmatched };

std::string_view to_string(MatchMethod method);
std::optional<MatchMethod> parse_match_method(std::string_view text);

struct KcMatch {
  std::string source_label;
  std::string canonical_key;
  MatchMethod method = MatchMethod::Unmatched;
  double score = 0.0;
};

inline constexpr double kSimilarityThreshold = 0.85;

/// Lowercase, punctuation mapped to spaces, whitespace collapsed.
std::string normalize_label(std::string_view label);
std::vector<std::string> label_tokens(std::string_view label);

/// Scores a dataset label against a canonical concept label in [0, 1].
/// Implementations may throw Error(BackendUnavailable).
class SimilarityBackend {
 public:
  virtual ~SimilarityBackend() = default;
  virtual double similarity(std::string_view label, std::string_view canonical) = 0;
  virtual std::string name() const = 0;
};

/// Jaccard overlap of the normalized token sets; no stemming.
class TokenJaccardBackend final : public SimilarityBackend {
 public:
  double similarity(std::string_view label, std::string_view canonical) override;
  std::string name() const override { return "token-jaccard"; }
};

/// Decides whether two concept labels are equivalent. nullopt means the judge
/// could not decide; Error(BackendUnavailable) means it could not be reached.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::optional<bool> equivalent(std::string_view label, std::string_view canonical) = 0;
};

/// The four-criteria equivalence prompt sent to an LLM judge.
std::string judge_prompt(std::string_view label, std::string_view canonical);
/// Reads a judge reply: "EQUIVALENT"/"NOT_EQUIVALENT" (or yes/no) on its first line.
std::optional<bool> parse_judge_reply(std::string_view reply);

struct MatcherBackend {
  std::shared_ptr<SimilarityBackend> similarity = std::make_shared<TokenJaccardBackend>();
  std::shared_ptr<JudgeBackend> judge;  // optional
  double threshold = kSimilarityThreshold;
};

/// Exact (normalized) -> similarity argmax above threshold -> LLM judge on the
/// argmax candidate -> Unmatched (label becomes its own canonical key).
/// Backend failures fall through to the next stage.
KcMatch kc_match(std::string_view label, const std::vector<std::string>& canon,
                 const MatcherBackend& matcher);

}  // namespace peerkt

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "peerkt/retrieval.hpp"

namespace peerkt {

/// Slots every template must contain.
inline constexpr const char* kRequiredSlots[] = {
    "metadata", "individual_metrics", "peer_aggregates", "trajectory",
    "reasoning_framework", "output_format"};

/// Prompt template with `{{slot}}` placeholders. The text before a line
/// "=== user ===" (after an optional "=== system ===" header) is the system
/// message; the rest is the user message.
struct PromptTemplate {
  std::string system_text;
  std::string user_text;

  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::filesystem::path& path);
  static PromptTemplate default_template();
  static std::string_view default_text();
};

/// Problems that make a template unusable: unknown or missing slots, and
/// numeric literals in the static text (every number in a rendered prompt
/// must come from the retrieved context).
std::vector<std::string> lint_template(const PromptTemplate& tmpl);

struct PromptDocument {
  std::string system_text;
  std::string user_text;
  std::string schema_hint;

  bool operator==(const PromptDocument&) const = default;
};

/// Pure rendering; numbers use fixed 4-decimal formatting. Throws
/// TemplateSlotMissing when a required slot is absent.
PromptDocument render_prompt(const RetrievedContext& ctx, const PromptTemplate& tmpl);

/// Description of the JSON object the predictor must return.
std::string output_schema();

enum class Label { Incorrect, Correct };
std::string_view to_string(Label label);

struct DiagnosticReport {
  std::string ability_summary;
  std::string mastery_summary;
  std::vector<std::string> positive_factors;
  std::vector<std::string> negative_factors;
  std::string rationale;

  bool operator==(const DiagnosticReport&) const = default;
};

struct PredictionResult {
  double probability = 0.5;
  Label label = Label::Correct;
  DiagnosticReport report;
  std::string raw;
  bool imputed = false;  // probability derived from the qualitative judgment
  bool clamped = false;  // probability was outside [0, 1]

  bool operator==(const PredictionResult&) const = default;
};

inline constexpr double kDefaultThreshold = 0.5;

inline Label label_for(double probability, double threshold) {
  return probability >= threshold ? Label::Correct : Label::Incorrect;
}

/// Extracts the first well-formed object from a model reply. A missing
/// probability with a present judgment is imputed as 0.75 / 0.25. Throws
/// Unparseable when neither can be found.
PredictionResult parse_response(std::string_view text, double threshold = kDefaultThreshold);

/// Serializes a result in the shape parse_response expects.
std::string format_response(const PredictionResult& result);

nlohmann::json to_json(const PredictionResult& result);

}  // namespace peerkt

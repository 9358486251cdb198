#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace peerkt {

/// One (student, question, correctness, order) event.
struct Interaction {
  std::string student_id;
  std::string question_id;
  std::string source_id;
  std::string concept_label;
  bool correct = false;
  std::int64_t order_index = 0;

  bool operator==(const Interaction&) const = default;
};

enum class Level : std::uint8_t { Low = 0, Medium = 1, High = 2 };

std::string_view to_string(Level level);
std::optional<Level> parse_level(std::string_view text);
inline constexpr Level kAllLevels[] = {Level::Low, Level::Medium, Level::High};

enum class DimensionKind : std::uint8_t {
  Concept = 0,
  Difficulty = 1,
  QuestionGroup = 2,
  AbilityLevel = 3,
};

std::string_view to_string(DimensionKind kind);

struct Dimension {
  DimensionKind kind = DimensionKind::Concept;
  std::string key;

  auto operator<=>(const Dimension&) const = default;
  bool operator==(const Dimension&) const = default;

  // "K:fractions", "D:Low", "QG:fractions|Low", "A:High"
  std::string str() const;
  static Dimension parse(std::string_view text);
};

/// Evidence-quality knobs shared by DWA and Conf.
struct ConfConfig {
  double beta = 0.8;
  double n0 = 5.0;
  std::size_t window = 10;
};

/// Aggregate performance on one dimension. Absence (zero attempts) is
/// represented by std::nullopt at the call sites, never by zeroes here.
struct PerfTuple {
  double acc = 0.0;
  double dwa = 0.0;
  std::size_t attempts = 0;
  double conf = 0.0;

  bool operator==(const PerfTuple&) const = default;
};

using OptionalPerf = std::optional<PerfTuple>;

// Source-qualified entity key; platforms may reuse raw ids.
std::string qualify(std::string_view source_id, std::string_view raw_id);

}  // namespace peerkt

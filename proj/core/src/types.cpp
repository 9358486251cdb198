#include "peerkt/types.hpp"

#include "peerkt/error.hpp"

namespace peerkt {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Low: return "Low";
    case Level::Medium: return "Medium";
    case Level::High: return "High";
  }
  return "Medium";
}

std::optional<Level> parse_level(std::string_view text) {
  if (text == "Low") return Level::Low;
  if (text == "Medium") return Level::Medium;
  if (text == "High") return Level::High;
  return std::nullopt;
}

std::string_view to_string(DimensionKind kind) {
  switch (kind) {
    case DimensionKind::Concept: return "K";
    case DimensionKind::Difficulty: return "D";
    case DimensionKind::QuestionGroup: return "QG";
    case DimensionKind::AbilityLevel: return "A";
  }
  return "K";
}

std::string Dimension::str() const {
  std::string out(to_string(kind));
  out += ':';
  out += key;
  return out;
}

Dimension Dimension::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::UnknownDimension, "malformed dimension: " + std::string(text));
  }
  const auto prefix = text.substr(0, colon);
  Dimension d;
  d.key = std::string(text.substr(colon + 1));
  if (prefix == "K") {
    d.kind = DimensionKind::Concept;
  } else if (prefix == "D") {
    d.kind = DimensionKind::Difficulty;
  } else if (prefix == "QG") {
    d.kind = DimensionKind::QuestionGroup;
  } else if (prefix == "A") {
    d.kind = DimensionKind::AbilityLevel;
  } else {
    throw Error(ErrorCode::UnknownDimension, "unknown dimension kind: " + std::string(text));
  }
  return d;
}

std::string qualify(std::string_view source_id, std::string_view raw_id) {
  std::string out;
  out.reserve(source_id.size() + raw_id.size() + 1);
  out += source_id;
  out += '/';
  out += raw_id;
  return out;
}

}  // namespace peerkt

#include "peerkt/version.hpp"

namespace peerkt {

std::string_view version() { return PEERKT_VERSION; }

}  // namespace peerkt

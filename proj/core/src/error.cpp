#include "peerkt/error.hpp"

namespace peerkt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::UnknownDimension: return "UnknownDimension";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonPositiveDiscrimination: return "NonPositiveDiscrimination";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::BadRelation: return "BadRelation";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::ConceptUnresolved: return "ConceptUnresolved";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TemplateSlotMissing: return "TemplateSlotMissing";
    case ErrorCode::Unparseable: return "Unparseable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::NoUsableRecords: return "NoUsableRecords";
    case ErrorCode::LeakageDetected: return "LeakageDetected";
    case ErrorCode::SourceOverlap: return "SourceOverlap";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::CorruptBundle: return "CorruptBundle";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::TemplateSlotMissing:
      return 1;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::Timeout:
    case ErrorCode::RateLimited:
    case ErrorCode::Unparseable:
      return 3;
    default:
      return 2;
  }
}

}  // namespace peerkt

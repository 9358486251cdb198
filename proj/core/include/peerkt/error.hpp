#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace peerkt {

enum class ErrorCode {
  OutOfOrder,
  UnknownDimension,
  EmptyHistory,
  MissingColumn,
  UnreadableFile,
  InsufficientData,
  NonPositiveDiscrimination,
  NoData,
  BadRelation,
  BackendUnavailable,
  UnknownConcept,
  UnknownNode,
  ConceptUnresolved,
  EmptyPopulation,
  DimensionMismatch,
  TemplateSlotMissing,
  Unparseable,
  Timeout,
  RateLimited,
  NoUsableRecords,
  LeakageDetected,
  SourceOverlap,
  BadConfig,
  CorruptBundle,
};

std::string_view to_string(ErrorCode code);

// Exit-code class used by the CLI: 1 usage/config, 2 data, 3 backend.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace peerkt

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace peerkt {

struct EvalRecord {
  std::string sequence_id;
  std::uint8_t label = 0;  // 1 = correct response
  double probability = 0.5;
  std::uint8_t predicted = 0;
  bool imputed = false;
  bool failed = false;
  std::string pool_level;      // retrieval fallback level, empty when failed early
  std::string concept_method;  // how the target concept resolved
  bool qg_resolved = false;
  std::string error;
};

struct Metrics {
  double acc = 0.0;
  std::optional<double> auc;  // absent unless both classes are present
  double f1 = 0.0;
  std::size_t n = 0;       // usable records
  std::size_t failed = 0;
  std::size_t imputed = 0;
};

/// Mann-Whitney AUC with ties counted one half; nullopt with a single class.
std::optional<double> auc(std::span<const double> probabilities,
                          std::span<const std::uint8_t> labels);

/// Metrics over the non-failed records; predictions are re-thresholded.
/// Throws NoUsableRecords when every record failed or the list is empty.
Metrics compute_metrics(std::span<const EvalRecord> records, double threshold = 0.5);

nlohmann::json to_json(const Metrics& m);

}  // namespace peerkt

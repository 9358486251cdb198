#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peerkt/types.hpp"

namespace peerkt {

/// Where one platform's interaction log lives and how its columns map onto
/// the canonical fields {student, question, concept, correct[, order]}.
struct DatasetManifest {
  std::string source_id;
  std::filesystem::path interactions_path;
  std::map<std::string, std::string> column_map;
  std::optional<std::filesystem::path> kc_graph_path;
  char delimiter = ',';

  /// Reads the JSON manifest; relative paths resolve against its directory.
  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct LoadReport {
  std::vector<Interaction> interactions;  // grouped by student, order_index ascending
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;           // unparseable correctness or short rows
};

/// Coerces {1,"1","true","TRUE"} to true and {0,"0","false","FALSE"} to false.
std::optional<bool> coerce_correct(std::string_view text);

/// Splits one delimited line, honouring double-quoted fields.
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

LoadReport load_interactions(const DatasetManifest& manifest);

struct EvalSequence {
  std::string id;  // "<student>#<window index>"
  std::string student_id;
  std::vector<Interaction> window;

  const Interaction& target() const { return window.back(); }
  /// Everything in the window before the target.
  std::vector<Interaction> context() const {
    return {window.begin(), window.end() - 1};
  }
};

/// Consecutive non-overlapping windows of length `length`; a trailing window
/// of length >= 2 is kept, a single leftover event is dropped.
std::vector<EvalSequence> segment(const std::vector<Interaction>& history, std::size_t length);

/// Groups a flat interaction list by student and segments each history.
std::vector<EvalSequence> segment_all(const std::vector<Interaction>& interactions,
                                      std::size_t length);

struct Split {
  std::vector<EvalSequence> train;
  std::vector<EvalSequence> test;     // every sequence of every test student
  std::vector<EvalSequence> sampled;  // the n_test uniformly drawn targets
  std::uint64_t seed = 0;
};

/// Draws n_test sequences without replacement, then moves all sequences of the
/// drawn students to the test side.
Split split_student_disjoint(const std::vector<EvalSequence>& sequences, std::size_t n_test,
                             std::uint64_t seed);

}  // namespace peerkt

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "peerkt/ingest.hpp"

namespace peerkt::sim {

enum class Topology { Chain, BalancedTree, Random };
std::string_view to_string(Topology t);
std::optional<Topology> parse_topology(std::string_view text);

/// How a source spells the shared concept labels in its interaction file.
enum class LabelStyle { Canonical, Upper, Hyphen, Reversed };
std::string_view to_string(LabelStyle s);
std::optional<LabelStyle> parse_label_style(std::string_view text);

struct SimConfig {
  std::size_t n_students = 200;   // per source
  std::size_t n_questions = 100;  // per source
  std::size_t n_concepts = 10;    // shared vocabulary
  std::size_t n_sources = 1;
  std::size_t responses_per_student = 50;
  double theta_mean = 0.0;
  double theta_sd = 1.0;
  double b_mean = 0.0;
  double b_sd = 1.0;
  double log_a_mean = 0.0;
  double log_a_sd = 0.25;
  Topology topology = Topology::Chain;
  double density = 0.2;  // random topology only
  std::uint64_t seed = 0;
  bool force_center = false;  // theta = b = 0 everywhere
  std::vector<LabelStyle> label_styles;  // per source, Canonical when missing
  std::vector<std::string> source_ids;   // defaults src0, src1, ...

  /// Reads keys matching the field names; unknown keys raise BadConfig.
  static SimConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct SimQuestion {
  double a = 1.0;
  double b = 0.0;
  std::size_t concept_index = 0;
};

/// Ground truth, keyed by source-qualified ids.
struct GroundTruth {
  std::vector<std::string> concepts;  // canonical labels
  std::vector<std::pair<std::string, std::string>> prereq_edges;
  std::map<std::string, double> theta;
  std::map<std::string, SimQuestion> questions;

  nlohmann::json to_json() const;
};

struct SimSource {
  std::string source_id;
  std::vector<Interaction> interactions;  // grouped by student, ordered
};

struct SimData {
  GroundTruth truth;
  std::vector<SimSource> sources;
};

/// Canonical label of concept i ("fraction addition", ...).
std::string concept_label(std::size_t i);
std::string styled_label(const std::string& canonical, LabelStyle style);

/// Pure, seed-deterministic generation.
SimData generate(const SimConfig& cfg);

struct SimOutput {
  SimData data;
  std::vector<DatasetManifest> manifests;
  std::vector<std::filesystem::path> manifest_paths;
};

/// generate() plus files: <out>/<source>/{interactions.csv, kc_graph.csv,
/// manifest.json} and <out>/truth.json.
SimOutput generate_files(const SimConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace peerkt::sim

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "peerkt/ingest.hpp"
#include "peerkt/knowledge_base.hpp"
#include "peerkt/metrics.hpp"
#include "peerkt/predictor.hpp"
#include "peerkt/retrieval.hpp"

namespace peerkt {

enum class BackendKind { Heuristic, Remote };
std::string_view to_string(BackendKind kind);
std::optional<BackendKind> parse_backend(std::string_view text);

struct PredictorConfig {
  BackendKind kind = BackendKind::Heuristic;
  HeuristicWeights weights;
  double threshold = kDefaultThreshold;
  bool impute = false;
  std::size_t parse_retries = 1;
  PromptTemplate tmpl = PromptTemplate::default_template();
  std::shared_ptr<CompletionBackend> remote;
  std::shared_ptr<ResponseCache> cache;
};

/// Heuristic or remote prediction for one assembled context.
PredictionResult predict(const RetrievedContext& ctx, const PredictorConfig& cfg);

struct ExperimentConfig {
  RetrievalConfig retrieval;
  PredictorConfig predictor;
  MatcherBackend matcher;
  std::size_t threads = 0;  // 0 picks the hardware concurrency
  std::size_t max_in_flight = 4;  // remote requests at once
};

/// Predicts the last event of one sequence from the events before it. Library
/// errors are caught and mark the record failed.
EvalRecord evaluate_sequence(const KnowledgeBase& kb, ConceptResolver& resolver,
                             const EvalSequence& seq, const ExperimentConfig& cfg);

struct Baselines {
  double train_accuracy = 0.0;
  Metrics constant_half;    // always 0.5
  Metrics global_accuracy;  // always the train accuracy
  Metrics question_accuracy;  // per-question train accuracy, else the global one
};

struct ExperimentReport {
  bool cold_start = false;
  std::vector<EvalRecord> records;  // in test-sequence order
  std::optional<Metrics> metrics;   // absent when no record was usable
  std::optional<Baselines> baselines;
  std::map<std::string, std::size_t> pool_levels;
  std::map<std::string, std::size_t> concept_methods;
  std::size_t qg_resolved = 0;
};

/// Throws LeakageDetected if any test student is present in the knowledge base.
void check_leakage(const KnowledgeBase& kb, const std::vector<EvalSequence>& test);
/// Throws SourceOverlap if the test source, or any of its students or
/// questions, is present in the knowledge base.
void check_source_overlap(const KnowledgeBase& kb, const std::vector<EvalSequence>& test);

ExperimentReport run_experiment(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                                const ExperimentConfig& cfg);
ExperimentReport run_cold_start(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                                const ExperimentConfig& cfg);

struct SeedRun {
  std::uint64_t seed = 0;
  std::size_t train_students = 0;
  std::size_t test_students = 0;
  ExperimentReport report;
};

struct MeanMetrics {
  double acc = 0.0;
  std::optional<double> auc;
  double f1 = 0.0;
  std::size_t seeds = 0;
};

struct MultiSeedReport {
  std::vector<SeedRun> runs;
  MeanMetrics mean;
};

MeanMetrics mean_metrics(const std::vector<SeedRun>& runs);

struct ProtocolConfig {
  std::size_t sequence_length = 25;
  std::size_t n_test = 1000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  BuildConfig build;
  ExperimentConfig experiment;
};

/// Per seed: segment all sources, draw a student-disjoint split, build the
/// knowledge base from train students only and evaluate the sampled targets.
MultiSeedReport run_protocol(const LoadedSources& data, const ProtocolConfig& cfg);

/// Fixed knowledge base: per seed, draw n_test of the test sequences (all of
/// them when n_test is 0 or too large) and evaluate.
MultiSeedReport run_fixed(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                          std::size_t n_test, const std::vector<std::uint64_t>& seeds,
                          bool cold_start, const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentReport& r);
/// Report document: config snapshot, rng algorithm, per-seed and mean metrics.
nlohmann::json report_json(const MultiSeedReport& r, const nlohmann::json& config);
/// Flat per-record table, one row per (seed, record).
std::string records_csv(const MultiSeedReport& r);

}  // namespace peerkt

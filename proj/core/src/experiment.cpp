#include "peerkt/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "peerkt/error.hpp"
#include "peerkt/rng.hpp"
#include "peerkt/version.hpp"

namespace peerkt {

using nlohmann::json;

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::Remote ? "remote" : "heuristic";
}

std::optional<BackendKind> parse_backend(std::string_view text) {
  if (text == "heuristic") return BackendKind::Heuristic;
  if (text == "remote") return BackendKind::Remote;
  return std::nullopt;
}

PredictionResult predict(const RetrievedContext& ctx, const PredictorConfig& cfg) {
  if (cfg.kind == BackendKind::Heuristic) {
    return predict_heuristic(ctx, cfg.weights, cfg.threshold);
  }
  if (!cfg.remote) throw Error(ErrorCode::BadConfig, "remote backend selected but not configured");
  const auto prompt = render_prompt(ctx, cfg.tmpl);
  RemoteOptions opts;
  opts.threshold = cfg.threshold;
  opts.impute = cfg.impute;
  opts.parse_retries = cfg.parse_retries;
  return predict_remote(prompt, *cfg.remote, cfg.cache.get(), opts).result;
}

EvalRecord evaluate_sequence(const KnowledgeBase& kb, ConceptResolver& resolver,
                             const EvalSequence& seq, const ExperimentConfig& cfg) {
  EvalRecord rec;
  rec.sequence_id = seq.id;
  rec.label = seq.target().correct ? 1 : 0;
  try {
    const auto resolved = resolve_target(kb, resolver, target_from_sequence(seq), cfg.retrieval);
    rec.concept_method = std::string(to_string(resolved.question.concept_method));
    rec.qg_resolved = resolved.question.qg.has_value();
    const auto peers = retrieve_peers(kb, resolved, cfg.retrieval);
    rec.pool_level = std::string(to_string(peers.pool_level));
    const auto ctx = assemble_context(kb, resolved, peers, cfg.retrieval);
    const auto result = predict(ctx, cfg.predictor);
    rec.probability = result.probability;
    rec.predicted = result.label == Label::Correct ? 1 : 0;
    rec.imputed = result.imputed;
  } catch (const Error& e) {
    rec.failed = true;
    rec.error = fmt::format("{}: {}", to_string(e.code()), e.what());
  }
  return rec;
}

void check_leakage(const KnowledgeBase& kb, const std::vector<EvalSequence>& test) {
  for (const auto& seq : test) {
    const auto student = qualify(seq.target().source_id, seq.student_id);
    if (kb.has_student(student)) {
      throw Error(ErrorCode::LeakageDetected,
                  "test student " + student + " is present in the knowledge base");
    }
  }
}

void check_source_overlap(const KnowledgeBase& kb, const std::vector<EvalSequence>& test) {
  const auto kb_sources = kb.sources();
  for (const auto& seq : test) {
    for (const auto& i : seq.window) {
      if (kb_sources.contains(i.source_id)) {
        throw Error(ErrorCode::SourceOverlap,
                    "test source " + i.source_id + " is present in the knowledge base");
      }
      const auto student = qualify(i.source_id, i.student_id);
      const auto question = qualify(i.source_id, i.question_id);
      if (kb.has_student(student)) {
        throw Error(ErrorCode::SourceOverlap, "test student " + student + " is in the knowledge base");
      }
      if (kb.questions.contains(question)) {
        throw Error(ErrorCode::SourceOverlap,
                    "test question " + question + " is in the knowledge base");
      }
    }
  }
}

namespace {

Metrics constant_metrics(const std::vector<EvalRecord>& records, double p, double threshold) {
  std::vector<EvalRecord> copy = records;
  for (auto& r : copy) r.probability = p;
  return compute_metrics(copy, threshold);
}

Baselines baselines_for(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                        const std::vector<EvalRecord>& records, double threshold) {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_question;
  for (const auto& [student, hist] : kb.repo.by_student()) {
    for (const auto& i : hist) {
      auto& [c, n] = per_question[i.question_id];
      c += i.correct;
      ++n;
      correct += i.correct;
      ++total;
    }
  }
  Baselines b;
  b.train_accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.5;
  b.constant_half = constant_metrics(records, 0.5, threshold);
  b.global_accuracy = constant_metrics(records, b.train_accuracy, threshold);
  std::vector<EvalRecord> copy = records;
  for (std::size_t i = 0; i < copy.size(); ++i) {
    const auto& t = test[i].target();
    const auto it = per_question.find(qualify(t.source_id, t.question_id));
    copy[i].probability = it != per_question.end() ? static_cast<double>(it->second.first) /
                                                         static_cast<double>(it->second.second)
                                                   : b.train_accuracy;
  }
  b.question_accuracy = compute_metrics(copy, threshold);
  return b;
}

ExperimentReport run_checked(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                             const ExperimentConfig& cfg, bool cold_start) {
  ExperimentReport report;
  report.cold_start = cold_start;
  report.records.resize(test.size());
  ConceptResolver resolver(kb, cfg.matcher);

  std::size_t threads = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
  if (cfg.predictor.kind == BackendKind::Remote) {
    threads = std::min(threads, std::max<std::size_t>(cfg.max_in_flight, 1));
  }
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(test.size(), 1));

  // Each worker writes only its own slots, so the result is order-independent.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < test.size(); i = next++) {
      report.records[i] = evaluate_sequence(kb, resolver, test[i], cfg);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& r : report.records) {
    if (!r.pool_level.empty()) ++report.pool_levels[r.pool_level];
    if (!r.concept_method.empty()) ++report.concept_methods[r.concept_method];
    report.qg_resolved += r.qg_resolved;
  }
  try {
    report.metrics = compute_metrics(report.records, cfg.predictor.threshold);
    report.baselines = baselines_for(kb, test, report.records, cfg.predictor.threshold);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoUsableRecords) throw;
  }
  return report;
}

}  // namespace

ExperimentReport run_experiment(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                                const ExperimentConfig& cfg) {
  check_leakage(kb, test);
  return run_checked(kb, test, cfg, false);
}

ExperimentReport run_cold_start(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                                const ExperimentConfig& cfg) {
  check_source_overlap(kb, test);
  check_leakage(kb, test);
  return run_checked(kb, test, cfg, true);
}

MeanMetrics mean_metrics(const std::vector<SeedRun>& runs) {
  MeanMetrics m;
  double auc_sum = 0.0;
  std::size_t auc_n = 0;
  for (const auto& r : runs) {
    if (!r.report.metrics) continue;
    m.acc += r.report.metrics->acc;
    m.f1 += r.report.metrics->f1;
    if (r.report.metrics->auc) {
      auc_sum += *r.report.metrics->auc;
      ++auc_n;
    }
    ++m.seeds;
  }
  if (m.seeds > 0) {
    m.acc /= static_cast<double>(m.seeds);
    m.f1 /= static_cast<double>(m.seeds);
  }
  if (auc_n > 0) m.auc = auc_sum / static_cast<double>(auc_n);
  return m;
}

namespace {

std::set<std::string> students_of(const std::vector<EvalSequence>& seqs) {
  std::set<std::string> out;
  for (const auto& s : seqs) out.insert(qualify(s.target().source_id, s.student_id));
  return out;
}

}  // namespace

MultiSeedReport run_protocol(const LoadedSources& data, const ProtocolConfig& cfg) {
  if (cfg.seeds.empty()) throw Error(ErrorCode::BadConfig, "at least one seed is required");
  std::vector<Interaction> all;
  for (const auto& src : data.sources) {
    all.insert(all.end(), src.interactions.begin(), src.interactions.end());
  }
  const auto sequences = segment_all(all, cfg.sequence_length);

  MultiSeedReport out;
  for (const auto seed : cfg.seeds) {
    const auto split = split_student_disjoint(sequences, cfg.n_test, seed);
    const auto test_students = students_of(split.test);
    std::vector<SourceData> train = data.sources;
    std::set<std::string> train_students;
    for (auto& src : train) {
      std::erase_if(src.interactions, [&](const Interaction& i) {
        return test_students.contains(qualify(i.source_id, i.student_id));
      });
      for (const auto& i : src.interactions) train_students.insert(qualify(i.source_id, i.student_id));
    }
    auto build = cfg.build;
    build.seed = seed;
    const auto kb = build_from_sources(train, data.kc_graphs, build);
    SeedRun run;
    run.seed = seed;
    run.train_students = train_students.size();
    run.test_students = test_students.size();
    run.report = run_experiment(kb, split.sampled, cfg.experiment);
    out.runs.push_back(std::move(run));
  }
  out.mean = mean_metrics(out.runs);
  return out;
}

MultiSeedReport run_fixed(const KnowledgeBase& kb, const std::vector<EvalSequence>& test,
                          std::size_t n_test, const std::vector<std::uint64_t>& seeds,
                          bool cold_start, const ExperimentConfig& cfg) {
  if (seeds.empty()) throw Error(ErrorCode::BadConfig, "at least one seed is required");
  MultiSeedReport out;
  for (const auto seed : seeds) {
    std::vector<EvalSequence> sample = test;
    if (n_test > 0 && n_test < test.size()) {
      sample = split_student_disjoint(test, n_test, seed).sampled;
    }
    SeedRun run;
    run.seed = seed;
    run.train_students = kb.students().size();
    run.test_students = students_of(sample).size();
    run.report = cold_start ? run_cold_start(kb, sample, cfg) : run_experiment(kb, sample, cfg);
    out.runs.push_back(std::move(run));
  }
  out.mean = mean_metrics(out.runs);
  return out;
}

json to_json(const ExperimentReport& r) {
  json j;
  j["mode"] = r.cold_start ? "cold_start" : "standard";
  j["metrics"] = r.metrics ? to_json(*r.metrics) : json(nullptr);
  if (r.baselines) {
    j["baselines"] = {{"train_accuracy", r.baselines->train_accuracy},
                      {"constant_half", to_json(r.baselines->constant_half)},
                      {"global_accuracy", to_json(r.baselines->global_accuracy)},
                      {"question_accuracy", to_json(r.baselines->question_accuracy)}};
  } else {
    j["baselines"] = nullptr;
  }
  const double n = static_cast<double>(std::max<std::size_t>(r.records.size(), 1));
  json pools = json::object();
  for (const auto& [k, v] : r.pool_levels) pools[k] = {{"count", v}, {"fraction", v / n}};
  json methods = json::object();
  for (const auto& [k, v] : r.concept_methods) methods[k] = {{"count", v}, {"fraction", v / n}};
  j["pool_levels"] = pools;
  j["concept_methods"] = methods;
  j["qg_resolved"] = {{"count", r.qg_resolved}, {"fraction", r.qg_resolved / n}};
  std::size_t failed = 0;
  std::size_t imputed = 0;
  json errors = json::array();
  for (const auto& rec : r.records) {
    failed += rec.failed;
    imputed += rec.imputed && !rec.failed;
    if (rec.failed) errors.push_back({{"sequence", rec.sequence_id}, {"error", rec.error}});
  }
  j["records"] = r.records.size();
  j["failed"] = failed;
  j["imputed"] = imputed;
  j["failures"] = errors;
  return j;
}

json report_json(const MultiSeedReport& r, const json& config) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    auto j = to_json(run.report);
    j["seed"] = run.seed;
    j["train_students"] = run.train_students;
    j["test_students"] = run.test_students;
    runs.push_back(std::move(j));
  }
  json mean{{"acc", r.mean.acc}, {"f1", r.mean.f1}, {"seeds", r.mean.seeds}};
  mean["auc"] = r.mean.auc ? json(*r.mean.auc) : json(nullptr);
  return json{{"tool", "peerkt"},
              {"version", std::string(version())},
              {"rng", std::string(Rng::kAlgorithm)},
              {"config", config},
              {"runs", runs},
              {"mean", mean}};
}

std::string records_csv(const MultiSeedReport& r) {
  std::string out =
      "seed,sequence_id,label,probability,predicted,imputed,failed,pool_level,concept_method,"
      "qg_resolved,error\n";
  for (const auto& run : r.runs) {
    for (const auto& rec : run.report.records) {
      std::string err = rec.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      out += fmt::format("{},{},{},{:.9f},{},{},{},{},{},{},\"{}\"\n", run.seed, rec.sequence_id,
                         rec.label, rec.probability, rec.predicted, rec.imputed ? 1 : 0,
                         rec.failed ? 1 : 0, rec.pool_level, rec.concept_method,
                         rec.qg_resolved ? 1 : 0, err);
    }
  }
  return out;
}

}  // namespace peerkt

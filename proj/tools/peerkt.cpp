// Command-line entry point; one subcommand per pipeline stage.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include "peerkt/bundle.hpp"
#include "peerkt/canonical_json.hpp"
#include "peerkt/chat_client.hpp"
#include "peerkt/error.hpp"
#include "peerkt/experiment.hpp"
#include "peerkt/simulator.hpp"
#include "peerkt/version.hpp"

namespace {

using nlohmann::json;
using namespace peerkt;

// Options shared by several subcommands, bound to CLI11 flags.
struct RetrievalOpts {
  std::size_t k = 2;
  std::size_t hops = 2;
  std::size_t cap = kDefaultPathCap;
  std::size_t trajectory = 10;
  double alpha = 0.5;
  double beta = 0.8;
  std::size_t n0 = 5;
  std::size_t window = 10;
  std::vector<double> lambda{0.4, 0.3, 0.3};
};

struct MatcherOpts {
  std::string matcher = "jaccard";
  double threshold = kSimilarityThreshold;
};

struct RemoteOpts {
  double timeout = 60.0;
  std::size_t max_retries = 3;
  double temperature = 0.0;
  double backoff = 1.0;
  double min_interval = 0.0;
  std::size_t max_in_flight = 4;
  std::string cache;
};

struct PredictOpts {
  std::string backend = "heuristic";
  double threshold = kDefaultThreshold;
  double w_irt = 0.5;
  double w_self = 0.3;
  double w_peer = 0.2;
  bool impute = false;
  std::size_t parse_retries = 1;
  std::string template_path;
};

struct TargetOpts {
  std::string bundle;
  std::string student;
  std::string question;
  std::string concept_label;
  std::int64_t as_of = std::numeric_limits<std::int64_t>::max();
  bool allow_unmatched = false;
};

void add_retrieval(CLI::App* cmd, RetrievalOpts& o) {
  cmd->add_option("--k", o.k, "Number of peers to retrieve")->check(CLI::PositiveNumber);
  cmd->add_option("--hops", o.hops, "Radius of the KC interest subgraph")->check(CLI::PositiveNumber);
  cmd->add_option("--cap", o.cap, "Path-length cap for the structural score")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--trajectory", o.trajectory, "Recent outcomes shown per student");
  cmd->add_option("--alpha", o.alpha, "Accuracy weight in the behaviour score")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--beta", o.beta, "Decay of the recency-weighted accuracy")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--conf-n0", o.n0, "Attempts needed for full confidence")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--conf-window", o.window, "Recent outcomes used for stability")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", o.lambda, "Fusion weights behaviour,structure,ability")
      ->delimiter(',')
      ->expected(3);
}

RetrievalConfig retrieval_config(const RetrievalOpts& o) {
  if (o.lambda.size() != 3) throw Error(ErrorCode::BadConfig, "--lambda needs three weights");
  double sum = 0.0;
  for (double w : o.lambda) {
    if (w < 0.0) throw Error(ErrorCode::BadConfig, "--lambda weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::BadConfig, "--lambda must sum to 1");
  if (o.beta <= 0.0 || o.beta >= 1.0) throw Error(ErrorCode::BadConfig, "--beta must be in (0, 1)");
  RetrievalConfig c;
  c.k = o.k;
  c.hops = o.hops;
  c.cap = o.cap;
  c.trajectory = o.trajectory;
  c.alpha = o.alpha;
  c.conf.beta = o.beta;
  c.conf.n0 = o.n0;
  c.conf.window = o.window;
  c.weights = {o.lambda[0], o.lambda[1], o.lambda[2]};
  return c;
}

void add_matcher(CLI::App* cmd, MatcherOpts& o) {
  cmd->add_option("--matcher", o.matcher, "Concept matcher: jaccard, llm (jaccard then judge) or none")
      ->check(CLI::IsMember({"jaccard", "llm", "none"}));
  cmd->add_option("--similarity-threshold", o.threshold, "Minimum similarity for a stage-2 match")
      ->check(CLI::Range(0.0, 1.0));
}

void add_remote(CLI::App* cmd, RemoteOpts& o) {
  cmd->add_option("--timeout", o.timeout, "Remote request timeout in seconds");
  cmd->add_option("--max-retries", o.max_retries, "Retries on timeout or rate limiting");
  cmd->add_option("--temperature", o.temperature, "Sampling temperature sent to the endpoint");
  cmd->add_option("--backoff", o.backoff, "First retry delay in seconds, doubled per retry");
  cmd->add_option("--min-interval", o.min_interval, "Minimum seconds between remote requests");
  cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent remote requests")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--cache", o.cache, "Response cache directory");
}

std::shared_ptr<ChatClient> make_client(const RemoteOpts& o) {
  RemoteConfig rc;
  rc.apply_environment();
  rc.timeout_s = o.timeout;
  rc.max_retries = o.max_retries;
  rc.temperature = o.temperature;
  rc.backoff_s = o.backoff;
  rc.min_interval_s = o.min_interval;
  return std::make_shared<ChatClient>(rc);
}

MatcherBackend make_matcher(const MatcherOpts& m, const RemoteOpts& r) {
  MatcherBackend mb;
  mb.threshold = m.threshold;
  if (m.matcher == "none") mb.similarity.reset();
  if (m.matcher == "llm") mb.judge = std::make_shared<LlmJudgeBackend>(make_client(r));
  return mb;
}

void add_predict(CLI::App* cmd, PredictOpts& o) {
  cmd->add_option("--backend", o.backend, "Predictor backend")
      ->check(CLI::IsMember({"heuristic", "remote"}));
  cmd->add_option("--threshold", o.threshold, "Decision threshold on the probability")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--w-irt", o.w_irt, "Heuristic weight of the IRT probability");
  cmd->add_option("--w-self", o.w_self, "Heuristic weight of the own recency-weighted accuracy");
  cmd->add_option("--w-peer", o.w_peer, "Heuristic weight of the peer concept accuracy");
  cmd->add_flag("--impute", o.impute, "Accept judgment-only remote replies (probability imputed)");
  cmd->add_option("--parse-retries", o.parse_retries, "Fresh requests after an unusable reply");
  cmd->add_option("--template", o.template_path, "Prompt template file (default: built in)");
}

PredictorConfig predictor_config(const PredictOpts& p, const RemoteOpts& r) {
  PredictorConfig c;
  c.kind = *parse_backend(p.backend);
  c.weights = {p.w_irt, p.w_self, p.w_peer};
  if (p.w_irt <= 0.0 || p.w_self < 0.0 || p.w_peer < 0.0) {
    throw Error(ErrorCode::BadConfig, "heuristic weights must be non-negative, w-irt positive");
  }
  c.threshold = p.threshold;
  c.impute = p.impute;
  c.parse_retries = p.parse_retries;
  if (!p.template_path.empty()) {
    c.tmpl = PromptTemplate::load(p.template_path);
    const auto issues = lint_template(c.tmpl);
    if (!issues.empty()) throw Error(ErrorCode::TemplateSlotMissing, issues.front());
  }
  if (c.kind == BackendKind::Remote) {
    c.remote = make_client(r);
    if (!r.cache.empty()) c.cache = std::make_shared<ResponseCache>(r.cache);
  }
  return c;
}

void add_target(CLI::App* cmd, TargetOpts& o) {
  cmd->add_option("--bundle", o.bundle, "Knowledge-base bundle directory")->required();
  cmd->add_option("--student", o.student, "Student id, qualified as source/raw")->required();
  cmd->add_option("--question", o.question, "Question id, qualified as source/raw");
  cmd->add_option("--concept", o.concept_label, "Concept label of the question");
  cmd->add_option("--as-of", o.as_of, "Only events with a smaller order index are used");
  cmd->add_flag("--allow-unmatched", o.allow_unmatched,
                "Fall back to the global pool for unmatched concepts");
}

// Environment beats flags: PEERKT_<LONG_NAME> overrides --long-name.
void apply_environment(CLI::App* cmd) {
  for (auto* opt : cmd->get_options()) {
    const auto& name = opt->get_lnames();
    if (name.empty() || name[0] == "help" || name[0] == "config") continue;
    std::string var = "PEERKT_";
    for (char c : name[0]) var += c == '-' ? '_' : static_cast<char>(std::toupper(c));
    const char* value = std::getenv(var.c_str());
    if (!value) continue;
    opt->clear();
    opt->add_result(std::string(value));
    opt->run_callback();
  }
}

json snapshot(const CLI::App* cmd) {
  json j = json::object();
  for (const auto* opt : cmd->get_options()) {
    const auto& name = opt->get_lnames();
    if (name.empty() || name[0] == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name[0]] = r.size() == 1 && opt->get_expected_max() <= 1 ? json(r[0]) : json(r);
    } else {
      j[name[0]] = opt->get_default_str();
    }
  }
  return j;
}

json envelope(const CLI::App* cmd) {
  return json{{"tool", "peerkt"},
              {"version", std::string(version())},
              {"command", cmd->get_name()},
              {"config", snapshot(cmd)}};
}

void emit(const json& doc, const std::string& path = {}) {
  const auto text = canonical_dump(doc) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path);
  out << text;
}

std::vector<DatasetManifest> load_manifests(const std::vector<std::string>& paths) {
  std::vector<DatasetManifest> out;
  for (const auto& p : paths) out.push_back(DatasetManifest::load(p));
  return out;
}

ResolvedTarget resolve_cli_target(const KnowledgeBase& kb, ConceptResolver& resolver,
                                  const TargetOpts& t, RetrievalConfig& rc) {
  if (t.student.find('/') == std::string::npos) {
    throw Error(ErrorCode::BadConfig, "--student must be qualified as source/raw");
  }
  if (t.question.empty() && t.concept_label.empty()) {
    throw Error(ErrorCode::BadConfig, "give --question, --concept or both");
  }
  rc.require_known_concept = !t.allow_unmatched;
  auto label = t.concept_label;
  std::string question = t.question;
  if (question.empty()) question = t.student.substr(0, t.student.find('/')) + "/<unspecified>";
  if (label.empty()) {
    const auto it = kb.questions.find(question);
    if (it == kb.questions.end()) {
      throw Error(ErrorCode::ConceptUnresolved,
                  "question " + question + " is not in the knowledge base; pass --concept");
    }
    label = it->second.concept_key;
  }
  auto target = target_from_kb(kb, t.student, question, label, t.as_of);
  return resolve_target(kb, resolver, std::move(target), rc);
}

int run(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented knowledge tracing: build, retrieve, predict, evaluate, simulate",
               "peerkt"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(version()));
  app.set_config("--config", "", "TOML/INI configuration file, one [section] per command");
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "Build a knowledge-base bundle from dataset manifests");
  std::vector<std::string> build_manifests;
  std::string build_out;
  std::uint64_t build_seed = 0;
  irt::IrtFitConfig irt_cfg;
  MatcherOpts build_matcher;
  RemoteOpts build_remote;
  build->add_option("manifests", build_manifests, "Dataset manifest files")->required();
  build->add_option("--out", build_out, "Bundle output directory")->required();
  build->add_option("--seed", build_seed, "Seed recorded in the bundle manifest");
  build->add_option("--irt-min-attempts", irt_cfg.min_attempts, "Attempts needed for a fitted parameter");
  build->add_option("--irt-tol", irt_cfg.tol, "IRT convergence tolerance");
  build->add_option("--irt-max-iters", irt_cfg.max_iters, "IRT iteration limit");
  add_matcher(build, build_matcher);
  add_remote(build, build_remote);

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Retrieve peers and the assembled context");
  TargetOpts ret_target;
  RetrievalOpts ret_opts;
  MatcherOpts ret_matcher;
  RemoteOpts ret_remote;
  add_target(retrieve, ret_target);
  add_retrieval(retrieve, ret_opts);
  add_matcher(retrieve, ret_matcher);
  add_remote(retrieve, ret_remote);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict one response");
  TargetOpts pred_target;
  RetrievalOpts pred_ret;
  MatcherOpts pred_matcher;
  RemoteOpts pred_remote;
  PredictOpts pred_opts;
  bool dump_prompt = false;
  add_target(predict_cmd, pred_target);
  add_retrieval(predict_cmd, pred_ret);
  add_matcher(predict_cmd, pred_matcher);
  add_remote(predict_cmd, pred_remote);
  add_predict(predict_cmd, pred_opts);
  predict_cmd->add_flag("--dump-prompt", dump_prompt, "Print the rendered prompt; call no backend");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate over held-out sequences");
  std::vector<std::string> eval_data;
  std::string eval_bundle;
  std::vector<std::string> eval_test;
  std::size_t eval_seeds = 5;
  std::uint64_t eval_seed_base = 0;
  std::size_t eval_n_test = 1000;
  std::size_t eval_length = 25;
  bool cold_start = false;
  std::size_t eval_threads = 0;
  std::string eval_out;
  std::string eval_records;
  RetrievalOpts eval_ret;
  MatcherOpts eval_matcher;
  RemoteOpts eval_remote;
  PredictOpts eval_pred;
  irt::IrtFitConfig eval_irt;
  evaluate->add_option("--data", eval_data,
                       "Manifests for the full protocol: split, build on train, evaluate");
  evaluate->add_option("--bundle", eval_bundle, "Fixed knowledge-base bundle");
  evaluate->add_option("--test", eval_test, "Test manifests evaluated against --bundle");
  evaluate->add_option("--seeds", eval_seeds, "Number of random splits")->check(CLI::PositiveNumber);
  evaluate->add_option("--seed-base", eval_seed_base, "First seed; seeds are consecutive");
  evaluate->add_option("--n-test", eval_n_test, "Sampled test sequences per split");
  evaluate->add_option("--length", eval_length, "Sub-sequence length")->check(CLI::Range(2, 1 << 20));
  evaluate->add_flag("--cold-start", cold_start, "Require the test source to be absent from --bundle");
  evaluate->add_option("--threads", eval_threads, "Worker threads (0: hardware concurrency)");
  evaluate->add_option("--out", eval_out, "Report path (default: standard output)");
  evaluate->add_option("--records", eval_records, "Per-record CSV path");
  evaluate->add_option("--irt-min-attempts", eval_irt.min_attempts, "Attempts needed for a fitted parameter");
  evaluate->add_option("--irt-tol", eval_irt.tol, "IRT convergence tolerance");
  evaluate->add_option("--irt-max-iters", eval_irt.max_iters, "IRT iteration limit");
  add_retrieval(evaluate, eval_ret);
  add_matcher(evaluate, eval_matcher);
  add_remote(evaluate, eval_remote);
  add_predict(evaluate, eval_pred);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic multi-source dataset");
  std::string sim_config;
  std::string sim_out;
  sim::SimConfig sim_cfg;
  std::string sim_topology = "chain";
  std::vector<std::string> sim_styles;
  simulate->add_option("--sim-config", sim_config, "JSON simulation config (overrides flags)");
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--students", sim_cfg.n_students, "Students per source");
  simulate->add_option("--questions", sim_cfg.n_questions, "Questions per source");
  simulate->add_option("--concepts", sim_cfg.n_concepts, "Shared concepts");
  simulate->add_option("--sources", sim_cfg.n_sources, "Number of sources");
  simulate->add_option("--responses", sim_cfg.responses_per_student, "Responses per student");
  simulate->add_option("--topology", sim_topology, "KC topology")
      ->check(CLI::IsMember({"chain", "balanced-tree", "random"}));
  simulate->add_option("--density", sim_cfg.density, "Edge density of the random topology");
  simulate->add_option("--label-styles", sim_styles, "Per-source label style")
      ->delimiter(',')
      ->check(CLI::IsMember({"canonical", "upper", "hyphen", "reversed"}));
  auto* sim_seed = simulate->add_option("--seed", sim_cfg.seed, "Generator seed (required without --sim-config)");

  // lint-template
  auto* lint = app.add_subcommand("lint-template", "Check a prompt template");
  std::string lint_path;
  lint->add_option("template", lint_path, "Template file (default: the built-in one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  for (auto* cmd : app.get_subcommands()) apply_environment(cmd);

  if (build->parsed()) {
    BuildConfig cfg;
    cfg.irt = irt_cfg;
    cfg.seed = build_seed;
    cfg.matcher = make_matcher(build_matcher, build_remote);
    auto kb = build_knowledge_base(load_manifests(build_manifests), cfg);
    auto env = envelope(build);
    auto embedded = env;
    embedded["config"].erase("out");
    kb.build_manifest["run"] = embedded;
    const auto checksums = save_bundle(kb, build_out);
    json nodes = json::object();
    for (auto k : {NodeKind::K, NodeKind::QG, NodeKind::Q, NodeKind::S, NodeKind::A, NodeKind::D}) {
      nodes[std::string(to_string(k))] = kb.graph.count(k);
    }
    json edges = json::object();
    for (auto k : {EdgeKind::KKPrereq, EdgeKind::KKAssoc, EdgeKind::SA, EdgeKind::SQG,
                   EdgeKind::QGD, EdgeKind::QGK, EdgeKind::QQG}) {
      edges[std::string(to_string(k))] = kb.graph.count(k);
    }
    env["nodes"] = nodes;
    env["edges"] = edges;
    env["question_groups"] = kb.qg_index.size();
    env["checksums"] = checksums;
    env["kc_match_methods"] = kb.build_manifest["kc_match_methods"];
    env["prereq_cycle"] = kb.build_manifest["prereq_cycle"];
    if (const auto problems = validate(kb); !problems.empty()) env["validation"] = problems;
    emit(env);
    return 0;
  }

  if (retrieve->parsed()) {
    const auto kb = load_bundle(ret_target.bundle);
    auto rc = retrieval_config(ret_opts);
    ConceptResolver resolver(kb, make_matcher(ret_matcher, ret_remote));
    const auto t = resolve_cli_target(kb, resolver, ret_target, rc);
    const auto peers = retrieve_peers(kb, t, rc);
    const auto ctx = assemble_context(kb, t, peers, rc);
    auto env = envelope(retrieve);
    env["peers"] = json::array();
    for (const auto& p : peers.peers) env["peers"].push_back(to_json(p));
    env["pool_level"] = std::string(to_string(peers.pool_level));
    env["pool_size"] = peers.pool_size;
    env["context"] = to_json(ctx);
    emit(env);
    return 0;
  }

  if (predict_cmd->parsed()) {
    const auto kb = load_bundle(pred_target.bundle);
    auto rc = retrieval_config(pred_ret);
    ConceptResolver resolver(kb, make_matcher(pred_matcher, pred_remote));
    const auto t = resolve_cli_target(kb, resolver, pred_target, rc);
    const auto peers = retrieve_peers(kb, t, rc);
    const auto ctx = assemble_context(kb, t, peers, rc);
    if (dump_prompt) {
      auto tmpl = pred_opts.template_path.empty() ? PromptTemplate::default_template()
                                                  : PromptTemplate::load(pred_opts.template_path);
      const auto doc = render_prompt(ctx, tmpl);
      std::cout << "=== system ===\n" << doc.system_text << "\n=== user ===\n" << doc.user_text;
      if (!doc.user_text.empty() && doc.user_text.back() != '\n') std::cout << '\n';
      return 0;
    }
    const auto pc = predictor_config(pred_opts, pred_remote);
    const auto result = predict(ctx, pc);
    auto env = envelope(predict_cmd);
    auto r = to_json(result);
    r["imputed"] = result.imputed;
    r["clamped"] = result.clamped;
    env["result"] = r;
    env["context"] = to_json(ctx);
    emit(env);
    return 0;
  }

  if (evaluate->parsed()) {
    ExperimentConfig ec;
    ec.retrieval = retrieval_config(eval_ret);
    ec.predictor = predictor_config(eval_pred, eval_remote);
    ec.matcher = make_matcher(eval_matcher, eval_remote);
    ec.threads = eval_threads;
    ec.max_in_flight = eval_remote.max_in_flight;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < eval_seeds; ++i) seeds.push_back(eval_seed_base + i);

    MultiSeedReport report;
    if (!eval_data.empty()) {
      if (!eval_bundle.empty() || !eval_test.empty() || cold_start) {
        throw Error(ErrorCode::BadConfig, "--data excludes --bundle, --test and --cold-start");
      }
      ProtocolConfig pc;
      pc.sequence_length = eval_length;
      pc.n_test = eval_n_test;
      pc.seeds = seeds;
      pc.build.irt = eval_irt;
      pc.build.matcher = ec.matcher;
      pc.experiment = ec;
      report = run_protocol(load_sources(load_manifests(eval_data)), pc);
    } else {
      if (eval_bundle.empty() || eval_test.empty()) {
        throw Error(ErrorCode::BadConfig, "give --data, or --bundle with --test");
      }
      const auto kb = load_bundle(eval_bundle);
      const auto loaded = load_sources(load_manifests(eval_test));
      std::vector<Interaction> all;
      for (const auto& s : loaded.sources) {
        all.insert(all.end(), s.interactions.begin(), s.interactions.end());
      }
      const auto seqs = segment_all(all, eval_length);
      report = run_fixed(kb, seqs, eval_n_test, seeds, cold_start, ec);
    }
    const auto env = envelope(evaluate);
    auto doc = report_json(report, env["config"]);
    doc["command"] = "evaluate";
    emit(doc, eval_out);
    if (!eval_records.empty()) {
      std::ofstream out(eval_records, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + eval_records);
      out << records_csv(report);
    }
    return 0;
  }

  if (simulate->parsed()) {
    if (!sim_config.empty()) {
      std::ifstream in(sim_config);
      if (!in) throw Error(ErrorCode::UnreadableFile, "cannot read " + sim_config);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::BadConfig, sim_config + ": " + e.what());
      }
      sim_cfg = sim::SimConfig::from_json(j);
    } else {
      if (sim_seed->count() == 0) throw Error(ErrorCode::BadConfig, "simulate needs --seed");
      sim_cfg.topology = *sim::parse_topology(sim_topology);
      for (const auto& s : sim_styles) sim_cfg.label_styles.push_back(*sim::parse_label_style(s));
    }
    const auto out = sim::generate_files(sim_cfg, sim_out);
    auto env = envelope(simulate);
    env["simulation"] = sim_cfg.to_json();
    json manifests = json::array();
    for (const auto& p : out.manifest_paths) manifests.push_back(p.generic_string());
    env["manifests"] = manifests;
    std::size_t n = 0;
    for (const auto& s : out.data.sources) n += s.interactions.size();
    env["interactions"] = n;
    emit(env);
    return 0;
  }

  if (lint->parsed()) {
    const auto tmpl =
        lint_path.empty() ? PromptTemplate::default_template() : PromptTemplate::load(lint_path);
    const auto issues = lint_template(tmpl);
    for (const auto& i : issues) std::cerr << i << '\n';
    if (!issues.empty()) throw Error(ErrorCode::TemplateSlotMissing, issues.front());
    std::cout << "template ok\n";
    return 0;
  }
  return 1;
}

void report_error(std::string_view code, std::string_view message, int exit_code) {
  std::cerr << json{{"error", code}, {"message", message}, {"exit", exit_code}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const peerkt::Error& e) {
    const int rc = peerkt::exit_code_for(e.code());
    report_error(peerkt::to_string(e.code()), e.what(), rc);
    return rc;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error("UnreadableFile", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    report_error("Internal", e.what(), 2);
    return 2;
  }
}

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "httplib.h"
#include "peerkt/chat_client.hpp"
#include "peerkt/error.hpp"
#include "peerkt/predictor.hpp"
#include "test_support.hpp"

using namespace peerkt;
using namespace peerkt::testing;

namespace {

class ScriptedBackend : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(std::string_view, std::string_view) override {
    const auto i = calls.fetch_add(1);
    return replies_[std::min<std::size_t>(i, replies_.size() - 1)];
  }
  std::string model() const override { return "scripted"; }
  std::atomic<std::size_t> calls{0};

 private:
  std::vector<std::string> replies_;
};

class DownBackend : public CompletionBackend {
 public:
  std::string complete(std::string_view, std::string_view) override {
    ++calls;
    throw Error(ErrorCode::BackendUnavailable, "connection refused");
  }
  std::string model() const override { return "down"; }
  std::atomic<std::size_t> calls{0};
};

PromptDocument doc(std::string user = "predict please") {
  return PromptDocument{"system", std::move(user), output_schema()};
}

sim::SimData population() {
  sim::SimConfig cfg;
  cfg.n_students = 30;
  cfg.n_questions = 20;
  cfg.n_concepts = 4;
  cfg.responses_per_student = 20;
  cfg.seed = 51;
  return sim::generate(cfg);
}

RetrievedContext sample_context() {
  static const KnowledgeBase kb = kb_of(population());
  const auto s = kb.students().front();
  const auto& e = kb.repo.history(s)[10];
  RetrievalConfig cfg;
  ResolvedTarget t;
  const auto r = library_retrieve(kb, s, e.question_id, e.order_index, cfg, &t);
  return assemble_context(kb, t, r, cfg);
}

}  // namespace

TEST(Heuristic, Examples) {
  const HeuristicWeights w;
  EXPECT_DOUBLE_EQ(blend(HeuristicTerms{0.5, std::nullopt, std::nullopt}, w), 0.5);
  EXPECT_NEAR(blend(HeuristicTerms{0.8, 1.0, 0.9}, w), 0.88, 1e-12);
  EXPECT_NEAR(blend(HeuristicTerms{0.8, std::nullopt, std::nullopt}, w), 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(blend(HeuristicTerms{1.0, 1.0, 1.0}, w), kHeuristicCeil);
  EXPECT_DOUBLE_EQ(blend(HeuristicTerms{0.0, 0.0, 0.0}, w), kHeuristicFloor);
  EXPECT_EQ(label_for(0.5, kDefaultThreshold), Label::Correct);
}

TEST(Heuristic, MonotoneInEachTerm) {
  const HeuristicWeights w;
  for (double base = 0.0; base <= 1.0; base += 0.1) {
    for (double lo = 0.0; lo < 1.0; lo += 0.1) {
      const double hi = lo + 0.05;
      EXPECT_LE(blend({lo, base, base}, w), blend({hi, base, base}, w));
      EXPECT_LE(blend({base, lo, base}, w), blend({base, hi, base}, w));
      EXPECT_LE(blend({base, base, lo}, w), blend({base, base, hi}, w));
    }
  }
}

TEST(Heuristic, TermsComeFromContext) {
  auto ctx = sample_context();
  ctx.meta.question_params = irt::QuestionParam{};
  ctx.meta.question_params->a = 1.0;
  ctx.meta.question_params->b = 0.0;
  ctx.meta.theta = 0.0;
  const Dimension k{DimensionKind::Concept, ctx.meta.concept_key};
  ctx.target_perf[k] = PerfTuple{0.5, 1.0, 4, 0.5};
  for (auto& p : ctx.peers) p.perf[k] = PerfTuple{0.9, 0.9, 3, 0.4};
  auto terms = heuristic_terms(ctx);
  EXPECT_NEAR(terms.p_irt, 0.5, 1e-12);
  EXPECT_EQ(terms.self_dwa, 1.0);
  if (!ctx.peers.empty()) EXPECT_NEAR(*terms.peer_acc, 0.9, 1e-12);

  ctx.meta.question_params.reset();
  ctx.target_perf[k] = std::nullopt;
  for (auto& p : ctx.peers) p.perf[k] = std::nullopt;
  terms = heuristic_terms(ctx);
  EXPECT_DOUBLE_EQ(terms.p_irt, 0.5);
  EXPECT_FALSE(terms.self_dwa);
  EXPECT_FALSE(terms.peer_acc);
  const auto r = predict_heuristic(ctx);
  EXPECT_DOUBLE_EQ(r.probability, 0.5);
  EXPECT_EQ(r.label, Label::Correct);
}

TEST(Heuristic, Deterministic) {
  const auto ctx = sample_context();
  const auto a = predict_heuristic(ctx);
  EXPECT_EQ(a, predict_heuristic(ctx));
  EXPECT_FALSE(a.report.rationale.empty());
  EXPECT_GE(a.probability, kHeuristicFloor);
  EXPECT_LE(a.probability, kHeuristicCeil);
}

TEST(Cache, HitMakesNoCalls) {
  const ResponseCache cache(scratch_dir("cache_hit"));
  ScriptedBackend backend({R"({"probability": 0.7, "judgment": "Correct"})"});
  const auto first = predict_remote(doc(), backend, &cache);
  EXPECT_FALSE(first.cache_hit);
  EXPECT_EQ(backend.calls, 1u);
  const auto second = predict_remote(doc(), backend, &cache);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(second.requests, 0u);
  EXPECT_EQ(backend.calls, 1u);
  EXPECT_EQ(second.result, first.result);
  // A different prompt or model misses.
  EXPECT_NE(ResponseCache::key(doc(), "m1"), ResponseCache::key(doc(), "m2"));
  EXPECT_NE(ResponseCache::key(doc("a"), "m1"), ResponseCache::key(doc("b"), "m1"));
  predict_remote(doc("other"), backend, &cache);
  EXPECT_EQ(backend.calls, 2u);
}

TEST(Cache, EntryLayout) {
  const ResponseCache cache(scratch_dir("cache_layout"));
  const auto key = ResponseCache::key(doc(), "m");
  cache.put(key, doc(), "m", "reply text");
  EXPECT_EQ(cache.get(key), "reply text");
  std::ifstream in(cache.dir() / (key + ".json"));
  ASSERT_TRUE(in.good());
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("model"), "m");
  EXPECT_EQ(j.at("prompt"), ResponseCache::prompt_bytes(doc()));
  EXPECT_TRUE(j.contains("timestamp"));
  EXPECT_FALSE(cache.get("0000").has_value());
}

TEST(Remote, UnparseableAfterRetries) {
  ScriptedBackend backend({"I cannot help with that."});
  try {
    predict_remote(doc(), backend, nullptr, RemoteOptions{0.5, false, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unparseable);
  }
  EXPECT_EQ(backend.calls, 3u);
}

TEST(Remote, RetryRecoversFromBadReply) {
  const ResponseCache cache(scratch_dir("cache_retry"));
  ScriptedBackend backend({"garbage", R"({"probability": 0.3})"});
  const auto out = predict_remote(doc(), backend, &cache);
  EXPECT_EQ(out.requests, 2u);
  EXPECT_DOUBLE_EQ(out.result.probability, 0.3);
  EXPECT_EQ(cache.get(ResponseCache::key(doc(), "scripted")), R"({"probability": 0.3})");
}

TEST(Remote, ImputationNeedsOptIn) {
  ScriptedBackend strict({R"({"judgment": "Incorrect"})"});
  EXPECT_THROW(predict_remote(doc(), strict, nullptr, RemoteOptions{0.5, false, 0}), Error);
  ScriptedBackend lenient({R"({"judgment": "Incorrect"})"});
  const auto out = predict_remote(doc(), lenient, nullptr, RemoteOptions{0.5, true, 0});
  EXPECT_TRUE(out.result.imputed);
  EXPECT_DOUBLE_EQ(out.result.probability, 0.25);
}

TEST(Remote, FailingBackendMarksRecordsFailedAndRunContinues) {
  const auto data = population();
  const auto split = split_student_disjoint(segment_all(data.sources[0].interactions, 10), 12, 3);
  const auto kb = kb_without(data, students_of(split.test));
  const auto& sequences = split.sampled;
  ASSERT_EQ(sequences.size(), 12u);
  ExperimentConfig cfg;
  cfg.predictor.kind = BackendKind::Remote;
  auto down = std::make_shared<DownBackend>();
  cfg.predictor.remote = down;
  const auto report = run_experiment(kb, sequences, cfg);
  ASSERT_EQ(report.records.size(), 12u);
  for (const auto& r : report.records) {
    EXPECT_TRUE(r.failed);
    EXPECT_NE(r.error.find("BackendUnavailable"), std::string::npos) << r.error;
    EXPECT_FALSE(r.pool_level.empty());
  }
  EXPECT_FALSE(report.metrics.has_value());
  EXPECT_EQ(down->calls, 12u);
}

TEST(RemoteConfig, MissingSettingsAreBadConfig) {
  RemoteConfig cfg;
  try {
    cfg.require_complete();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
    EXPECT_NE(std::string(e.what()).find("PEERKT_API_BASE"), std::string::npos);
  }
  ::setenv("PEERKT_API_BASE", "http://127.0.0.1:1/v1", 1);
  ::setenv("PEERKT_API_KEY", "k", 1);
  ::setenv("PEERKT_MODEL", "m", 1);
  cfg.apply_environment();
  EXPECT_NO_THROW(cfg.require_complete());
  EXPECT_EQ(cfg.model, "m");
  ::unsetenv("PEERKT_API_BASE");
  ::unsetenv("PEERKT_API_KEY");
  ::unsetenv("PEERKT_MODEL");
}

class LocalServer : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  RemoteConfig config() const {
    RemoteConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.api_key = "secret";
    c.model = "tiny";
    c.timeout_s = 5;
    c.backoff_s = 0.01;
    c.max_retries = 3;
    return c;
  }
  static std::string reply(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
        .dump();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(LocalServer, SuccessfulCompletion) {
  std::string seen_auth;
  nlohmann::json seen_body;
  server_.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = nlohmann::json::parse(req.body);
    res.set_content(reply(R"({"probability": 0.64})"), "application/json");
  });
  ChatClient client(config());
  const auto out = predict_remote(doc(), client, nullptr);
  EXPECT_DOUBLE_EQ(out.result.probability, 0.64);
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_body.at("model"), "tiny");
  EXPECT_EQ(seen_body.at("messages").size(), 2u);
  EXPECT_EQ(seen_body.at("temperature"), 0.0);
}

TEST_F(LocalServer, RateLimitIsRetried) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (hits.fetch_add(1) < 2) {
      res.status = 429;
      return;
    }
    res.set_content(reply("ok"), "application/json");
  });
  ChatClient client(config());
  EXPECT_EQ(client.complete("s", "u"), "ok");
  EXPECT_EQ(hits.load(), 3);
}

TEST_F(LocalServer, ExhaustedRetriesRethrow) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });
  auto cfg = config();
  cfg.max_retries = 1;
  ChatClient client(cfg);
  try {
    client.complete("s", "u");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RateLimited);
  }
  EXPECT_EQ(hits.load(), 2);
}

TEST_F(LocalServer, ServerErrorIsBackendUnavailable) {
  server_.Post("/v1/chat/completions",
               [&](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  ChatClient client(config());
  try {
    client.complete("s", "u");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendUnavailable);
  }
}

TEST_F(LocalServer, JudgeUsesClient) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(reply("EQUIVALENT"), "application/json");
  });
  MatcherBackend m;
  m.judge = std::make_shared<LlmJudgeBackend>(std::make_shared<ChatClient>(config()));
  EXPECT_EQ(kc_match("adding fractions", {"fraction addition"}, m).method, MatchMethod::LlmJudge);
}

#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "peerkt/kc_match.hpp"

namespace peerkt {

/// Chat-completion endpoint settings. Credentials are read from the
/// environment only (PEERKT_API_BASE, PEERKT_API_KEY, PEERKT_MODEL).
struct RemoteConfig {
  std::string base_url;
  std::string api_key;
  std::string model;
  double timeout_s = 60.0;
  std::size_t max_retries = 3;
  double temperature = 0.0;
  double backoff_s = 1.0;          // first retry delay, doubled per attempt
  double min_interval_s = 0.0;     // rate limit between requests

  /// Overlays the PEERKT_API_* variables. Missing variables leave fields as is.
  void apply_environment();
  /// Throws BadConfig naming the missing settings.
  void require_complete() const;
};

/// Anything that turns a (system, user) message pair into reply text.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(std::string_view system_text, std::string_view user_text) = 0;
  virtual std::string model() const = 0;
};

/// Minimal blocking client for an OpenAI-style /chat/completions endpoint.
/// Retries Timeout and RateLimited with exponential backoff; the error of the
/// last attempt is rethrown.
class ChatClient final : public CompletionBackend {
 public:
  explicit ChatClient(RemoteConfig cfg);

  std::string complete(std::string_view system_text, std::string_view user_text) override;
  std::string model() const override { return cfg_.model; }

  const RemoteConfig& config() const { return cfg_; }

 private:
  std::string attempt(std::string_view system_text, std::string_view user_text);
  void pace();

  RemoteConfig cfg_;
  std::mutex pace_mutex_;
  std::chrono::steady_clock::time_point last_request_{};
};

/// Stage-3 concept judge backed by a chat client.
class LlmJudgeBackend final : public JudgeBackend {
 public:
  explicit LlmJudgeBackend(std::shared_ptr<CompletionBackend> client) : client_(std::move(client)) {}
  std::optional<bool> equivalent(std::string_view label, std::string_view canonical) override;

 private:
  std::shared_ptr<CompletionBackend> client_;
};

}  // namespace peerkt

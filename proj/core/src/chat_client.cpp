#include "peerkt/chat_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "json.hpp"
#include "peerkt/error.hpp"

namespace peerkt {

using nlohmann::json;

void RemoteConfig::apply_environment() {
  if (const char* v = std::getenv("PEERKT_API_BASE")) base_url = v;
  if (const char* v = std::getenv("PEERKT_API_KEY")) api_key = v;
  if (const char* v = std::getenv("PEERKT_MODEL")) model = v;
}

void RemoteConfig::require_complete() const {
  std::string missing;
  if (base_url.empty()) missing += " PEERKT_API_BASE";
  if (model.empty()) missing += " PEERKT_MODEL";
  if (!missing.empty()) {
    throw Error(ErrorCode::BadConfig, "remote backend not configured; set" + missing);
  }
}

ChatClient::ChatClient(RemoteConfig cfg) : cfg_(std::move(cfg)) { cfg_.require_complete(); }

void ChatClient::pace() {
  if (cfg_.min_interval_s <= 0.0) return;
  std::lock_guard lock(pace_mutex_);
  const auto gap = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(cfg_.min_interval_s));
  const auto next = last_request_ + gap;
  const auto now = std::chrono::steady_clock::now();
  if (now < next) std::this_thread::sleep_for(next - now);
  last_request_ = std::chrono::steady_clock::now();
}

std::string ChatClient::attempt(std::string_view system_text, std::string_view user_text) {
  // Split "scheme://host[:port]/prefix" into the client origin and path prefix.
  std::string origin = cfg_.base_url;
  std::string prefix;
  const auto scheme = origin.find("://");
  const auto slash = origin.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    prefix = origin.substr(slash);
    origin.erase(slash);
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  json body{{"model", cfg_.model},
            {"temperature", cfg_.temperature},
            {"messages", json::array({{{"role", "system"}, {"content", system_text}},
                                      {{"role", "user"}, {"content", user_text}}})}};
  pace();
  auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::Timeout, "request timed out: " + httplib::to_string(err));
    }
    throw Error(ErrorCode::BackendUnavailable, "request failed: " + httplib::to_string(err));
  }
  if (res->status == 429) throw Error(ErrorCode::RateLimited, "endpoint returned 429");
  if (res->status == 408 || res->status == 504) {
    throw Error(ErrorCode::Timeout, "endpoint returned " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::BackendUnavailable, "endpoint returned " + std::to_string(res->status));
  }
  try {
    const auto reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, std::string("malformed completion: ") + e.what());
  }
}

std::string ChatClient::complete(std::string_view system_text, std::string_view user_text) {
  double delay = cfg_.backoff_s;
  for (std::size_t i = 0;; ++i) {
    try {
      return attempt(system_text, user_text);
    } catch (const Error& e) {
      const bool retryable = e.code() == ErrorCode::Timeout || e.code() == ErrorCode::RateLimited;
      if (!retryable || i >= cfg_.max_retries) throw;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    delay *= 2.0;
  }
}

std::optional<bool> LlmJudgeBackend::equivalent(std::string_view label,
                                                std::string_view canonical) {
  std::string reply;
  try {
    reply = client_->complete("You compare knowledge-concept labels.",
                              judge_prompt(label, canonical));
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendUnavailable, e.what());
  }
  return parse_judge_reply(reply);
}

}  // namespace peerkt

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "peerkt/chat_client.hpp"
#include "peerkt/prompt.hpp"

namespace peerkt {

/// Blend weights of the offline heuristic. They are configuration, not fitted.
struct HeuristicWeights {
  double irt = 0.5;
  double self = 0.3;
  double peer = 0.2;
};

/// Terms of the heuristic blend; absent terms drop out.
struct HeuristicTerms {
  double p_irt = 0.5;
  std::optional<double> self_dwa;
  std::optional<double> peer_acc;
};

inline constexpr double kHeuristicFloor = 0.01;
inline constexpr double kHeuristicCeil = 0.99;

/// Weighted mean of the present terms, clamped to [0.01, 0.99].
double blend(const HeuristicTerms& terms, const HeuristicWeights& w);

/// P_IRT from the fitted question (0.5 if unfitted), the target's DWA on its
/// concept and the mean concept accuracy of the retrieved peers.
HeuristicTerms heuristic_terms(const RetrievedContext& ctx);

PredictionResult predict_heuristic(const RetrievedContext& ctx, const HeuristicWeights& w = {},
                                   double threshold = kDefaultThreshold);

/// Content-addressed store of model replies: one JSON file per
/// sha256(prompt bytes, model) with {prompt, response, timestamp, model}.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key(const PromptDocument& prompt, std::string_view model);
  static std::string prompt_bytes(const PromptDocument& prompt);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const PromptDocument& prompt, std::string_view model,
           std::string_view response) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct RemoteOptions {
  double threshold = kDefaultThreshold;
  bool impute = false;           // accept judgment-only replies
  std::size_t parse_retries = 1; // fresh requests after an unusable reply
};

struct RemoteOutcome {
  PredictionResult result;
  bool cache_hit = false;
  std::size_t requests = 0;
};

/// Cache first, then the backend. Throws Unparseable when no usable reply was
/// obtained (an imputed reply counts as unusable unless impute is set);
/// transport errors propagate.
RemoteOutcome predict_remote(const PromptDocument& prompt, CompletionBackend& backend,
                             const ResponseCache* cache, const RemoteOptions& opts = {});

}  // namespace peerkt

#include "peerkt/predictor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "peerkt/error.hpp"
#include "peerkt/hash.hpp"
#include "peerkt/irt.hpp"

namespace peerkt {

using nlohmann::json;

double blend(const HeuristicTerms& terms, const HeuristicWeights& w) {
  double num = w.irt * terms.p_irt;
  double den = w.irt;
  if (terms.self_dwa) {
    num += w.self * *terms.self_dwa;
    den += w.self;
  }
  if (terms.peer_acc) {
    num += w.peer * *terms.peer_acc;
    den += w.peer;
  }
  const double p = den > 0.0 ? num / den : 0.5;
  return std::clamp(p, kHeuristicFloor, kHeuristicCeil);
}

HeuristicTerms heuristic_terms(const RetrievedContext& ctx) {
  HeuristicTerms t;
  if (ctx.meta.question_params) {
    const auto& q = *ctx.meta.question_params;
    t.p_irt = irt::predict_prob(ctx.meta.theta, q.a, q.b);
  }
  const Dimension k{DimensionKind::Concept, ctx.meta.concept_key};
  if (const auto it = ctx.target_perf.find(k); it != ctx.target_perf.end() && it->second) {
    t.self_dwa = it->second->dwa;
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : ctx.peers) {
    const auto it = p.perf.find(k);
    if (it != p.perf.end() && it->second) {
      sum += it->second->acc;
      ++n;
    }
  }
  if (n > 0) t.peer_acc = sum / static_cast<double>(n);
  return t;
}

PredictionResult predict_heuristic(const RetrievedContext& ctx, const HeuristicWeights& w,
                                   double threshold) {
  const auto terms = heuristic_terms(ctx);
  PredictionResult r;
  r.probability = blend(terms, w);
  r.label = label_for(r.probability, threshold);

  auto& rep = r.report;
  rep.ability_summary = fmt::format("normalized ability {:.4f} ({})", ctx.meta.theta_norm,
                                    to_string(ctx.meta.ability_level));
  rep.mastery_summary =
      terms.self_dwa
          ? fmt::format("recency-weighted accuracy on {} is {:.4f}", ctx.meta.concept_key,
                        *terms.self_dwa)
          : fmt::format("no prior attempts on {}", ctx.meta.concept_key);
  auto factor = [&](std::string text, double value) {
    (value >= 0.5 ? rep.positive_factors : rep.negative_factors).push_back(std::move(text));
  };
  factor(fmt::format("IRT probability {:.4f}{}", terms.p_irt,
                     ctx.meta.question_params ? "" : " (question not fitted)"),
         terms.p_irt);
  if (terms.self_dwa) factor(fmt::format("own recency-weighted accuracy {:.4f}", *terms.self_dwa),
                             *terms.self_dwa);
  if (terms.peer_acc) factor(fmt::format("peer concept accuracy {:.4f}", *terms.peer_acc),
                             *terms.peer_acc);

  std::string parts = fmt::format("{:.4f}*irt({:.4f})", w.irt, terms.p_irt);
  if (terms.self_dwa) parts += fmt::format(" + {:.4f}*self({:.4f})", w.self, *terms.self_dwa);
  if (terms.peer_acc) parts += fmt::format(" + {:.4f}*peer({:.4f})", w.peer, *terms.peer_acc);
  rep.rationale = fmt::format("weighted blend of present terms {} renormalized, clamped to "
                              "[{:.2f}, {:.2f}] gives {:.4f}",
                              parts, kHeuristicFloor, kHeuristicCeil, r.probability);
  return r;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::prompt_bytes(const PromptDocument& prompt) {
  return prompt.system_text + "\n\x1e\n" + prompt.user_text;
}

std::string ResponseCache::key(const PromptDocument& prompt, std::string_view model) {
  return sha256_hex(prompt_bytes(prompt) + "\n\x1f\n" + std::string(model));
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const auto j = json::parse(in);
    return j.at("response").get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const PromptDocument& prompt,
                        std::string_view model, std::string_view response) const {
  const auto now = std::chrono::system_clock::now();
  const json j{{"prompt", prompt_bytes(prompt)},
               {"response", response},
               {"model", model},
               {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(
                                 now.time_since_epoch()).count()}};
  // Write then rename so concurrent readers never see a partial file.
  std::ostringstream tid;
  tid << std::this_thread::get_id();
  const auto tmp = dir_ / (key + ".tmp" + tid.str());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write cache " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir_ / (key + ".json"));
}

namespace {

std::optional<PredictionResult> usable(std::string_view reply, const RemoteOptions& opts,
                                       std::string& why) {
  try {
    auto r = parse_response(reply, opts.threshold);
    if (r.imputed && !opts.impute) {
      why = "reply has a judgment but no probability";
      return std::nullopt;
    }
    return r;
  } catch (const Error& e) {
    why = e.what();
    return std::nullopt;
  }
}

}  // namespace

RemoteOutcome predict_remote(const PromptDocument& prompt, CompletionBackend& backend,
                             const ResponseCache* cache, const RemoteOptions& opts) {
  RemoteOutcome out;
  const auto key = ResponseCache::key(prompt, backend.model());
  std::string why;
  if (cache) {
    if (auto hit = cache->get(key)) {
      if (auto r = usable(*hit, opts, why)) {
        out.result = std::move(*r);
        out.cache_hit = true;
        return out;
      }
    }
  }
  for (std::size_t i = 0; i <= opts.parse_retries; ++i) {
    const auto reply = backend.complete(prompt.system_text, prompt.user_text);
    ++out.requests;
    if (auto r = usable(reply, opts, why)) {
      if (cache) cache->put(key, prompt, backend.model(), reply);
      out.result = std::move(*r);
      return out;
    }
  }
  throw Error(ErrorCode::Unparseable, "no usable reply after " + std::to_string(out.requests) +
                                          " requests: " + why);
}

}  // namespace peerkt

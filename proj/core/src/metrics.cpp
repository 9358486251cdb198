#include "peerkt/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "peerkt/error.hpp"

namespace peerkt {

std::optional<double> auc(std::span<const double> probabilities,
                          std::span<const std::uint8_t> labels) {
  if (probabilities.size() != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "probabilities and labels differ in length");
  }
  std::vector<std::size_t> idx(probabilities.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return probabilities[a] < probabilities[b]; });

  // Count in half units: each positive gains 2 per lower negative, 1 per tie.
  std::uint64_t half_units = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t pos = 0;
  std::uint64_t neg = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t p = 0;
    std::uint64_t n = 0;
    while (j < idx.size() && probabilities[idx[j]] == probabilities[idx[i]]) {
      (labels[idx[j]] ? p : n) += 1;
      ++j;
    }
    half_units += p * (2 * neg_below + n);
    neg_below += n;
    pos += p;
    neg += n;
    i = j;
  }
  if (pos == 0 || neg == 0) return std::nullopt;
  return static_cast<double>(half_units) / (2.0 * static_cast<double>(pos * neg));
}

Metrics compute_metrics(std::span<const EvalRecord> records, double threshold) {
  Metrics m;
  std::vector<double> probs;
  std::vector<std::uint8_t> labels;
  std::size_t hits = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (const auto& r : records) {
    if (r.failed) {
      ++m.failed;
      continue;
    }
    if (r.imputed) ++m.imputed;
    const bool pred = r.probability >= threshold;
    const bool truth = r.label != 0;
    hits += pred == truth;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
    probs.push_back(r.probability);
    labels.push_back(r.label);
  }
  m.n = probs.size();
  if (m.n == 0) throw Error(ErrorCode::NoUsableRecords, "no usable evaluation records");
  m.acc = static_cast<double>(hits) / static_cast<double>(m.n);
  const double denom = static_cast<double>(2 * tp + fp + fn);
  m.f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  m.auc = auc(probs, labels);
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j{{"acc", m.acc},
                   {"f1", m.f1},
                   {"n", m.n},
                   {"failed", m.failed},
                   {"imputed", m.imputed}};
  j["auc"] = m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr);
  return j;
}

}  // namespace peerkt

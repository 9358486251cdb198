#include "peerkt/repository.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "peerkt/error.hpp"

namespace peerkt {

double dwa(std::span<const std::uint8_t> outcomes, double beta) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::EmptyHistory, "dwa: empty outcome list");
  }
  // Walk backwards so the most recent outcome carries weight beta^0.
  double weight = 1.0;
  double num = 0.0;
  double den = 0.0;
  for (auto it = outcomes.rbegin(); it != outcomes.rend(); ++it) {
    num += weight * static_cast<double>(*it != 0);
    den += weight;
    weight *= beta;
  }
  return num / den;
}

double confidence(std::span<const std::uint8_t> outcomes, const ConfConfig& cfg) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::EmptyHistory, "confidence: empty outcome list");
  }
  const auto n = static_cast<double>(outcomes.size());
  const double sufficiency = std::min(1.0, n / cfg.n0);

  const std::size_t w = std::min(outcomes.size(), std::max<std::size_t>(cfg.window, 1));
  const auto recent = outcomes.subspan(outcomes.size() - w);
  double ones = 0.0;
  for (auto r : recent) ones += static_cast<double>(r != 0);
  const double p = ones / static_cast<double>(w);
  const double stddev = std::sqrt(p * (1.0 - p));
  const double stability = 1.0 - 2.0 * stddev;

  return std::clamp(sufficiency * stability, 0.0, 1.0);
}

OptionalPerf perf_of(std::span<const std::uint8_t> outcomes, const ConfConfig& cfg) {
  if (outcomes.empty()) return std::nullopt;
  std::size_t ones = 0;
  for (auto r : outcomes) ones += (r != 0);
  PerfTuple t;
  t.attempts = outcomes.size();
  t.acc = static_cast<double>(ones) / static_cast<double>(t.attempts);
  t.dwa = dwa(outcomes, cfg.beta);
  t.conf = confidence(outcomes, cfg);
  return t;
}

std::span<const std::uint8_t> OutcomeList::before(std::int64_t as_of) const {
  const auto end = std::lower_bound(orders.begin(), orders.end(), as_of);
  const auto n = static_cast<std::size_t>(end - orders.begin());
  return std::span<const std::uint8_t>(correct.data(), n);
}

void InteractionRepository::register_dimension(const Dimension& dim) {
  known_dims_.insert(dim);
}

std::uint16_t InteractionRepository::source_index(const std::string& source_id) {
  const auto it = std::find(sources_.begin(), sources_.end(), source_id);
  if (it != sources_.end()) return static_cast<std::uint16_t>(it - sources_.begin());
  if (sources_.size() >= std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::BadConfig, "too many distinct sources");
  }
  sources_.push_back(source_id);
  return static_cast<std::uint16_t>(sources_.size() - 1);
}

void InteractionRepository::record(const Interaction& i, std::span<const Dimension> dims) {
  auto& hist = by_student_[i.student_id];
  if (!hist.empty() && i.order_index <= hist.back().order_index) {
    throw Error(ErrorCode::OutOfOrder,
                "order_index " + std::to_string(i.order_index) + " not after " +
                    std::to_string(hist.back().order_index) + " for student " + i.student_id);
  }
  for (const auto& d : dims) {
    if (!known_dims_.contains(d)) {
      if (hist.empty()) by_student_.erase(i.student_id);
      throw Error(ErrorCode::UnknownDimension, "unknown dimension " + d.str());
    }
  }

  const auto src = source_index(i.source_id);
  hist.push_back(i);
  dims_by_student_[i.student_id].emplace_back(dims.begin(), dims.end());
  for (const auto& d : dims) {
    auto& list = by_dimension_[{i.student_id, d}];
    list.orders.push_back(i.order_index);
    list.correct.push_back(i.correct ? 1 : 0);
    list.sources.push_back(src);
    first_order_on_dim_[d].try_emplace(i.student_id, i.order_index);
  }
  ++total_;
}

const std::vector<Interaction>& InteractionRepository::history(const std::string& student) const {
  static const std::vector<Interaction> kEmpty;
  const auto it = by_student_.find(student);
  return it == by_student_.end() ? kEmpty : it->second;
}

const OutcomeList* InteractionRepository::outcomes(const std::string& student,
                                                    const Dimension& dim) const {
  const auto it = by_dimension_.find({student, dim});
  return it == by_dimension_.end() ? nullptr : &it->second;
}

const std::vector<Dimension>& InteractionRepository::dims_of(const std::string& student,
                                                             std::size_t index) const {
  return dims_by_student_.at(student).at(index);
}

std::vector<std::string> InteractionRepository::students_on(const Dimension& dim,
                                                           std::int64_t as_of) const {
  std::vector<std::string> out;
  const auto it = first_order_on_dim_.find(dim);
  if (it == first_order_on_dim_.end()) return out;
  for (const auto& [student, first] : it->second) {
    if (first < as_of) out.push_back(student);
  }
  return out;
}

OptionalPerf InteractionRepository::perf(const std::string& student, const Dimension& dim,
                                         const ConfConfig& cfg, std::int64_t as_of) const {
  const auto* list = outcomes(student, dim);
  if (list == nullptr) return std::nullopt;
  return perf_of(list->before(as_of), cfg);
}

std::set<std::string> InteractionRepository::provenance(const std::string& student,
                                                        const Dimension& dim,
                                                        std::int64_t as_of) const {
  std::set<std::string> out;
  const auto* list = outcomes(student, dim);
  if (list == nullptr) return out;
  const auto n = list->before(as_of).size();
  for (std::size_t i = 0; i < n; ++i) out.insert(sources_[list->sources[i]]);
  return out;
}

}  // namespace peerkt

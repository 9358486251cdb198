#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "peerkt/types.hpp"

namespace peerkt {

/// Recency-weighted accuracy: sum(beta^(N-i) r_i) / sum(beta^(N-i)), the last
/// element being the most recent. Throws EmptyHistory on an empty list.
double dwa(std::span<const std::uint8_t> outcomes, double beta);

/// Sample sufficiency min(1, N/n0) times stability 1 - 2*std(last `window`
/// outcomes), clamped to [0,1].
double confidence(std::span<const std::uint8_t> outcomes, const ConfConfig& cfg);

/// Full tuple over a non-empty outcome list; nullopt when empty.
OptionalPerf perf_of(std::span<const std::uint8_t> outcomes, const ConfConfig& cfg);

/// Per-dimension outcome list, ordered by order_index.
struct OutcomeList {
  std::vector<std::int64_t> orders;
  std::vector<std::uint8_t> correct;
  std::vector<std::uint16_t> sources;  // index into InteractionRepository::sources()

  std::size_t size() const { return orders.size(); }
  // Outcomes with order_index strictly below as_of.
  std::span<const std::uint8_t> before(std::int64_t as_of) const;
};

inline constexpr std::int64_t kNoCutoff = INT64_MAX;

/// Multi-dimensional interaction repository. Single writer while building,
/// read-only afterwards.
class InteractionRepository {
 public:
  using StudentDim = std::pair<std::string, Dimension>;

  /// Dimensions must be registered before interactions may reference them.
  void register_dimension(const Dimension& dim);
  bool has_dimension(const Dimension& dim) const { return known_dims_.contains(dim); }
  const std::set<Dimension>& dimensions() const { return known_dims_; }

  /// Appends `i` to the student's history and to each (student, dim) list.
  /// Throws OutOfOrder / UnknownDimension; the repository is unchanged on error.
  void record(const Interaction& i, std::span<const Dimension> dims);

  const std::vector<Interaction>& history(const std::string& student) const;
  const OutcomeList* outcomes(const std::string& student, const Dimension& dim) const;
  const std::vector<Dimension>& dims_of(const std::string& student, std::size_t index) const;

  /// Students with at least one outcome on `dim` strictly before as_of.
  std::vector<std::string> students_on(const Dimension& dim, std::int64_t as_of = kNoCutoff) const;

  OptionalPerf perf(const std::string& student, const Dimension& dim, const ConfConfig& cfg,
                    std::int64_t as_of = kNoCutoff) const;

  /// Source ids behind the outcomes counted by perf(...).
  std::set<std::string> provenance(const std::string& student, const Dimension& dim,
                                   std::int64_t as_of = kNoCutoff) const;

  const std::map<std::string, std::vector<Interaction>>& by_student() const { return by_student_; }
  const std::map<StudentDim, OutcomeList>& by_dimension() const { return by_dimension_; }
  const std::vector<std::string>& sources() const { return sources_; }

  std::size_t interaction_count() const { return total_; }
  bool empty() const { return total_ == 0; }

 private:
  std::uint16_t source_index(const std::string& source_id);

  std::set<Dimension> known_dims_;
  std::map<std::string, std::vector<Interaction>> by_student_;
  std::map<std::string, std::vector<std::vector<Dimension>>> dims_by_student_;
  std::map<StudentDim, OutcomeList> by_dimension_;
  std::map<Dimension, std::map<std::string, std::int64_t>> first_order_on_dim_;
  std::vector<std::string> sources_;
  std::size_t total_ = 0;
};

}  // namespace peerkt

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "peerkt/repository.hpp"
#include "peerkt/types.hpp"

namespace peerkt::irt {

inline constexpr double kMinDiscrimination = 0.25;
inline constexpr double kMaxDiscrimination = 3.0;
inline constexpr double kMaxLogit = 4.0;

enum Flag : std::uint32_t {
  kNone = 0,
  kBelowMinAttempts = 1u << 0,  // fallback values, not fitted
  kNonIdentifiable = 1u << 1,   // all-correct or all-incorrect responses
  kClamped = 1u << 2,
};

struct StudentParam {
  double theta = 0.0;
  double theta_norm = 0.5;
  Level level = Level::Medium;
  std::uint32_t flags = kNone;

  bool operator==(const StudentParam&) const = default;
};

struct QuestionParam {
  double a = 1.0;
  double b = 0.0;
  double b_norm = 0.5;
  Level level = Level::Medium;
  std::uint32_t flags = kNone;

  bool operator==(const QuestionParam&) const = default;
};

struct IrtParams {
  std::map<std::string, StudentParam> students;
  std::map<std::string, QuestionParam> questions;
  // Min/max of the fitted raw scales, used to normalize abilities of
  // students estimated after the fit.
  double theta_min = 0.0;
  double theta_max = 0.0;
  double b_min = 0.0;
  double b_max = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  double normalize_theta(double theta) const;
  bool operator==(const IrtParams&) const = default;
};

struct IrtFitConfig {
  std::size_t min_attempts = 3;
  double tol = 1e-4;
  std::size_t max_iters = 200;
  double theta_prior_sd = 1.0;
  double b_prior_sd = 1.0;
  double log_a_prior_mean = 0.0;
  double log_a_prior_sd = 0.5;
};

/// 1 / (1 + exp(-a (theta - b))). Throws NonPositiveDiscrimination for a <= 0.
double predict_prob(double theta, double a, double b);

/// Bernoulli log-likelihood of one response and its gradient with respect to
/// (theta, a, b).
struct LogLikGrad {
  double value;
  double d_theta;
  double d_a;
  double d_b;
};
LogLikGrad response_loglik(double theta, double a, double b, bool correct);

/// Penalized joint MAP fit by alternating Newton steps over all interactions
/// recorded in the repository (keys are the repository's student/question ids).
IrtParams fit_2pl(const InteractionRepository& repo, const IrtFitConfig& cfg = {});

struct ItemResponse {
  double a;
  double b;
  bool correct;
};

/// MAP ability for a student not in the fit, with item parameters held fixed.
double estimate_ability(std::span<const ItemResponse> responses, const IrtFitConfig& cfg = {});

/// Low if x <= mu - sigma, High if x >= mu + sigma, Medium otherwise.
Level bucket_level(double x, double mu, double sigma);

/// Population mean and standard deviation.
std::pair<double, double> mean_sd(std::span<const double> xs);

/// Rounds to 9 fractional digits so persisted decimals reload bit-exactly.
double quantize(double x);

}  // namespace peerkt::irt

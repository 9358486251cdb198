#include "peerkt/irt.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "peerkt/error.hpp"

namespace peerkt::irt {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Newton step limited to one logit unit per half-iteration.
double damped(double grad, double hess) {
  return std::clamp(-grad / hess, -1.0, 1.0);
}

struct Response {
  std::size_t student;
  std::size_t question;
  bool correct;
};

double normalized(double x, double lo, double hi) {
  if (!(hi > lo)) return 0.5;
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

double IrtParams::normalize_theta(double theta) const {
  return normalized(theta, theta_min, theta_max);
}

double predict_prob(double theta, double a, double b) {
  if (!(a > 0.0)) {
    throw Error(ErrorCode::NonPositiveDiscrimination,
                "discrimination must be positive, got " + std::to_string(a));
  }
  return logistic(a * (theta - b));
}

LogLikGrad response_loglik(double theta, double a, double b, bool correct) {
  const double z = a * (theta - b);
  const double p = logistic(z);
  const double resid = (correct ? 1.0 : 0.0) - p;
  LogLikGrad g{};
  g.value = correct ? -softplus(-z) : -softplus(z);
  g.d_theta = a * resid;
  g.d_a = (theta - b) * resid;
  g.d_b = -a * resid;
  return g;
}

double quantize(double x) {
  return std::round(x * 1e9) / 1e9;
}

std::pair<double, double> mean_sd(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

Level bucket_level(double x, double mu, double sigma) {
  if (x <= mu - sigma && !(sigma == 0.0 && x == mu)) return Level::Low;
  if (x >= mu + sigma && !(sigma == 0.0 && x == mu)) return Level::High;
  return Level::Medium;
}

IrtParams fit_2pl(const InteractionRepository& repo, const IrtFitConfig& cfg) {
  if (repo.empty()) throw Error(ErrorCode::NoData, "cannot fit IRT on an empty repository");

  std::vector<std::string> student_ids;
  std::vector<std::string> question_ids;
  std::unordered_map<std::string, std::size_t> question_index;
  std::vector<std::size_t> student_count;
  std::vector<std::size_t> question_count;
  std::vector<std::size_t> student_correct;
  std::vector<std::size_t> question_correct;
  std::vector<Response> all;

  for (const auto& [student, hist] : repo.by_student()) {
    const std::size_t si = student_ids.size();
    student_ids.push_back(student);
    student_count.push_back(hist.size());
    student_correct.push_back(0);
    for (const auto& i : hist) {
      auto [it, inserted] = question_index.try_emplace(i.question_id, question_ids.size());
      if (inserted) {
        question_ids.push_back(i.question_id);
        question_count.push_back(0);
        question_correct.push_back(0);
      }
      ++question_count[it->second];
      question_correct[it->second] += i.correct;
      student_correct[si] += i.correct;
      all.push_back({si, it->second, i.correct});
    }
  }

  const std::size_t ns = student_ids.size();
  const std::size_t nq = question_ids.size();
  std::vector<bool> s_fit(ns), q_fit(nq);
  for (std::size_t s = 0; s < ns; ++s) s_fit[s] = student_count[s] >= cfg.min_attempts;
  for (std::size_t q = 0; q < nq; ++q) q_fit[q] = question_count[q] >= cfg.min_attempts;

  std::vector<Response> responses;
  for (const auto& r : all) {
    if (s_fit[r.student] && q_fit[r.question]) responses.push_back(r);
  }

  std::vector<double> theta(ns, 0.0), b(nq, 0.0), log_a(nq, 0.0);
  const double inv_var_theta = 1.0 / (cfg.theta_prior_sd * cfg.theta_prior_sd);
  const double inv_var_b = 1.0 / (cfg.b_prior_sd * cfg.b_prior_sd);
  const double inv_var_la = 1.0 / (cfg.log_a_prior_sd * cfg.log_a_prior_sd);
  const double la_lo = std::log(kMinDiscrimination);
  const double la_hi = std::log(kMaxDiscrimination);

  std::vector<double> grad(std::max(ns, nq)), hess(std::max(ns, nq));
  std::vector<double> grad2(nq), hess2(nq);

  IrtParams out;
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    double max_change = 0.0;

    // Abilities with item parameters fixed.
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (const auto& r : responses) {
      const double a = std::exp(log_a[r.question]);
      const double p = logistic(a * (theta[r.student] - b[r.question]));
      grad[r.student] += a * ((r.correct ? 1.0 : 0.0) - p);
      hess[r.student] -= a * a * p * (1.0 - p);
    }
    for (std::size_t s = 0; s < ns; ++s) {
      if (!s_fit[s]) continue;
      const double g = grad[s] - theta[s] * inv_var_theta;
      const double h = hess[s] - inv_var_theta;
      const double next = std::clamp(theta[s] + damped(g, h), -kMaxLogit, kMaxLogit);
      max_change = std::max(max_change, std::abs(next - theta[s]));
      theta[s] = next;
    }

    // Difficulty and log-discrimination with abilities fixed.
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    std::fill(grad2.begin(), grad2.end(), 0.0);
    std::fill(hess2.begin(), hess2.end(), 0.0);
    for (const auto& r : responses) {
      const double a = std::exp(log_a[r.question]);
      const double diff = theta[r.student] - b[r.question];
      const double p = logistic(a * diff);
      const double w = p * (1.0 - p);
      const double resid = (r.correct ? 1.0 : 0.0) - p;
      grad[r.question] += -a * resid;
      hess[r.question] -= a * a * w;
      grad2[r.question] += a * diff * resid;
      hess2[r.question] -= a * a * diff * diff * w;
    }
    for (std::size_t q = 0; q < nq; ++q) {
      if (!q_fit[q]) continue;
      const double gb = grad[q] - b[q] * inv_var_b;
      const double hb = hess[q] - inv_var_b;
      const double next_b = std::clamp(b[q] + damped(gb, hb), -kMaxLogit, kMaxLogit);
      const double ga = grad2[q] - (log_a[q] - cfg.log_a_prior_mean) * inv_var_la;
      const double ha = hess2[q] - inv_var_la;
      const double next_la = std::clamp(log_a[q] + damped(ga, ha), la_lo, la_hi);
      max_change = std::max(max_change, std::abs(next_b - b[q]));
      max_change = std::max(max_change, std::abs(std::exp(next_la) - std::exp(log_a[q])));
      b[q] = next_b;
      log_a[q] = next_la;
    }

    out.iterations = iter + 1;
    if (max_change < cfg.tol) {
      out.converged = true;
      break;
    }
  }

  std::vector<double> theta_q(ns), b_q(nq);
  for (std::size_t s = 0; s < ns; ++s) theta_q[s] = quantize(theta[s]);
  for (std::size_t q = 0; q < nq; ++q) b_q[q] = quantize(b[q]);

  const auto [tmin, tmax] = std::minmax_element(theta_q.begin(), theta_q.end());
  out.theta_min = *tmin;
  out.theta_max = *tmax;
  const auto [bmin, bmax] = std::minmax_element(b_q.begin(), b_q.end());
  out.b_min = *bmin;
  out.b_max = *bmax;

  std::vector<double> theta_norm(ns), b_norm(nq);
  for (std::size_t s = 0; s < ns; ++s) {
    theta_norm[s] = quantize(normalized(theta_q[s], out.theta_min, out.theta_max));
  }
  for (std::size_t q = 0; q < nq; ++q) {
    b_norm[q] = quantize(normalized(b_q[q], out.b_min, out.b_max));
  }
  const auto [tmu, tsd] = mean_sd(theta_norm);
  const auto [bmu, bsd] = mean_sd(b_norm);

  for (std::size_t s = 0; s < ns; ++s) {
    StudentParam p;
    p.theta = theta_q[s];
    p.theta_norm = theta_norm[s];
    p.level = bucket_level(theta_norm[s], tmu, tsd);
    if (!s_fit[s]) p.flags |= kBelowMinAttempts;
    if (student_correct[s] == 0 || student_correct[s] == student_count[s]) {
      p.flags |= kNonIdentifiable;
    }
    if (std::abs(p.theta) >= kMaxLogit) p.flags |= kClamped;
    out.students.emplace(student_ids[s], p);
  }
  for (std::size_t q = 0; q < nq; ++q) {
    QuestionParam p;
    p.a = quantize(std::exp(log_a[q]));
    p.b = b_q[q];
    p.b_norm = b_norm[q];
    p.level = bucket_level(b_norm[q], bmu, bsd);
    if (!q_fit[q]) p.flags |= kBelowMinAttempts;
    if (question_correct[q] == 0 || question_correct[q] == question_count[q]) {
      p.flags |= kNonIdentifiable;
    }
    if (std::abs(p.b) >= kMaxLogit || log_a[q] <= la_lo || log_a[q] >= la_hi) {
      p.flags |= kClamped;
    }
    out.questions.emplace(question_ids[q], p);
  }
  return out;
}

double estimate_ability(std::span<const ItemResponse> responses, const IrtFitConfig& cfg) {
  const double inv_var = 1.0 / (cfg.theta_prior_sd * cfg.theta_prior_sd);
  double theta = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double g = -theta * inv_var;
    double h = -inv_var;
    for (const auto& r : responses) {
      const double p = logistic(r.a * (theta - r.b));
      g += r.a * ((r.correct ? 1.0 : 0.0) - p);
      h -= r.a * r.a * p * (1.0 - p);
    }
    const double step = damped(g, h);
    theta = std::clamp(theta + step, -kMaxLogit, kMaxLogit);
    if (std::abs(step) < 1e-10) break;
  }
  return theta;
}

}  // namespace peerkt::irt

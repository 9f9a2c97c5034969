#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "percolab/errors.hpp"

namespace percolab {

inline constexpr double kZ95 = 1.96;

struct EstimateSummary {
  double point = 0.0;
  double variance_of_point = 0.0;
  double std_error = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
  std::uint64_t replicates = 0;
  std::uint64_t master_seed = 0;
};

inline EstimateSummary make_summary(double point, double variance_of_point, std::uint64_t replicates,
                                    std::uint64_t seed) {
  EstimateSummary s;
  s.point = point;
  s.variance_of_point = std::max(variance_of_point, 0.0);
  s.std_error = std::sqrt(s.variance_of_point);
  s.ci95_lo = point - kZ95 * s.std_error;
  s.ci95_hi = point + kZ95 * s.std_error;
  s.replicates = replicates;
  s.master_seed = seed;
  return s;
}

// Scales point and stderr by a constant factor c.
inline EstimateSummary scaled(const EstimateSummary& s, double c) {
  return make_summary(c * s.point, c * c * s.variance_of_point, s.replicates, s.master_seed);
}

// Two-pass central moments, summed in index order.
struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // Bessel-corrected
  double m2 = 0.0;        // biased central second moment
  double m4 = 0.0;        // biased central fourth moment

  static SampleMoments of(std::span<const double> xs) {
    SampleMoments m;
    m.count = xs.size();
    if (xs.empty()) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / static_cast<double>(xs.size());
    double s2 = 0.0;
    double s4 = 0.0;
    for (double x : xs) {
      const double d = x - m.mean;
      const double d2 = d * d;
      s2 += d2;
      s4 += d2 * d2;
    }
    const double r = static_cast<double>(xs.size());
    m.m2 = s2 / r;
    m.m4 = s4 / r;
    m.variance = xs.size() > 1 ? s2 / (r - 1.0) : 0.0;
    return m;
  }
};

inline EstimateSummary summarize_mean(std::span<const double> xs, std::uint64_t seed) {
  if (xs.size() < 2) throw InvalidArgument("a mean with standard error needs at least 2 replicates");
  const auto m = SampleMoments::of(xs);
  return make_summary(m.mean, m.variance / static_cast<double>(xs.size()), xs.size(), seed);
}

// Bessel-corrected sample variance; its sampling variance from the fourth
// central moment: Var(s^2) ~ (m4 - (R-3)/(R-1) s^4) / R.
inline EstimateSummary summarize_variance(std::span<const double> xs, std::uint64_t seed) {
  if (xs.size() < 2) throw InvalidArgument("a sample variance needs at least 2 replicates");
  const auto m = SampleMoments::of(xs);
  const double r = static_cast<double>(xs.size());
  const double s4 = m.variance * m.variance;
  const double var_of_var = (m.m4 - (r - 3.0) / (r - 1.0) * s4) / r;
  return make_summary(m.variance, var_of_var, xs.size(), seed);
}

// Proportion with binomial standard error; R = 1 reports zero error.
inline EstimateSummary summarize_proportion(std::uint64_t hits, std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw InvalidArgument("proportion of zero trials");
  const double r = static_cast<double>(trials);
  const double phat = static_cast<double>(hits) / r;
  const double var = trials > 1 ? phat * (1.0 - phat) / (r - 1.0) : 0.0;
  return make_summary(phat, var, trials, seed);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance sup_x |F_R(x) - Phi(x)| of an already
// standardized sample. Ties are handled by evaluating both one-sided limits at
// each distinct value.
inline double ks_distance_normal(std::vector<double> z) {
  if (z.empty()) throw InvalidArgument("empty sample");
  std::sort(z.begin(), z.end());
  const double r = static_cast<double>(z.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < z.size()) {
    std::size_t j = i;
    while (j < z.size() && z[j] == z[i]) ++j;
    const double phi = normal_cdf(z[i]);
    const double below = static_cast<double>(i) / r;
    const double at = static_cast<double>(j) / r;
    d = std::max({d, std::abs(phi - below), std::abs(at - phi)});
    i = j;
  }
  return d;
}

}  // namespace percolab

#pragma once

// Replicated Monte Carlo estimates of the cluster-count statistics and their
// comparison with the variance limit p(1-p) * (-kappa'(p)).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "percolab/clusters.hpp"
#include "percolab/errors.hpp"
#include "percolab/events.hpp"
#include "percolab/lattice.hpp"
#include "percolab/parallel.hpp"
#include "percolab/poly.hpp"
#include "percolab/rng.hpp"
#include "percolab/stats.hpp"

namespace percolab {

inline constexpr std::uint64_t kMaxStoredReplicates = 10'000'000;
inline constexpr double kDefaultEpsilon = 0.005;
inline constexpr double kDefaultKsThreshold = 0.05;

struct RunOptions {
  std::uint64_t replicates = 2;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
};

inline void check_replicates(std::uint64_t r, std::uint64_t minimum) {
  if (r < minimum) throw InvalidArgument("need at least " + std::to_string(minimum) + " replicates");
  if (r > kMaxStoredReplicates) throw InvalidArgument("replicate count exceeds 10^7");
}

// M_n for replicates 0..R-1, index-addressed.
inline std::vector<double> sample_cluster_counts(const BoxSpec& box, double p, const RunOptions& opt) {
  check_probability(p);
  check_replicates(opt.replicates, 1);
  std::vector<double> counts(opt.replicates);
  for_each_replicate(opt.replicates, opt.workers, [&](unsigned, std::uint64_t i) {
    const BondConfig config = sample_config(box, p, RngContract{opt.master_seed, i});
    counts[i] = static_cast<double>(cluster_count(config));
  });
  return counts;
}

struct MomentEstimates {
  EstimateSummary mean;
  EstimateSummary variance;
  std::vector<double> samples;
};

inline MomentEstimates estimate_moments_Mn(const BoxSpec& box, double p, const RunOptions& opt) {
  check_replicates(opt.replicates, 2);
  MomentEstimates out;
  out.samples = sample_cluster_counts(box, p, opt);
  out.mean = summarize_mean(out.samples, opt.master_seed);
  out.variance = summarize_variance(out.samples, opt.master_seed);
  return out;
}

inline EstimateSummary variance_density(const MomentEstimates& m, const BoxSpec& box) {
  return scaled(m.variance, 1.0 / static_cast<double>(box.vertex_count()));
}

inline EstimateSummary variance_density(const BoxSpec& box, double p, const RunOptions& opt) {
  return variance_density(estimate_moments_Mn(box, p, opt), box);
}

struct KappaPrimeEstimate {
  EstimateSummary kappa_prime;        // -d * P(G_m(b0)) at the stopping radius
  int radius = 0;                     // radius where the stopping rule was met
  std::vector<RadiusEstimate> scan;   // full growing-box sequence
};

struct KappaOptions {
  std::vector<int> radii{8, 16, 32, 64, 128};
  double epsilon = kDefaultEpsilon;
  std::uint64_t replicates = 10'000;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
};

// kappa'(p) = -d P_p(G(b0)), with G approximated by G_m on the growing-box
// schedule. Stops at the first consecutive pair whose paired gap
// |P(G_m) - P(G_m')| is below epsilon and reports the larger radius.
inline KappaPrimeEstimate estimate_kappa_prime(int d, double p, const KappaOptions& opt) {
  if (opt.radii.size() < 2) throw InvalidArgument("the stopping rule needs at least two radii");
  if (!(opt.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  ScanOptions scan;
  scan.d = d;
  scan.p = p;
  scan.radii = opt.radii;
  scan.replicates = opt.replicates;
  scan.master_seed = opt.master_seed;
  scan.workers = opt.workers;
  KappaPrimeEstimate out;
  out.scan = estimate_G_infinity(scan);
  for (std::size_t j = 1; j < out.scan.size(); ++j) {
    if (std::abs(out.scan[j].drop.point) < opt.epsilon) {
      out.radius = out.scan[j].radius;
      out.kappa_prime = scaled(out.scan[j].estimate, -static_cast<double>(d));
      return out;
    }
  }
  throw NonConvergence("growing-box gap stayed >= " + std::to_string(opt.epsilon) + " up to radius " +
                       std::to_string(opt.radii.back()) + " (last gap " +
                       std::to_string(out.scan.back().drop.point) + ")");
}

struct TheoremComparison {
  double p = 0.0;
  int d = 0;
  int n = 0;
  EstimateSummary mean;
  EstimateSummary variance;
  EstimateSummary empirical_density;   // Var(M_n) / (2n+1)^d
  KappaPrimeEstimate kappa;
  EstimateSummary predicted_limit;     // -(p^2(1-p) + p(1-p)^2) kappa'
  double gap = 0.0;
  double gap_in_stderr = 0.0;
};

// Asserts p^2(1-p) + p(1-p)^2 == p(1-p) as polynomials once, then evaluates
// the short form.
inline double variance_limit_prefactor(double p) {
  static const bool simplified = [] {
    const PolyP full = PolyP::p() * PolyP::p() * PolyP::one_minus_p() +
                       PolyP::p() * PolyP::one_minus_p() * PolyP::one_minus_p();
    return full == PolyP::p() * PolyP::one_minus_p();
  }();
  if (!simplified) throw SelfCheckViolation("prefactor does not reduce to p(1-p)");
  return p * (1.0 - p);
}

inline double gap_in_stderr(double gap, double se_a, double se_b) {
  const double se = std::hypot(se_a, se_b);
  if (se == 0.0) return gap == 0.0 ? 0.0 : std::copysign(INFINITY, gap);
  return gap / se;
}

inline TheoremComparison compare_to_theorem(const BoxSpec& box, double p, const RunOptions& run,
                                            const KappaOptions& kappa) {
  TheoremComparison out;
  out.p = p;
  out.d = box.dim();
  out.n = box.radius();
  const MomentEstimates moments = estimate_moments_Mn(box, p, run);
  out.mean = moments.mean;
  out.variance = moments.variance;
  out.empirical_density = variance_density(moments, box);
  out.kappa = estimate_kappa_prime(box.dim(), p, kappa);
  out.predicted_limit = scaled(out.kappa.kappa_prime, -variance_limit_prefactor(p));
  out.gap = out.empirical_density.point - out.predicted_limit.point;
  out.gap_in_stderr =
      gap_in_stderr(out.gap, out.empirical_density.std_error, out.predicted_limit.std_error);
  return out;
}

// Average over replicates of (1/|B(n)|) sum_v 1/|C(v) within B(n)|. Each
// replicate's sum must equal its M_n; a mismatch means the cluster sizes are
// wrong.
inline EstimateSummary estimate_kappa_inverse_cluster(const BoxSpec& box, double p, const RunOptions& opt) {
  check_probability(p);
  check_replicates(opt.replicates, 1);
  const double volume = static_cast<double>(box.vertex_count());
  std::vector<double> per_replicate(opt.replicates);
  for_each_replicate(opt.replicates, opt.workers, [&](unsigned, std::uint64_t i) {
    const BondConfig config = sample_config(box, p, RngContract{opt.master_seed, i});
    const ClusterLabeling labels = count_clusters(config);
    double inverse_sum = 0.0;
    for (VertexIndex v = 0; v < box.vertex_count(); ++v) inverse_sum += 1.0 / labels.cluster_size(v);
    const double m = static_cast<double>(labels.count);
    if (std::abs(inverse_sum - m) > 1e-9 * volume) {
      throw SelfCheckViolation("sum of inverse cluster sizes " + std::to_string(inverse_sum) +
                               " differs from M_n " + std::to_string(labels.count));
    }
    per_replicate[i] = inverse_sum / volume;
  });
  if (opt.replicates == 1) return make_summary(per_replicate[0], 0.0, 1, opt.master_seed);
  return summarize_mean(per_replicate, opt.master_seed);
}

struct CltResult {
  double ks_distance = 0.0;
  double threshold = kDefaultKsThreshold;
  bool pass = false;
};

inline CltResult clt_check(std::span<const double> samples, double threshold = kDefaultKsThreshold) {
  if (samples.size() < 500) throw InvalidArgument("the normality check needs at least 500 replicates");
  const auto m = SampleMoments::of(samples);
  const double sd = std::sqrt(m.variance);
  if (!(sd > 0.0)) throw DegenerateSample("sample standard deviation is zero");
  std::vector<double> z(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) z[i] = (samples[i] - m.mean) / sd;
  CltResult out;
  out.threshold = threshold;
  out.ks_distance = ks_distance_normal(std::move(z));
  out.pass = out.ks_distance < threshold;
  return out;
}

inline CltResult clt_check(const BoxSpec& box, double p, const RunOptions& opt,
                           double threshold = kDefaultKsThreshold) {
  check_replicates(opt.replicates, 500);
  const auto samples = sample_cluster_counts(box, p, opt);
  return clt_check(samples, threshold);
}

}  // namespace percolab

#include <gtest/gtest.h>

#include <cmath>

#include "percolab/exact.hpp"
#include "percolab/montecarlo.hpp"

namespace percolab {
namespace {

TEST(EstimateMoments, DegenerateProbabilities) {
  const BoxSpec box(2, 5);
  const auto closed = estimate_moments_Mn(box, 0.0, {20, 1, 2});
  EXPECT_EQ(closed.mean.point, 121.0);
  EXPECT_EQ(closed.variance.point, 0.0);
  const auto open = estimate_moments_Mn(box, 1.0, {20, 1, 2});
  EXPECT_EQ(open.mean.point, 1.0);
  EXPECT_EQ(open.variance.point, 0.0);
  EXPECT_THROW((void)estimate_moments_Mn(box, 0.5, {1, 1, 1}), InvalidArgument);
}

// On the path graph every open bond merges two clusters, so
// M_n = (2n+1) - Binomial(2n, p).
TEST(EstimateMoments, PathGraphBinomialLaw) {
  const int n = 10;
  const double p = 0.35;
  const auto m = estimate_moments_Mn(BoxSpec(1, n), p, {20000, 77, 4});
  EXPECT_NEAR(m.mean.point, 2 * n + 1 - 2 * n * p, 4 * m.mean.std_error);
  EXPECT_NEAR(m.variance.point, 2 * n * p * (1 - p), 4 * m.variance.std_error);
}

TEST(EstimateMoments, AgreeWithExactPolynomialsOnTheSquare) {
  const BoxSpec box(2, 1);
  const auto exact = compute_exact_moments(box);
  for (double p : {0.2, 0.5, 0.8}) {
    const auto m = estimate_moments_Mn(box, p, {20000, 31, 4});
    EXPECT_NEAR(m.mean.point, exact.mean.eval(p), 4 * m.mean.std_error) << "p=" << p;
    EXPECT_NEAR(m.variance.point, exact.variance.eval(p), 4 * m.variance.std_error) << "p=" << p;
  }
}

TEST(EstimateMoments, WorkerCountInvariant) {
  const BoxSpec box(2, 12);
  const auto a = estimate_moments_Mn(box, 0.5, {300, 5, 1});
  const auto b = estimate_moments_Mn(box, 0.5, {300, 5, 6});
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.variance.point, b.variance.point);
  EXPECT_EQ(a.variance.std_error, b.variance.std_error);
}

TEST(KappaPrime, PathGraphIsExactlyMinusOne) {
  KappaOptions opt;
  opt.radii = {2, 4, 8};
  opt.replicates = 200;
  const auto k = estimate_kappa_prime(1, 0.6, opt);
  EXPECT_EQ(k.kappa_prime.point, -1.0);
  EXPECT_EQ(k.kappa_prime.std_error, 0.0);
  EXPECT_EQ(k.radius, 4);
}

TEST(KappaPrime, AllClosedGivesMinusDimension) {
  KappaOptions opt;
  opt.radii = {2, 4};
  opt.replicates = 50;
  for (int d : {1, 2, 3}) EXPECT_EQ(estimate_kappa_prime(d, 0.0, opt).kappa_prime.point, -d);
}

TEST(KappaPrime, StoppingRuleFailureIsReported) {
  KappaOptions opt;
  opt.radii = {1, 2};
  opt.replicates = 500;
  opt.epsilon = 1e-9;
  EXPECT_THROW((void)estimate_kappa_prime(2, 0.5, opt), NonConvergence);
  opt.radii = {4};
  EXPECT_THROW((void)estimate_kappa_prime(2, 0.5, opt), InvalidArgument);
}

TEST(KappaPrime, DecreasesInMagnitudeAlongTheScan) {
  KappaOptions opt;
  opt.radii = {2, 4, 8, 16};
  opt.replicates = 4000;
  opt.epsilon = 1.0;  // stop immediately; the scan is what matters here
  const auto k = estimate_kappa_prime(2, 0.5, opt);
  for (std::size_t j = 1; j < k.scan.size(); ++j) {
    EXPECT_LE(k.scan[j].estimate.point, k.scan[j - 1].estimate.point);
    EXPECT_GE(k.scan[j].drop.point, 0.0);
  }
}

TEST(VarianceLimit, PrefactorAndGap) {
  EXPECT_DOUBLE_EQ(variance_limit_prefactor(0.3), 0.21);
  EXPECT_DOUBLE_EQ(gap_in_stderr(0.3, 0.3, 0.4), 0.6);
  EXPECT_EQ(gap_in_stderr(0.0, 0.0, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(gap_in_stderr(-1.0, 0.0, 0.0)));
}

// On the path graph Var(M_n)/(2n+1) = 2n p(1-p)/(2n+1), and the predicted
// limit p(1-p) has no sampling error.
TEST(CompareToTheorem, PathGraphMatchesWithinNoise) {
  KappaOptions kappa;
  kappa.radii = {4, 8};
  kappa.replicates = 100;
  const auto c = compare_to_theorem(BoxSpec(1, 200), 0.3, {6000, 3, 4}, kappa);
  EXPECT_DOUBLE_EQ(c.predicted_limit.point, 0.21);
  EXPECT_EQ(c.predicted_limit.std_error, 0.0);
  EXPECT_LT(std::abs(c.gap_in_stderr), 4.0);
  EXPECT_NEAR(c.mean.point, 401 - 400 * 0.3, 4 * c.mean.std_error);
}

TEST(InverseClusterSize, EndpointsAndAgreementWithClusterCount) {
  const BoxSpec box(2, 6);
  EXPECT_EQ(estimate_kappa_inverse_cluster(box, 0.0, {10, 1, 1}).point, 1.0);
  EXPECT_NEAR(estimate_kappa_inverse_cluster(box, 1.0, {10, 1, 1}).point, 1.0 / 169.0, 1e-15);
  const RunOptions run{400, 8, 3};
  const auto inverse = estimate_kappa_inverse_cluster(box, 0.5, run);
  const auto counts = estimate_moments_Mn(box, 0.5, run);
  // replicate by replicate the two statistics coincide
  EXPECT_NEAR(inverse.point, counts.mean.point / 169.0, 1e-12);
}

TEST(CltCheck, ClusterCountsLookNormal) {
  const auto r = clt_check(BoxSpec(2, 16), 0.5, {1500, 2, 4});
  EXPECT_TRUE(r.pass) << r.ks_distance;
  EXPECT_LT(r.ks_distance, kDefaultKsThreshold);
}

TEST(CltCheck, RejectsSmallOrDegenerateSamples) {
  EXPECT_THROW((void)clt_check(BoxSpec(2, 4), 0.5, {100, 2, 1}), InvalidArgument);
  EXPECT_THROW((void)clt_check(BoxSpec(2, 4), 0.0, {600, 2, 1}), DegenerateSample);
  // a two-point law is far from normal
  std::vector<double> coin(1000);
  for (std::size_t i = 0; i < coin.size(); ++i) coin[i] = static_cast<double>(i % 2);
  EXPECT_FALSE(clt_check(coin).pass);
}

TEST(VarianceDensity, StableUnderDoublingTheBox) {
  const auto a = variance_density(BoxSpec(2, 8), 0.3, {3000, 4, 4});
  const auto b = variance_density(BoxSpec(2, 16), 0.3, {3000, 4, 4});
  EXPECT_LT(std::abs(a.point - b.point), 4 * std::hypot(a.std_error, b.std_error) + 0.02);
}

}  // namespace
}  // namespace percolab

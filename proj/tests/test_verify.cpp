#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sgdfclt/verify.hpp"

using namespace sgdfclt;

namespace {

ProblemModel quadratic(std::size_t d, bool noisy = true) {
  ModelSpec s;
  s.kind = ModelKind::quadratic_gaussian;
  s.dim = d;
  if (!noisy) s.noise_cov = SymMatrix(d);
  return build_model(s);
}

ProblemModel laplace2() {
  ModelSpec s;
  return build_model(s);
}

double se_of(const VerificationReport& r, const std::string& name) {
  for (const auto& c : r.comparisons)
    if (c.name == name) return c.se;
  ADD_FAILURE() << "no comparison " << name;
  return 0.0;
}

}  // namespace

TEST(Report, PassFlagIsReproducibleFromJson) {
  const auto r = clt_check(quadratic(2), 2.0, 500, 200, 3);
  const auto back = report_from_json(to_json(r));
  EXPECT_EQ(back.evaluate(), r.pass);
  EXPECT_EQ(back.pass, r.pass);
  ASSERT_EQ(back.comparisons.size(), r.comparisons.size());
  for (std::size_t i = 0; i < r.comparisons.size(); ++i) {
    EXPECT_EQ(back.comparisons[i].statistic, r.comparisons[i].statistic);
    EXPECT_EQ(back.comparisons[i].rule, r.comparisons[i].rule);
  }
}

TEST(Report, EmptyReportFails) {
  VerificationReport r;
  r.finalize();
  EXPECT_FALSE(r.pass);
}

TEST(Report, RuleSemantics) {
  EXPECT_TRUE((Comparison{"", 1.05, 1.0, 0.1, 0.0, Rule::absolute}).passed());
  EXPECT_FALSE((Comparison{"", 1.2, 1.0, 0.1, 0.0, Rule::relative}).passed());
  EXPECT_TRUE((Comparison{"", 0.9, 1.0, 2.0, 0.1, Rule::se_multiple}).passed());
  EXPECT_FALSE((Comparison{"", 0.7, 1.0, 2.0, 0.1, Rule::se_multiple}).passed());
  EXPECT_FALSE((Comparison{"", 0.0, 0.0, 0.0, 0.0, Rule::below}).passed());
  EXPECT_TRUE((Comparison{"", 0.0, 0.0, 0.0, 0.0, Rule::below_or_zero}).passed());
  EXPECT_FALSE((Comparison{"", NAN, 0.0, 1.0, 0.0, Rule::at_most}).passed());
}

TEST(CltCheck, QuadraticPasses) {
  const auto r = clt_check(quadratic(1), 2.0, 2000, 2000, 11);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.diagnostics["sigma"][0][0].get<double>(), 4.0 / 3.0, 1e-14);
}

TEST(CltCheck, StandardErrorShrinksWithReplications) {
  const auto small = clt_check(quadratic(1), 2.0, 500, 500, 5);
  const auto large = clt_check(quadratic(1), 2.0, 500, 2000, 5);
  const double ratio = se_of(small, "mean[0]") / se_of(large, "mean[0]");
  EXPECT_NEAR(ratio, 2.0, 0.2 * 2.0);
}

TEST(CltCheck, TooFewReplicationsFails) {
  const auto r = clt_check(quadratic(1), 2.0, 100, 1, 1);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_EQ(r.notes[0], "insufficient replications");
}

TEST(CltCheck, NoiselessQuadraticHasZeroCovariance) {
  const auto r = clt_check(quadratic(2, false), 2.0, 1000, 100, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.comparisons.front().name, "opnorm_error");
  EXPECT_EQ(r.comparisons.front().statistic, 0.0);
}

TEST(CltCheck, DivergenceIsReported) {
  ModelSpec s;
  s.kind = ModelKind::quadratic_gaussian;
  s.dim = 1;
  s.curvature = SymMatrix::diagonal({1e300});
  s.noise_cov = SymMatrix(1);
  RunOptions opts;
  opts.theta0 = {1e10};
  const auto r = clt_check(build_model(s), 2.0, 100, 100, 1, opts);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.diagnostics["divergence"]["iteration"].get<int>(), 1);
}

TEST(FddCheck, RejectsBadGrids) {
  const auto m = laplace2();
  EXPECT_THROW(fdd_check(m, 2.0, 1000, 10, Vector{0.5, 0.4}, 1), std::invalid_argument);
  EXPECT_THROW(fdd_check(m, 2.0, 1000, 10, Vector{0.5, 1.5}, 1), CheckError);
  EXPECT_THROW(fdd_check(m, 2.0, 1000, 10, Vector{0.05, 1.0}, 1), CheckError);
  EXPECT_THROW(fdd_check(m, 2.0, 1000, 1, Vector{0.5, 1.0}, 1), CheckError);
}

TEST(FddCheck, LaplacePassesOnTwoPointGrid) {
  const auto r = fdd_check(laplace2(), 2.0, 5000, 1000, Vector{0.5, 1.0}, 21);
  EXPECT_TRUE(r.pass) << r.diagnostics.dump();
  // (0.5,0.5): 3 entries, (0.5,1): 4, (1,1): 3
  EXPECT_EQ(r.comparisons.size(), 10u);
}

TEST(FddCheck, SingleEndpointMatchesCltCovariance) {
  const auto m = quadratic(1);
  const auto fdd = fdd_check(m, 2.0, 1000, 500, Vector{1.0}, 4);
  const auto clt = clt_check(m, 2.0, 1000, 500, 4);
  const double emp = clt.diagnostics["empirical_cov"][0][0].get<double>();
  EXPECT_DOUBLE_EQ(fdd.comparisons.front().statistic, emp);
  EXPECT_NEAR(fdd.comparisons.front().target, 4.0 / 3.0, 1e-12);
}

TEST(FddCheck, OffLatticeGridUsesInterpolation) {
  const auto r = fdd_check(quadratic(1), 2.0, 1000, 1000, Vector{0.3337, 1.0}, 8);
  EXPECT_TRUE(r.pass);
}

TEST(FddCheck, ThreadCountDoesNotChangeTheReport) {
  RunOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = fdd_check(laplace2(), 2.0, 1000, 200, Vector{0.5, 1.0}, 9, one);
  const auto b = fdd_check(laplace2(), 2.0, 1000, 200, Vector{0.5, 1.0}, 9, four);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(ConsistencyCheck, LaplaceErrorsShrink) {
  const auto r = consistency_check(laplace2(), StepSchedule::delta_over_n(2.0), {100, 1000, 10000}, 100, 2);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(consistency_check(laplace2(), StepSchedule::delta_over_n(2.0), {100}, 10, 2), CheckError);
}

TEST(ConsistencyCheck, NoiselessQuadraticIsExactlyZero) {
  const auto r = consistency_check(quadratic(2, false), StepSchedule::delta_over_n(2.0), {10, 100}, 10, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.diagnostics["median"][0].get<double>(), 0.0);
}

TEST(TightnessCheck, PassesAtTenAndFailsWhenVacuous) {
  const auto ok = tightness_check(laplace2(), 2.0, {1000, 10000}, 200, 10.0, 3);
  EXPECT_TRUE(ok.pass);
  const auto vac = tightness_check(laplace2(), 2.0, {1000}, 50, 0.1, 3);
  EXPECT_FALSE(vac.pass);
  EXPECT_FALSE(vac.comparisons.front().passed());
}

TEST(TightnessCheck, NoiselessTailsAreZero) {
  const auto r = tightness_check(quadratic(1, false), 2.0, {100, 1000}, 20, 10.0, 3);
  for (const auto& t : r.diagnostics["tail_probabilities"]) EXPECT_EQ(t.get<double>(), 0.0);
}

TEST(CoefficientCheck, QuadraticErrorsScaleLikeOneOverN) {
  const auto m = quadratic(1);
  const std::vector<Vector> ys{{1.0}, {-1.0}};
  const Vector ts{0.5, 1.0};
  const auto e = coefficient_errors(m, 2.0, 1000, ts, ys);
  // |1-delta| |y| (n/(k-1) - 1/t) at t = 0.5, k = 500
  EXPECT_NEAR(e.drift, 1000.0 / 499.0 - 2.0, 1e-12);
  EXPECT_NEAR(e.diffusion, 1000.0 / (499.0 * 499.0), 1e-12);
  const auto r = coefficient_convergence_check(m, 2.0, {100, 1000, 10000, 100000}, ts, ys);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(coefficient_convergence_check(m, 2.0, {3}, ts, ys), CheckError);
}

TEST(CoefficientCheck, LooseNGridFailsTolerance) {
  const auto r = coefficient_convergence_check(quadratic(1), 2.0, {10, 20}, Vector{0.5, 1.0},
                                               std::vector<Vector>{{1.0}});
  EXPECT_FALSE(r.pass);
}

TEST(ExitCheck, QuadraticRateMatchesGaussianTail) {
  // increment = y (1 - delta) / (k - 1) - delta xi / sqrt(n), xi ~ N(0, 1)
  const auto m = quadratic(1);
  const std::uint64_t n = 100;
  const double y = 1.0, r = 0.5, delta = 2.0;
  const double mean = y * (1.0 - delta) / 99.0, sd = delta / 10.0;
  const double p = 0.5 * std::erfc((r - mean) / sd / std::numbers::sqrt2) +
                   0.5 * std::erfc((r + mean) / sd / std::numbers::sqrt2);
  const std::size_t samples = 1000000;
  const double rate = exit_rate(m, delta, n, 1.0, Vector{y}, r, samples, 12);
  const double se = static_cast<double>(n) * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  EXPECT_NEAR(rate, static_cast<double>(n) * p, 4.0 * se);
  EXPECT_THROW(exit_rate(m, delta, 10, 0.1, Vector{y}, r, 10, 1), CheckError);
}

TEST(ExitCheck, RatesVanishAlongN) {
  const std::vector<Vector> ys{{1.0}, {-1.0}};
  const auto r = exit_probability_check(quadratic(1), 2.0, {100, 1000, 10000}, Vector{0.5, 1.0}, ys);
  EXPECT_TRUE(r.pass) << r.diagnostics.dump();
  EXPECT_GT(r.diagnostics["sup_exit_rate"][0].get<double>(), 0.0);
  // bounded subgradients: the increment cannot reach the radius
  const auto lap = exit_probability_check(laplace2(), 2.0, {100, 1000}, Vector{0.5, 1.0},
                                          std::vector<Vector>{{1.0, 0.0}, {0.0, -1.0}});
  EXPECT_TRUE(lap.pass);
  EXPECT_EQ(lap.diagnostics["sup_exit_rate"][0].get<double>(), 0.0);
}

TEST(SupEstimates, SquareRootScalingInHorizon) {
  const auto p = make_limit_params(SymMatrix::identity(1), SymMatrix::identity(1), 2.0);
  const auto one = estimate_expected_sup(p, 1.0, 200, 2000, 1);
  const auto four = estimate_expected_sup(p, 4.0, 200, 2000, 2);
  EXPECT_GT(four.mean / one.mean, 1.7);
  EXPECT_LT(four.mean / one.mean, 2.3);
  const auto quiet = make_limit_params(SymMatrix::identity(2), SymMatrix(2), 2.0);
  EXPECT_EQ(estimate_expected_sup(quiet, 1.0, 100, 10, 1).mean, 0.0);
}

TEST(SupEstimates, BrownianSupMatchesReflectionPrinciple) {
  // E sup_{[0,1]} |B| = sqrt(pi / 2)
  const auto e = estimate_brownian_sup(SymMatrix::identity(1), 1.0, 100, 20000, 3);
  EXPECT_NEAR(e.mean, std::sqrt(std::numbers::pi / 2.0), 4.0 * e.se);
}

TEST(SupBoundCheck, PassesAndGuards) {
  const auto p = make_limit_params(SymMatrix::diagonal({1.0, 2.0}), SymMatrix::identity(2), 2.0);
  const auto r = sup_bound_check(p, 1.0, 200, 500, 4);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.diagnostics["implied_constant"].get<double>(), default_sup_constant());
  EXPECT_THROW(sup_bound_check(p, 1.0, 50, 500, 4), CheckError);
  EXPECT_THROW(sup_bound_check(p, 1.0, 200, 1, 4), CheckError);
}

TEST(KernelInequalities, HoldOnRandomParameters) {
  const auto p = make_limit_params(SymMatrix({{1.0, 0.3}, {0.3, 0.8}}), SymMatrix({{2.0, 0.5}, {0.5, 1.0}}), 2.0);
  const auto r = kernel_inequality_check(p, 2.0, 60);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.comparisons[0].statistic, 1e-12);
}

TEST(VarianceCheck, ScalarBoundIsTight) {
  const auto r = variance_check(make_limit_params(SymMatrix::identity(1), SymMatrix::identity(1), 2.0));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.comparisons[1].statistic, r.comparisons[1].target, 1e-15);
}

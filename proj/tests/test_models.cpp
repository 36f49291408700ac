#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sgdfclt/models.hpp"
#include "sgdfclt/stats.hpp"

using namespace sgdfclt;

namespace {

ProblemModel make(ModelKind kind, std::size_t d) {
  ModelSpec s;
  s.kind = kind;
  s.dim = d;
  return build_model(s);
}

// Mean and standard error of g(X, theta) over `count` samples, per coordinate.
struct SubgradientMoments {
  Vector mean, se;
  Matrix outer;  // sample mean of g g^T
  Matrix outer_se;
};

SubgradientMoments subgradient_moments(const ProblemModel& m, const Vector& theta, std::size_t count,
                                       std::uint64_t seed) {
  const Matrix xs = sample_data(m, count, seed);
  Matrix gs(count, m.dim);
  for (std::size_t r = 0; r < count; ++r) {
    const Vector g = subgradient(m, xs.row(r), theta);
    std::copy(g.begin(), g.end(), gs.row(r).begin());
  }
  SubgradientMoments out{Vector(m.dim), Vector(m.dim), Matrix(m.dim, m.dim), Matrix(m.dim, m.dim)};
  for (std::size_t i = 0; i < m.dim; ++i) {
    const auto e = estimate_mean(gs.column(i));
    out.mean[i] = e.mean;
    out.se[i] = e.se;
    for (std::size_t j = 0; j < m.dim; ++j) {
      Vector prod(count);
      for (std::size_t r = 0; r < count; ++r) prod[r] = gs(r, i) * gs(r, j);
      const auto p = estimate_mean(prod);
      out.outer(i, j) = p.mean;
      out.outer_se(i, j) = p.se;
    }
  }
  return out;
}

}  // namespace

TEST(BuildModel, LaplaceGroundTruth) {
  const auto m = make(ModelKind::laplace_median, 2);
  EXPECT_EQ(m.minimizer, Vector(2, 0.0));
  EXPECT_EQ(m.hessian_at_min, SymMatrix::identity(2));
  EXPECT_EQ(m.noise_cov, SymMatrix::identity(2));
  EXPECT_TRUE(m.has_exact_G);
}

TEST(BuildModel, QuadraticScalar) {
  const auto m = make(ModelKind::quadratic_gaussian, 1);
  EXPECT_DOUBLE_EQ(m.hessian_at_min(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.noise_cov(0, 0), 1.0);
  ASSERT_TRUE(m.growth_constant.has_value());
  EXPECT_DOUBLE_EQ(*m.growth_constant, 1.0);
}

TEST(BuildModel, GeometricMedianNeedsTwoDimensions) {
  EXPECT_THROW(make(ModelKind::geometric_median_gaussian, 1), ModelError);
}

TEST(BuildModel, RejectsInvalidParameters) {
  ModelSpec s;
  s.laplace_scale = 0.0;
  EXPECT_THROW(build_model(s), ModelError);
  s = {};
  s.kind = ModelKind::huber_location;
  s.huber_c = -1.0;
  EXPECT_THROW(build_model(s), ModelError);
  s = {};
  s.kind = ModelKind::quadratic_gaussian;
  s.curvature = SymMatrix::diagonal({1.0, -1.0});
  EXPECT_THROW(build_model(s), ModelError);
  s.curvature = SymMatrix::identity(3);
  EXPECT_THROW(build_model(s), ModelError);
}

TEST(BuildModel, GeometricMedianTwoDimensionalConstants) {
  const auto m = make(ModelKind::geometric_median_gaussian, 2);
  // E[1/||X||] = sqrt(pi/2) for the Rayleigh law
  EXPECT_NEAR(m.hessian_at_min(0, 0), 0.5 * std::sqrt(std::numbers::pi / 2.0), 1e-14);
  EXPECT_NEAR(m.hessian_at_min(0, 0), 0.6267, 1e-4);
  EXPECT_NEAR(m.noise_cov(0, 0), 0.5, 1e-15);
  EXPECT_EQ(m.hessian_at_min(0, 1), 0.0);
}

TEST(GeometricMedian, HessianAndGammaMatchMonteCarlo) {
  for (std::size_t d : {2u, 3u, 5u}) {
    const auto m = make(ModelKind::geometric_median_gaussian, d);
    const std::size_t count = 2'000'000;
    const Matrix xs = sample_data(m, count, 1234 + d);
    // H* = E[(I - u u^T) / ||X||], Gamma = E[u u^T]
    Vector h00(count), h01(count), g00(count), g01(count);
    for (std::size_t r = 0; r < count; ++r) {
      const auto x = xs.row(r);
      const double nx = norm2(x);
      const double u0 = x[0] / nx, u1 = x[1] / nx;
      h00[r] = (1.0 - u0 * u0) / nx;
      h01[r] = -u0 * u1 / nx;
      g00[r] = u0 * u0;
      g01[r] = u0 * u1;
    }
    const auto eh00 = estimate_mean(h00), eh01 = estimate_mean(h01);
    const auto eg00 = estimate_mean(g00), eg01 = estimate_mean(g01);
    EXPECT_NEAR(eh00.mean, m.hessian_at_min(0, 0), 4.0 * eh00.se) << "d=" << d;
    EXPECT_NEAR(eh01.mean, 0.0, 4.0 * eh01.se) << "d=" << d;
    EXPECT_NEAR(eg00.mean, m.noise_cov(0, 0), 4.0 * eg00.se) << "d=" << d;
    EXPECT_NEAR(eg01.mean, 0.0, 4.0 * eg01.se) << "d=" << d;
  }
}

TEST(Huber, ClosedFormsMatchMonteCarlo) {
  const auto m = make(ModelKind::huber_location, 1);
  const auto mom = subgradient_moments(m, Vector{0.0}, 1'000'000, 5);
  EXPECT_NEAR(mom.outer(0, 0), m.noise_cov(0, 0), 3.0 * mom.outer_se(0, 0));
  // H* = G'(0) by central differences of the exact G
  const double h = 1e-5;
  const double deriv = (mean_subgradient(m, Vector{h})[0] - mean_subgradient(m, Vector{-h})[0]) / (2.0 * h);
  EXPECT_NEAR(deriv, m.hessian_at_min(0, 0), 1e-8);
}

TEST(Laplace, GammaMatchesMonteCarlo) {
  const auto m = make(ModelKind::laplace_median, 2);
  const auto mom = subgradient_moments(m, Vector{0.0, 0.0}, 1'000'000, 77);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(mom.outer(i, j), m.noise_cov(i, j), 3.0 * std::max(mom.outer_se(i, j), 1e-12));
  // H* = 2 f(0) via the derivative of G
  const double h = 1e-6;
  const double deriv = (mean_subgradient(m, Vector{h, 0.0})[0] - mean_subgradient(m, Vector{-h, 0.0})[0]) / (2.0 * h);
  EXPECT_NEAR(deriv, 1.0, 1e-6);  // truncation error h / 2
}

TEST(SampleData, DeterministicForFixedSeed) {
  const auto m = make(ModelKind::laplace_median, 2);
  EXPECT_EQ(sample_data(m, 3, 42), sample_data(m, 3, 42));
  EXPECT_NE(sample_data(m, 3, 42), sample_data(m, 3, 43));
}

TEST(SampleData, LaplaceVarianceIsTwo) {
  const auto m = make(ModelKind::laplace_median, 2);
  const std::size_t count = 1'000'000;
  const Matrix xs = sample_data(m, count, 11);
  for (std::size_t i = 0; i < 2; ++i) {
    Vector sq(count);
    for (std::size_t r = 0; r < count; ++r) sq[r] = xs(r, i) * xs(r, i);
    const auto e = estimate_mean(sq);
    EXPECT_NEAR(e.mean, 2.0, 3.0 * e.se);
  }
}

TEST(SampleData, GaussianDataIsCentred) {
  const auto m = make(ModelKind::geometric_median_gaussian, 3);
  const Matrix xs = sample_data(m, 200000, 8);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto e = estimate_mean(xs.column(i));
    EXPECT_NEAR(e.mean, 0.0, 3.0 * e.se);
  }
}

TEST(Subgradient, SpecExamples) {
  const auto lap = make(ModelKind::laplace_median, 2);
  EXPECT_EQ(subgradient(lap, Vector{1.0, -1.0}, Vector{0.0, 0.0}), (Vector{-1.0, 1.0}));
  EXPECT_EQ(subgradient(lap, Vector{0.5, 0.0}, Vector{0.5, 1.0}), (Vector{0.0, 1.0}));

  const auto geo = make(ModelKind::geometric_median_gaussian, 2);
  EXPECT_EQ(subgradient(geo, Vector{0.3, -0.2}, Vector{0.3, -0.2}), (Vector{0.0, 0.0}));
  const Vector g = subgradient(geo, Vector{0.0, 0.0}, Vector{3.0, 4.0});
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);

  ModelSpec hs;
  hs.kind = ModelKind::huber_location;
  hs.dim = 1;
  hs.huber_c = 1.0;
  const auto hub = build_model(hs);
  EXPECT_EQ(subgradient(hub, Vector{0.0}, Vector{3.0}), Vector{1.0});
  EXPECT_EQ(subgradient(hub, Vector{0.0}, Vector{0.25}), Vector{0.25});
}

TEST(MeanSubgradient, SpecExamples) {
  const auto lap = make(ModelKind::laplace_median, 2);
  EXPECT_EQ(mean_subgradient(lap, Vector{0.0, 0.0}), (Vector{0.0, 0.0}));
  const Vector g = mean_subgradient(lap, Vector{1.0, 0.0});
  EXPECT_NEAR(g[0], 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(g[0], 0.6321, 1e-4);
  EXPECT_EQ(g[1], 0.0);

  ModelSpec qs;
  qs.kind = ModelKind::quadratic_gaussian;
  qs.dim = 2;
  qs.curvature = SymMatrix::scaled_identity(2, 2.0);
  qs.minimizer = Vector{1.0, -1.0};
  const auto quad = build_model(qs);
  const Vector gq = mean_subgradient(quad, Vector{2.0, 0.0});
  EXPECT_DOUBLE_EQ(gq[0], 2.0);
  EXPECT_DOUBLE_EQ(gq[1], 2.0);
}

TEST(MeanSubgradient, GeometricMedianNeedsMonteCarlo) {
  const auto geo = make(ModelKind::geometric_median_gaussian, 2);
  EXPECT_THROW(mean_subgradient(geo, Vector{0.1, 0.2}), ModelError);
  const Vector g = mean_subgradient(geo, Vector{0.0, 0.0}, 100000, 3);
  EXPECT_LT(norm2(g), 0.02);
}

TEST(MeanSubgradient, VanishesAtMinimizer) {
  for (auto kind : {ModelKind::quadratic_gaussian, ModelKind::laplace_median, ModelKind::huber_location}) {
    const auto m = make(kind, 3);
    EXPECT_LE(norm2(mean_subgradient(m, m.minimizer)), 1e-12) << m.name;
  }
}

TEST(MeanSubgradient, AgreesWithMonteCarloAtRandomPoints) {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> z(0.0, 1.5);
  for (auto kind : {ModelKind::quadratic_gaussian, ModelKind::laplace_median, ModelKind::huber_location}) {
    ModelSpec s;
    s.kind = kind;
    s.dim = 2;
    s.laplace_scale = 0.7;
    if (kind == ModelKind::quadratic_gaussian) {
      s.curvature = SymMatrix({{2.0, 0.5}, {0.5, 1.0}});
      s.noise_cov = SymMatrix({{1.0, 0.3}, {0.3, 0.5}});
      s.minimizer = Vector{0.5, -1.0};
    }
    const auto m = build_model(s);
    for (int p = 0; p < 20; ++p) {
      const Vector theta{z(gen), z(gen)};
      const auto mom = subgradient_moments(m, theta, 100000, 100 + static_cast<std::uint64_t>(p));
      const Vector exact = mean_subgradient(m, theta);
      const SymMatrix second = subgradient_second_moment(m, theta);
      // far from the data every draw can land on the clipped branch, leaving se = 0; an
      // unseen event of mass below 3/N shifts the mean by at most 3/N times the range of g
      const double unseen = 3.0 / 100000.0 * 2.0 * 1.345;
      for (std::size_t i = 0; i < 2; ++i) {
        ASSERT_NEAR(mom.mean[i], exact[i], 4.0 * mom.se[i] + unseen) << m.name << " p=" << p;
        for (std::size_t j = 0; j < 2; ++j)
          ASSERT_NEAR(mom.outer(i, j), second(i, j), 4.0 * mom.outer_se(i, j) + 1.345 * unseen) << m.name;
      }
    }
  }
}

TEST(Subgradient, MonotoneInTheta) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z;
  for (auto kind : {ModelKind::quadratic_gaussian, ModelKind::laplace_median, ModelKind::geometric_median_gaussian,
                    ModelKind::huber_location}) {
    const auto m = make(kind, 3);
    const Matrix xs = sample_data(m, 500, 9);
    for (std::size_t r = 0; r < xs.rows(); ++r) {
      const Vector a{z(gen), z(gen), z(gen)}, b{z(gen), z(gen), z(gen)};
      const Vector ga = subgradient(m, xs.row(r), a), gb = subgradient(m, xs.row(r), b);
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += (ga[i] - gb[i]) * (a[i] - b[i]);
      ASSERT_GE(s, -1e-12) << m.name;
    }
  }
}

TEST(Subgradient, BoundedForRobustModels) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> z(0.0, 3.0);
  const auto lap = make(ModelKind::laplace_median, 2);
  const auto geo = make(ModelKind::geometric_median_gaussian, 2);
  const Matrix xs = sample_data(geo, 1000, 4);
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    const Vector th{z(gen), z(gen)};
    for (double v : subgradient(lap, xs.row(r), th)) ASSERT_LE(std::abs(v), 1.0);
    ASSERT_LE(norm2(subgradient(geo, xs.row(r), th)), 1.0 + 1e-15);
  }
}

TEST(MeanSubgradient, GrowthBound) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z(0.0, 2.0);
  for (auto kind : {ModelKind::quadratic_gaussian, ModelKind::laplace_median, ModelKind::huber_location}) {
    const auto m = make(kind, 2);
    ASSERT_TRUE(m.growth_constant.has_value());
    for (int p = 0; p < 200; ++p) {
      const Vector th{z(gen), z(gen)};
      ASSERT_LE(norm2(mean_subgradient(m, th)), *m.growth_constant * norm2(th) * (1.0 + 1e-12) + 1e-15) << m.name;
    }
  }
  // the geometric median constant is checked by Monte Carlo
  const auto geo = make(ModelKind::geometric_median_gaussian, 2);
  for (const Vector& th : {Vector{0.3, 0.0}, Vector{2.0, -1.0}, Vector{0.05, 0.05}}) {
    const Vector g = mean_subgradient(geo, th, 200000, 21);
    EXPECT_LE(norm2(g), *geo.growth_constant * norm2(th) * 1.02);
  }
}

TEST(NoiseBound, SecondMomentOfNoiseIsBounded) {
  for (auto kind : {ModelKind::quadratic_gaussian, ModelKind::laplace_median, ModelKind::geometric_median_gaussian,
                    ModelKind::huber_location}) {
    const auto m = make(kind, 2);
    for (double a : {-1.0, -0.25, 0.0, 0.5, 1.0})
      for (double b : {-0.5, 0.0, 0.75}) {
        const Vector th{a, b};
        const std::size_t count = 20000;
        const Matrix xs = sample_data(m, count, 31);
        Vector mean(2, 0.0);
        std::vector<Vector> gs;
        for (std::size_t r = 0; r < count; ++r) {
          gs.push_back(subgradient(m, xs.row(r), th));
          for (std::size_t i = 0; i < 2; ++i) mean[i] += gs.back()[i] / static_cast<double>(count);
        }
        Vector dev(count);
        for (std::size_t r = 0; r < count; ++r) {
          const double d0 = gs[r][0] - mean[0], d1 = gs[r][1] - mean[1];
          dev[r] = d0 * d0 + d1 * d1;
        }
        const auto e = estimate_mean(dev);
        ASSERT_LE(e.mean, m.noise_bound + 3.0 * e.se) << m.name;
      }
  }
}

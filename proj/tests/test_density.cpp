#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "melc/density.hpp"
#include "support.hpp"

namespace melc {
namespace {

using test::trapezoid;

TEST(Project, PicksCoordinate) {
  const auto x = ClassData::from_rows({{3.0, 7.0}});
  const auto p = project(Vector{1.0, 0.0}, x);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.samples[0], 3.0);
}

TEST(Project, ZeroDirectionGivesZeros) {
  const auto x = ClassData::from_rows({{3.0, 7.0}, {-1.0, 2.0}});
  const auto p = project(Vector{0.0, 0.0}, x);
  EXPECT_EQ(p.samples, (std::vector<double>{0.0, 0.0}));
}

TEST(Project, Diagonal) {
  const auto x = ClassData::from_rows({{1.0, 1.0}});
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(project(Vector{r, r}, x).samples[0], std::sqrt(2.0), 1e-15);
}

TEST(Project, DimensionMismatchThrows) {
  const auto x = ClassData::from_rows({{1.0, 1.0}});
  EXPECT_THROW(project(Vector{1.0}, x), ArgumentError);
}

TEST(Silverman, TwoPoints) {
  // (4/3)^0.2 * 2^-0.2 * 0.5, evaluated independently
  EXPECT_NEAR(silverman_width(Projection::unweighted({0.0, 1.0})), 0.46105395574086383, 1e-14);
}

TEST(Silverman, ConstantSamplesHitTheFloor) {
  EXPECT_DOUBLE_EQ(silverman_width(Projection::unweighted({0.5, 0.5, 0.5})), kWidthFloor);
  EXPECT_DOUBLE_EQ(silverman_width(Projection::unweighted({40.0, 40.0})), 40.0 * kWidthFloor);
}

TEST(Silverman, ScalesWithData) {
  const auto p = Projection::unweighted({0.3, -1.2, 2.5, 0.7});
  const auto q = Projection::unweighted({0.9, -3.6, 7.5, 2.1});
  EXPECT_NEAR(silverman_width(q), 3.0 * silverman_width(p), 1e-14);
}

TEST(Silverman, TooFewSamples) {
  EXPECT_THROW(silverman_width(Projection::unweighted({1.0})), DataError);
}

TEST(Kde, StandardNormalPeak) {
  EXPECT_NEAR(kde_eval(Projection::unweighted({0.0}), {1.0, 1.0}, 0.0),
              1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(Kde, IntegratesToOne) {
  const auto p = Projection::unweighted({-1.0, 0.2, 0.25, 3.0});
  const KdeSpec spec{0.4, 1.5};
  const double w = spec.width();
  const double total = trapezoid([&](double x) { return kde_eval(p, spec, x); }, -1.0 - 8 * w,
                                 3.0 + 8 * w, 4000);
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Kde, WeightScaleInvariance) {
  Projection p{{0.0, 1.0, 3.0}, {1.0, 2.0, 0.5}};
  Projection q{{0.0, 1.0, 3.0}, {2.0, 4.0, 1.0}};
  for (double x : {-1.0, 0.5, 2.0, 4.0}) {
    EXPECT_NEAR(kde_eval(p, {0.7, 1.0}, x), kde_eval(q, {0.7, 1.0}, x), 1e-16);
  }
}

TEST(Kde, LogMatchesLinearAndSurvivesTails) {
  Projection p{{0.0, 1.0, 3.0}, {1.0, 2.0, 0.5}};
  for (double x : {-1.0, 0.5, 2.0, 4.0}) {
    EXPECT_NEAR(std::exp(log_kde_eval(p, 0.7, x)), kde_eval(p, {0.7, 1.0}, x), 1e-15);
  }
  EXPECT_EQ(kde_eval(p, {0.01, 1.0}, 100.0), 0.0);
  EXPECT_TRUE(std::isfinite(log_kde_eval(p, 0.01, 100.0)));
}

TEST(NormalProduct, StandardPair) {
  // Quadrature of N(0,1)^2 over R gives 1/sqrt(4 pi).
  EXPECT_NEAR(normal_product_integral(0, 1, 0, 1), 0.28209479177387814, 1e-15);
}

TEST(NormalProduct, EqualMeansClosedForm) {
  for (double s : {0.1, 1.0, 3.5}) {
    EXPECT_NEAR(normal_product_integral(2.0, s, 2.0, s), 1.0 / (2.0 * s * std::sqrt(std::numbers::pi)),
                1e-14 / s);
  }
}

TEST(NormalProduct, MatchesQuadrature) {
  const double got = normal_product_integral(0.3, 0.5, -0.4, 1.2);
  const double want = trapezoid(
      [](double x) { return test::mixture_density({0.3}, 0.5, x) * test::mixture_density({-0.4}, 1.2, x); },
      -15, 15, 20000);
  EXPECT_NEAR(got, want, 1e-12);
}

TEST(NormalProduct, DecaysMonotonically) {
  double prev = INFINITY;
  for (double gap : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0}) {
    const double v = normal_product_integral(0.0, 1.0, gap, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-100);
}

class OneDim : public ::testing::Test {
 protected:
  static ClassData line(std::initializer_list<double> xs) {
    ClassData c;
    c.dim = 1;
    for (double x : xs) c.push_back(std::vector<double>{x});
    return c;
  }
  static double width(std::vector<double> xs, double gamma) {
    return gamma * test::reference_silverman(xs);
  }
};

TEST_F(OneDim, CipIsSymmetric) {
  Rng rng(3);
  const auto a = test::random_class(rng, 7, 3);
  const auto b = test::random_class(rng, 5, 3, 0.5);
  const auto v = test::random_unit(rng, 3);
  EXPECT_DOUBLE_EQ(cip(v, a, b, 0.8), cip(v, b, a, 0.8));
}

TEST_F(OneDim, CipMatchesProductQuadrature) {
  const auto a = line({0.0, 2.0});
  const auto b = line({1.0, 3.0});
  const double wa = width({0.0, 2.0}, 1.0);
  const double wb = width({1.0, 3.0}, 1.0);
  const double want = trapezoid(
      [&](double x) {
        return test::mixture_density({0.0, 2.0}, wa, x) * test::mixture_density({1.0, 3.0}, wb, x);
      },
      -12, 15, 40000);
  EXPECT_NEAR(cip(Vector{1.0}, a, b, 1.0), want, 1e-8);
}

TEST_F(OneDim, CipScalesInverselyWithData) {
  const auto a = line({0.0, 2.0, 0.5});
  const auto b = line({1.0, 3.0, -0.4});
  const double base = cip(Vector{1.0}, a, b, 1.0);
  EXPECT_NEAR(cip(Vector{1.0}, test::scaled(a, 2.0), test::scaled(b, 2.0), 1.0), base / 2.0,
              1e-15);
}

TEST_F(OneDim, RenyiMatchesQuadrature) {
  const auto a = line({0.0, 0.001, -0.001});
  const double w = width({0.0, 0.001, -0.001}, 1.0);
  const double integral = trapezoid(
      [&](double x) { return std::pow(test::mixture_density({0.0, 0.001, -0.001}, w, x), 2); },
      -0.02, 0.02, 40000);
  EXPECT_NEAR(renyi_h2(Vector{1.0}, a, 1.0), -std::log(integral), 1e-8);
}

TEST_F(OneDim, RenyiTranslationAndScale) {
  const auto a = line({0.0, 0.7, -1.3, 2.2});
  const double h = renyi_h2(Vector{1.0}, a, 1.0);
  EXPECT_NEAR(renyi_h2(Vector{1.0}, test::translated(a, {123.5}), 1.0), h, 1e-12);
  EXPECT_NEAR(renyi_h2(Vector{1.0}, test::scaled(a, std::numbers::e), 1.0), h + 1.0, 1e-12);
}

TEST_F(OneDim, DcsOfIdenticalClassesIsZero) {
  Rng rng(9);
  const auto a = test::random_class(rng, 12, 4);
  const auto v = test::random_unit(rng, 4);
  EXPECT_NEAR(dcs(v, a, a, 1.0), 0.0, 1e-10);
  const ClassData copy = a;
  EXPECT_NEAR(dcs(v, a, copy, 0.5), 0.0, 1e-10);
}

TEST(Dcs, MatchesQuadratureOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pos = test::random_class(rng, 10, 2, 0.8);
    const auto neg = test::random_class(rng, 10, 2, -0.3);
    const auto v = test::random_unit(rng, 2);
    const double gamma = 0.5 + 0.3 * trial;
    std::vector<double> pp, pn;
    for (std::size_t i = 0; i < pos.size(); ++i) pp.push_back(v[0] * pos.point(i)[0] + v[1] * pos.point(i)[1]);
    for (std::size_t i = 0; i < neg.size(); ++i) pn.push_back(v[0] * neg.point(i)[0] + v[1] * neg.point(i)[1]);
    const double wp = gamma * test::reference_silverman(pp);
    const double wn = gamma * test::reference_silverman(pn);
    const double lo = std::min(*std::min_element(pp.begin(), pp.end()), *std::min_element(pn.begin(), pn.end())) - 12 * std::max(wp, wn);
    const double hi = std::max(*std::max_element(pp.begin(), pp.end()), *std::max_element(pn.begin(), pn.end())) + 12 * std::max(wp, wn);
    auto fp = [&](double x) { return test::mixture_density(pp, wp, x); };
    auto fn = [&](double x) { return test::mixture_density(pn, wn, x); };
    const std::size_t n = 60000;
    const double ipp = trapezoid([&](double x) { return fp(x) * fp(x); }, lo, hi, n);
    const double inn = trapezoid([&](double x) { return fn(x) * fn(x); }, lo, hi, n);
    const double ipn = trapezoid([&](double x) { return fp(x) * fn(x); }, lo, hi, n);
    const double want = std::log(ipp) + std::log(inn) - 2.0 * std::log(ipn);
    EXPECT_NEAR(dcs(v, pos, neg, gamma), want, 1e-7) << "trial " << trial;
  }
}

TEST(Dcs, ScaleInvariance) {
  Rng rng(11);
  const auto pos = test::random_class(rng, 15, 3, 0.6);
  const auto neg = test::random_class(rng, 11, 3, -0.6);
  const auto v = test::random_unit(rng, 3);
  const double base = dcs(v, pos, neg, 1.0);
  for (double alpha : {-3.0, 0.1, 7.0, 2.0}) {
    EXPECT_NEAR(dcs(v, test::scaled(pos, alpha), test::scaled(neg, alpha), 1.0), base, 1e-9)
        << "alpha " << alpha;
  }
}

TEST(Dcs, TranslationInvariance) {
  Rng rng(12);
  const auto pos = test::random_class(rng, 9, 3, 0.6);
  const auto neg = test::random_class(rng, 14, 3, -0.6);
  const auto v = test::random_unit(rng, 3);
  const Vector shift{5.0, -40.0, 0.25};
  EXPECT_NEAR(dcs(v, test::translated(pos, shift), test::translated(neg, shift), 1.3),
              dcs(v, pos, neg, 1.3), 1e-9);
}

// With integer data, matrix and direction every product is exact, so both
// sides see identical projected multisets.
TEST(Dcs, LinearMapCovarianceExact) {
  const std::vector<Vector> a{{2, 1, 0}, {-1, 3, 1}, {0, 1, -2}};
  const auto pos = ClassData::from_rows({{1, 2, 0}, {3, -1, 2}, {0, 0, 1}, {2, 2, 2}});
  const auto neg = ClassData::from_rows({{-1, 0, 4}, {5, 1, -3}, {2, -2, 0}});
  auto map = [&](const ClassData& c) {
    ClassData out = c;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t r = 0; r < 3; ++r) out.values[i * 3 + r] = dot(a[r], c.point(i));
    }
    return out;
  };
  const Vector v{1, -2, 3};
  Vector at_v(3, 0.0);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) at_v[c] += a[r][c] * v[r];
  }
  EXPECT_EQ(dcs(v, map(pos), map(neg), 1.0), dcs(at_v, pos, neg, 1.0));
}

TEST(Dcs, LinearMapCovarianceRandom) {
  Rng rng(77);
  const std::size_t d = 4;
  const auto pos = test::random_class(rng, 10, d, 0.5);
  const auto neg = test::random_class(rng, 10, d, -0.5);
  std::vector<Vector> a(d, Vector(d));
  for (auto& row : a) {
    for (double& x : row) x = rng.normal();
  }
  Dataset ds(d);
  for (std::size_t i = 0; i < pos.size(); ++i) ds.add(pos.point(i), 1);
  for (std::size_t i = 0; i < neg.size(); ++i) ds.add(neg.point(i), -1);
  const auto mapped = affine_transform(ds, a, Vector(d, 0.0));
  const auto v = test::random_unit(rng, d);
  Vector at_v(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) at_v[c] += a[r][c] * v[r];
  }
  EXPECT_NEAR(dcs(v, mapped.class_data(1), mapped.class_data(-1), 1.0),
              dcs(at_v, pos, neg, 1.0), 1e-9);
}

TEST(Dcs, NonNegativeOnRandomData) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 5;
    const auto pos = test::random_class(rng, 3 + trial % 7, d, 0.2 * (trial % 3));
    const auto neg = test::random_class(rng, 4 + trial % 5, d);
    const auto v = test::random_unit(rng, d);
    EXPECT_GE(dcs(v, pos, neg, 0.3 + 0.05 * trial), -1e-12);
  }
}

TEST(Dcs, EmptyClassThrows) {
  ClassData empty;
  empty.dim = 2;
  const auto a = ClassData::from_rows({{0, 1}, {1, 0}});
  EXPECT_THROW(dcs(Vector{1, 0}, a, empty, 1.0), DataError);
  EXPECT_THROW(cip(Vector{1, 0}, empty, a, 1.0), DataError);
}

TEST(Dcs, DegenerateProjectionStaysFinite) {
  const auto pos = ClassData::from_rows({{1, 0}, {1, 1}, {1, 2}});
  const auto neg = ClassData::from_rows({{2, 0}, {2, 5}});
  EXPECT_TRUE(std::isfinite(dcs(Vector{1, 0}, pos, neg, 1.0)));
}

// Proposition-style bounds on cip for equal kernel widths sigma:
//   c exp(-D^2 / 4 sigma^2) / (|P+||P-|) <= cip <= c exp(-D^2 / 4 sigma^2),
// c = 1 / (sqrt(2 pi) sqrt(2) sigma), D the closest cross-class distance.
TEST(Cip, PropositionBounds) {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t np = 1 + rng.below(12), nn = 1 + rng.below(12);
    std::vector<double> p(np), n(nn);
    for (double& x : p) x = rng.normal(1.0, 1.5);
    for (double& x : n) x = rng.normal(-1.0, 1.5);
    const double sigma = 0.05 + 2.0 * rng.uniform();
    double dist = INFINITY;
    for (double a : p) {
      for (double b : n) dist = std::min(dist, std::abs(a - b));
    }
    const double c = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * std::sqrt(2.0) * sigma);
    const double core = c * std::exp(-dist * dist / (2.0 * 2.0 * sigma * sigma));
    const double value = cross_information_potential(Projection::unweighted(p),
                                                     Projection::unweighted(n), 2.0 * sigma * sigma);
    EXPECT_LE(value, core * (1 + 1e-12)) << trial;
    EXPECT_GE(value, core / static_cast<double>(np * nn) * (1 - 1e-12)) << trial;
  }
}

TEST(Cip, WeightedMatchesDuplicatedPoints) {
  // Integer weight 2 equals listing the point twice (for the KDE itself).
  Projection weighted{{0.0, 1.5}, {2.0, 1.0}};
  Projection dup = Projection::unweighted({0.0, 0.0, 1.5});
  Projection other = Projection::unweighted({0.4, -0.8});
  EXPECT_NEAR(cross_information_potential(weighted, other, 0.9),
              cross_information_potential(dup, other, 0.9), 1e-15);
}

}  // namespace
}  // namespace melc

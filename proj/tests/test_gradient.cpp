#include <gtest/gtest.h>

#include <cmath>

#include "melc/gradient.hpp"
#include "support.hpp"

namespace melc {
namespace {

double max_rel_error(const Vector& analytic, const Vector& numeric) {
  double err = 0.0;
  const double denom = norm(analytic) + 1e-12;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    err = std::max(err, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return err;
}

// Central differences written out here so the check does not depend on
// finite_diff_check itself.
template <typename F>
Vector central_diff(F f, Vector v, double h = 1e-6) {
  Vector g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = f(v);
    v[i] = keep - h;
    const double down = f(v);
    v[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double variance_of(std::span<const double> v, const ClassData& a, double gamma) {
  return kernel_variance(project(v, a), gamma);
}

TEST(GradVarA, IdenticalPointsGiveZero) {
  const auto a = ClassData::from_rows({{0.2, -0.4, 0.1}, {0.2, -0.4, 0.1}, {0.2, -0.4, 0.1}});
  const auto g = grad_vara(Vector{0.3, 0.5, -0.2}, a, 1.0);
  EXPECT_LT(norm(g), 1e-15);
}

TEST(GradVarA, MatchesFiniteDifferences) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const double gamma = 0.3 + 1.7 * rng.uniform();
    const auto a = test::random_class(rng, 4 + trial % 9, 3 + trial % 4);
    const auto v = test::random_unit(rng, a.dim);
    const auto numeric = central_diff([&](const Vector& x) { return variance_of(x, a, gamma); }, v);
    EXPECT_LT(max_rel_error(grad_vara(v, a, gamma), numeric), 1e-6) << trial;
  }
}

// For data symmetric about the origin the mean projection is zero and
// grad V_A = 2 gamma^2 (4/3)^(2/5) n^(-2/5) sum <v,a> a / n.
TEST(GradVarA, SymmetricDataClosedForm) {
  const auto a = ClassData::from_rows({{1, 2}, {-1, -2}, {0.5, -3}, {-0.5, 3}});
  const Vector v{0.6, 0.8};
  const double gamma = 1.4;
  Vector want(2, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = dot(v, a.point(i));
    for (std::size_t j = 0; j < 2; ++j) want[j] += p * a.point(i)[j] / 4.0;
  }
  const double c = 2.0 * gamma * gamma * std::pow(4.0 / 3.0, 0.4) * std::pow(4.0, -0.4);
  const auto got = grad_vara(v, a, gamma);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(got[j], c * want[j], 1e-13);
  const auto numeric = central_diff([&](const Vector& x) { return variance_of(x, a, gamma); }, v);
  EXPECT_LT(max_rel_error(got, numeric), 1e-7);
}

TEST(GradVarA, GammaScalesQuadratically) {
  Rng rng(4);
  const auto a = test::random_class(rng, 6, 3);
  const auto v = test::random_unit(rng, 3);
  const auto g1 = grad_vara(v, a, 0.7);
  const auto g2 = grad_vara(v, a, 1.4);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g2[j], 4.0 * g1[j], 1e-14 * (1 + std::abs(g1[j])));
}

TEST(GradVarA, NeedsTwoPoints) {
  const auto a = ClassData::from_rows({{1, 2}});
  EXPECT_THROW(grad_vara(Vector{1, 0}, a, 1.0), DataError);
}

TEST(GradCip, MatchesFiniteDifferences) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const double gamma = 0.3 + 1.7 * rng.uniform();
    const auto a = test::random_class(rng, 5, 3, 0.5);
    const auto b = test::random_class(rng, 5, 3, -0.5);
    const auto v = test::random_unit(rng, 3);
    const auto numeric = central_diff([&](const Vector& x) { return cip(x, a, b, gamma); }, v);
    EXPECT_LT(max_rel_error(grad_cip(v, a, b, gamma), numeric), 1e-5) << trial;
    const auto self_numeric = central_diff([&](const Vector& x) { return cip(x, a, a, gamma); }, v);
    EXPECT_LT(max_rel_error(grad_cip(v, a, a, gamma), self_numeric), 1e-5) << trial;
  }
}

TEST(GradCip, OddInDirection) {
  Rng rng(8);
  const auto a = test::random_class(rng, 5, 3, 0.5);
  const auto b = test::random_class(rng, 6, 3, -0.5);
  const auto v = test::random_unit(rng, 3);
  Vector minus_v = v;
  for (double& x : minus_v) x = -x;
  const auto g = grad_cip(v, a, b, 1.0);
  const auto gm = grad_cip(minus_v, a, b, 1.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(gm[j], -g[j], 1e-14 * (1 + std::abs(g[j])));
}

// Both classes are symmetric under x2 -> -x2 and v = e1 lies in the mirror
// plane, so the e2 component of the gradient vanishes.
TEST(GradCip, MirrorSymmetricTangentVanishes) {
  const auto a = ClassData::from_rows({{1, 0.5}, {2, -0.3}, {0.5, 0.1}, {1.5, -0.6}});
  auto b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b.values[i * 2] = -b.values[i * 2];
  ClassData a_sym = a, b_sym = b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a_sym.push_back(Vector{a.point(i)[0], -a.point(i)[1]});
    b_sym.push_back(Vector{b.point(i)[0], -b.point(i)[1]});
  }
  const Vector v{1.0, 0.0};
  const auto g = grad_cip(v, a_sym, b_sym, 1.0);
  const auto numeric = central_diff([&](const Vector& x) { return cip(x, a_sym, b_sym, 1.0); }, v);
  EXPECT_NEAR(g[1], 0.0, 1e-14);
  EXPECT_NEAR(numeric[1], 0.0, 1e-9);
}

TEST(GradDcs, MatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double gamma = 0.3 + 1.7 * rng.uniform();
    const std::size_t d = 2 + trial % 9;
    const auto pos = test::random_class(rng, 5 + trial % 16, d, 0.4);
    const auto neg = test::random_class(rng, 5 + (trial * 7) % 16, d, -0.4);
    const auto v = test::random_unit(rng, d);
    const auto report = finite_diff_check(v, pos, neg, gamma, 1e-6);
    EXPECT_LT(report.max_rel_error, 1e-5) << trial;
    const auto numeric = central_diff([&](const Vector& x) { return dcs(x, pos, neg, gamma); }, v);
    EXPECT_LT(max_rel_error(report.analytic, numeric), 1e-5) << trial;
  }
}

TEST(GradDcs, OddInDirection) {
  Rng rng(10);
  const auto pos = test::random_class(rng, 8, 4, 0.5);
  const auto neg = test::random_class(rng, 9, 4, -0.5);
  const auto v = test::random_unit(rng, 4);
  Vector minus_v = v;
  for (double& x : minus_v) x = -x;
  const auto g = grad_dcs(v, pos, neg, 0.9);
  const auto gm = grad_dcs(minus_v, pos, neg, 0.9);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(gm[j], -g[j], 1e-12 * (1 + std::abs(g[j])));
}

TEST(GradDcs, IdenticalClassesGiveZero) {
  Rng rng(12);
  const auto a = test::random_class(rng, 10, 3);
  const auto v = test::random_unit(rng, 3);
  EXPECT_LT(norm(grad_dcs(v, a, a, 1.0)), 1e-9);
}

TEST(GradDcs, ReconstructedFromCipGradientsBitForBit) {
  Rng rng(13);
  const auto pos = test::random_class(rng, 7, 3, 0.5);
  const auto neg = test::random_class(rng, 9, 3, -0.5);
  const auto v = test::random_unit(rng, 3);
  const double gamma = 1.1;
  const auto gpp = grad_cip(v, pos, pos, gamma);
  const auto gnn = grad_cip(v, neg, neg, gamma);
  const auto gpn = grad_cip(v, pos, neg, gamma);
  const double cpp = cip(v, pos, pos, gamma), cnn = cip(v, neg, neg, gamma),
               cpn = cip(v, pos, neg, gamma);
  const auto direct = grad_dcs(v, pos, neg, gamma);
  const auto rebuilt = combine_dcs_gradient({cpp, gpp}, {cnn, gnn}, {cpn, gpn});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(direct[j], rebuilt[j]);
}

TEST(GradDcs, ValueMatchesValueOnlyPath) {
  Rng rng(14);
  const auto pos = test::random_class(rng, 30, 5, 0.5);
  const auto neg = test::random_class(rng, 25, 5, -0.5);
  const auto v = test::random_unit(rng, 5);
  EXPECT_EQ(dcs_with_gradient(v, pos, neg, 0.8).value, dcs(v, pos, neg, 0.8));
}

TEST(FiniteDiff, QuadraticIsExact) {
  auto f = [](std::span<const double> x) { return 3 * x[0] * x[0] - x[0] * x[1] + 0.5 * x[1] * x[1]; };
  const Vector v{0.7, -1.3};
  const Vector grad{6 * v[0] - v[1], -v[0] + v[1]};
  EXPECT_LT(finite_diff_check(f, v, grad, 1e-3).max_rel_error, 1e-9);
}

TEST(FiniteDiff, CoarseStepIsWorse) {
  Rng rng(15);
  const auto pos = test::random_class(rng, 12, 3, 0.5);
  const auto neg = test::random_class(rng, 12, 3, -0.5);
  const auto v = test::random_unit(rng, 3);
  const auto fine = finite_diff_check(v, pos, neg, 1.0, 1e-6);
  const auto coarse = finite_diff_check(v, pos, neg, 1.0, 1e-1);
  EXPECT_LT(fine.max_rel_error, 1e-5);
  EXPECT_GT(coarse.max_rel_error, fine.max_rel_error);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  auto f = [](std::span<const double> x) { return x[0]; };
  EXPECT_THROW(finite_diff_check(f, Vector{1.0}, Vector{1.0}, 0.0), ArgumentError);
}

}  // namespace
}  // namespace melc

#pragma once

// One-dimensional Gaussian kernel density estimates of projected classes and
// the information potentials built from them:
//
//   cip(A, B) = integral of kde_A * kde_B
//   H2(A)     = -log cip(A, A)
//   D_CS      = log cip(+,+) + log cip(-,-) - 2 log cip(+,-)
//
// Every kernel width follows Silverman's rule on the projected class, scaled
// by gamma and floored so the objective stays finite on degenerate data.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "melc/dataset.hpp"
#include "melc/error.hpp"
#include "melc/numeric.hpp"

namespace melc {

struct Projection {
  std::vector<double> samples;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples.empty(); }
  [[nodiscard]] double weight_sum() const {
    KahanSum s;
    for (double w : weights) s += w;
    return s.value();
  }

  static Projection unweighted(std::vector<double> samples) {
    Projection p;
    p.weights.assign(samples.size(), 1.0);
    p.samples = std::move(samples);
    return p;
  }
};

// Kernel width sigma and multiplicative scale gamma; the kernel standard
// deviation is gamma * sigma.
struct KdeSpec {
  double sigma = 1.0;
  double gamma = 1.0;
  [[nodiscard]] double width() const noexcept { return gamma * sigma; }
};

inline constexpr double kWidthFloor = 1e-9;
inline constexpr double kMinExponent = -745.0;

// (4/3)^(1/5)
inline const double kSilvermanFactor = std::pow(4.0 / 3.0, 0.2);

inline Projection project(std::span<const double> v, const ClassData& x) {
  if (v.size() != x.dim) {
    throw ArgumentError("project: direction has dimension " + std::to_string(v.size()) +
                        ", data has " + std::to_string(x.dim));
  }
  Projection p;
  p.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p.samples[i] = dot(v, x.point(i));
  p.weights = x.weights;
  return p;
}

struct ProjectionMoments {
  double mean = 0.0;
  double variance = 0.0;  // weighted, population convention
  std::size_t argmax_abs = 0;
  double max_abs = 0.0;
};

inline ProjectionMoments moments(const Projection& p) {
  if (p.empty()) throw DataError("empty class projection");
  ProjectionMoments m;
  const double total = p.weight_sum();
  KahanSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += p.weights[i] * p.samples[i];
    if (std::abs(p.samples[i]) > m.max_abs) {
      m.max_abs = std::abs(p.samples[i]);
      m.argmax_abs = i;
    }
  }
  m.mean = s.value() / total;
  KahanSum q;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double c = p.samples[i] - m.mean;
    q += p.weights[i] * c * c;
  }
  m.variance = q.value() / total;
  return m;
}

// Smallest admissible kernel width for a projection.
inline double width_floor(const Projection& p) {
  double max_abs = 0.0;
  for (double x : p.samples) max_abs = std::max(max_abs, std::abs(x));
  return kWidthFloor * std::max(1.0, max_abs);
}

// Silverman's rule without the floor: (4/3)^(1/5) n^(-1/5) sigma_P.
inline double silverman_raw(const Projection& p) {
  if (p.size() < 2) throw DataError("Silverman's rule needs at least two samples");
  const auto m = moments(p);
  return kSilvermanFactor * std::pow(static_cast<double>(p.size()), -0.2) * std::sqrt(m.variance);
}

inline double silverman_width(const Projection& p) {
  return std::max(silverman_raw(p), width_floor(p));
}

// gamma * Silverman, floored.
inline double effective_width(const Projection& p, double gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("gamma must be positive");
  return std::max(gamma * silverman_raw(p), width_floor(p));
}

// Squared effective width, the per-class variance V_A entering cip.
inline double kernel_variance(const Projection& p, double gamma) {
  const double w = effective_width(p, gamma);
  return w * w;
}

inline double normal_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

inline double kde_eval(const Projection& p, const KdeSpec& spec, double x) {
  const double w = spec.width();
  if (!(w > 0.0)) throw ArgumentError("kde_eval: kernel width must be positive");
  const double var = w * w;
  KahanSum s;
  for (std::size_t i = 0; i < p.size(); ++i) s += p.weights[i] * normal_pdf(x, p.samples[i], var);
  return s.value() / p.weight_sum();
}

// log of kde_eval computed with log-sum-exp; finite far outside the data.
inline double log_kde_eval(const Projection& p, double width, double x) {
  if (p.empty()) throw DataError("log_kde_eval: empty projection");
  const double var = width * width;
  double peak = -INFINITY;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = x - p.samples[i];
    peak = std::max(peak, std::log(p.weights[i]) - 0.5 * z * z / var);
  }
  KahanSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = x - p.samples[i];
    s += std::exp(std::log(p.weights[i]) - 0.5 * z * z / var - peak);
  }
  return peak + std::log(s.value()) - std::log(p.weight_sum()) -
         0.5 * std::log(2.0 * std::numbers::pi * var);
}

// Integral over R of N(m1, s1^2)(x) * N(m2, s2^2)(x).
inline double normal_product_integral(double m1, double s1, double m2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw ArgumentError("normal_product_integral: widths must be > 0");
  return normal_pdf(m1 - m2, 0.0, s1 * s1 + s2 * s2);
}

namespace detail {

// Weighted pairwise sums over (a, b) of t = w_a w_b exp(-delta^2 / (2V)),
// delta = a - b:
//   s0 = sum t, s2 = sum t delta^2,
//   row[a] = sum_b t delta, col[b] = sum_a t delta.
// With self = true, A and B are the same projection and the symmetric half is
// visited once.
struct PairSums {
  double s0 = 0.0;
  double s2 = 0.0;
  std::vector<double> row;
  std::vector<double> col;
};

template <bool kWithGradient>
PairSums pair_sums(const Projection& a, const Projection& b, double variance_sum, bool self) {
  PairSums out;
  const double inv = 1.0 / (2.0 * variance_sum);
  KahanSum s0, s2;
  if constexpr (kWithGradient) {
    out.row.assign(a.size(), 0.0);
    out.col.assign(b.size(), 0.0);
  }
  if (self) {
    for (std::size_t i = 0; i < a.size(); ++i) s0 += a.weights[i] * a.weights[i];
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double xi = a.samples[i];
      const double wi = a.weights[i];
      for (std::size_t j = i + 1; j < a.size(); ++j) {
        const double delta = xi - a.samples[j];
        const double t = wi * a.weights[j] * std::exp(std::max(-delta * delta * inv, kMinExponent));
        s0 += 2.0 * t;
        if constexpr (kWithGradient) {
          s2 += 2.0 * t * delta * delta;
          out.row[i] += t * delta;
          out.row[j] -= t * delta;
        }
      }
    }
    if constexpr (kWithGradient) {
      for (std::size_t i = 0; i < a.size(); ++i) out.col[i] = -out.row[i];
    }
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double xi = a.samples[i];
      const double wi = a.weights[i];
      for (std::size_t j = 0; j < b.size(); ++j) {
        const double delta = xi - b.samples[j];
        const double t = wi * b.weights[j] * std::exp(std::max(-delta * delta * inv, kMinExponent));
        s0 += t;
        if constexpr (kWithGradient) {
          s2 += t * delta * delta;
          out.row[i] += t * delta;
          out.col[j] += t * delta;
        }
      }
    }
  }
  out.s0 = s0.value();
  out.s2 = s2.value();
  return out;
}

inline double cip_normalizer(const Projection& a, const Projection& b, double variance_sum) {
  return 1.0 / (std::sqrt(2.0 * std::numbers::pi * variance_sum) * a.weight_sum() * b.weight_sum());
}

inline double safe_log(double x) { return std::log(std::max(x, DBL_MIN)); }

inline void require_nonempty(const ClassData& c, const char* what) {
  if (c.empty()) throw DataError(std::string(what) + ": empty class");
}

}  // namespace detail

// Integral of the product of the two KDEs when the kernel variances add up to
// variance_sum (V_A + V_B).
inline double cross_information_potential(const Projection& a, const Projection& b,
                                          double variance_sum) {
  if (a.empty() || b.empty()) throw DataError("cross_information_potential: empty projection");
  if (!(variance_sum > 0.0)) throw ArgumentError("variance sum must be positive");
  const auto sums = detail::pair_sums<false>(a, b, variance_sum, &a == &b);
  return sums.s0 * detail::cip_normalizer(a, b, variance_sum);
}

inline double cip(std::span<const double> v, const ClassData& a, const ClassData& b,
                  double gamma) {
  detail::require_nonempty(a, "cip");
  detail::require_nonempty(b, "cip");
  const auto pa = project(v, a);
  const double va = kernel_variance(pa, gamma);
  if (&a == &b) return cross_information_potential(pa, pa, 2.0 * va);
  const auto pb = project(v, b);
  return cross_information_potential(pa, pb, va + kernel_variance(pb, gamma));
}

inline double renyi_h2(std::span<const double> v, const ClassData& a, double gamma) {
  return -detail::safe_log(cip(v, a, a, gamma));
}

// Cauchy-Schwarz divergence between the projected class densities.
inline double dcs(std::span<const double> v, const ClassData& pos, const ClassData& neg,
                  double gamma) {
  detail::require_nonempty(pos, "dcs");
  detail::require_nonempty(neg, "dcs");
  const auto pp = project(v, pos);
  const auto pn = project(v, neg);
  const double vp = kernel_variance(pp, gamma);
  const double vn = kernel_variance(pn, gamma);
  const double cpp = cross_information_potential(pp, pp, 2.0 * vp);
  const double cnn = cross_information_potential(pn, pn, 2.0 * vn);
  const double cpn = cross_information_potential(pp, pn, vp + vn);
  return detail::safe_log(cpp) + detail::safe_log(cnn) - 2.0 * detail::safe_log(cpn);
}

}  // namespace melc

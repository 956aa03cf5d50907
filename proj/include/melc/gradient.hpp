#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "melc/dataset.hpp"
#include "melc/density.hpp"
#include "melc/numeric.hpp"

namespace melc {

// Projection of one class with its kernel variance V_A(v) and dV_A/dv.
struct ClassTerm {
  Projection proj;
  double variance = 0.0;
  Vector variance_gradient;
};

// V_A(v) = (gamma (4/3)^(1/5) n^(-1/5) sigma_{v'A})^2, so with the weighted
// population variance
//   grad V_A = gamma^2 (4/3)^(2/5) n^(-2/5) (2/W) sum_a w_a (<v,a> - mean) a.
// When the width floor is active V_A = (eps max(1, max|<v,a>|))^2 instead.
inline ClassTerm class_term(std::span<const double> v, const ClassData& a, double gamma) {
  if (a.size() < 2) throw DataError("a class needs at least two points");
  ClassTerm t;
  t.proj = project(v, a);
  const auto m = moments(t.proj);
  const double n = static_cast<double>(a.size());
  const double scale = gamma * kSilvermanFactor * std::pow(n, -0.2);
  const double raw = scale * std::sqrt(m.variance);
  const double floor = width_floor(t.proj);
  t.variance = kernel_variance(t.proj, gamma);
  t.variance_gradient.assign(a.dim, 0.0);
  if (raw >= floor) {
    const double c = scale * scale * 2.0 / t.proj.weight_sum();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double coef = c * a.weights[i] * (t.proj.samples[i] - m.mean);
      const auto x = a.point(i);
      for (std::size_t k = 0; k < a.dim; ++k) t.variance_gradient[k] += coef * x[k];
    }
  } else if (m.max_abs > 1.0) {
    const double p = t.proj.samples[m.argmax_abs];
    const auto x = a.point(m.argmax_abs);
    for (std::size_t k = 0; k < a.dim; ++k) {
      t.variance_gradient[k] = 2.0 * kWidthFloor * kWidthFloor * p * x[k];
    }
  }
  return t;
}

inline Vector grad_vara(std::span<const double> v, const ClassData& a, double gamma) {
  return class_term(v, a, gamma).variance_gradient;
}

struct CipGradient {
  double value = 0.0;
  Vector gradient;
};

// cip_AB and its gradient from one pairwise pass. With V = V_A + V_B,
// delta = <v, a - b> and e = exp(-delta^2 / 2V):
//   grad cip = K / (2V) sum e { (delta^2 / V - 1) grad V - 2 delta (a - b) }
// where K = 1 / (sqrt(2 pi V) W_A W_B).
inline CipGradient cip_with_gradient(const ClassData& a, const ClassTerm& ta, const ClassData& b,
                                     const ClassTerm& tb, bool self) {
  const double var = self ? 2.0 * ta.variance : ta.variance + tb.variance;
  const auto sums = detail::pair_sums<true>(ta.proj, tb.proj, var, self);
  const double k = detail::cip_normalizer(ta.proj, tb.proj, var);
  CipGradient out;
  out.value = sums.s0 * k;
  const std::size_t d = a.dim;
  Vector direction(d, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.point(i);
    for (std::size_t j = 0; j < d; ++j) direction[j] += sums.row[i] * x[j];
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto x = b.point(i);
    for (std::size_t j = 0; j < d; ++j) direction[j] -= sums.col[i] * x[j];
  }
  const double variance_coef = sums.s2 / var - sums.s0;
  const double front = k / (2.0 * var);
  out.gradient.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double grad_var =
        self ? 2.0 * ta.variance_gradient[j] : ta.variance_gradient[j] + tb.variance_gradient[j];
    out.gradient[j] = front * (variance_coef * grad_var - 2.0 * direction[j]);
  }
  return out;
}

inline Vector grad_cip(std::span<const double> v, const ClassData& a, const ClassData& b,
                       double gamma) {
  const auto ta = class_term(v, a, gamma);
  if (&a == &b) return cip_with_gradient(a, ta, a, ta, true).gradient;
  const auto tb = class_term(v, b, gamma);
  return cip_with_gradient(a, ta, b, tb, false).gradient;
}

struct DcsGradient {
  double value = 0.0;
  Vector gradient;
  CipGradient pos_pos, neg_neg, pos_neg;
};

// grad D_CS = grad cip_pp / cip_pp + grad cip_nn / cip_nn - 2 grad cip_pn / cip_pn
inline Vector combine_dcs_gradient(const CipGradient& pp, const CipGradient& nn,
                                   const CipGradient& pn) {
  const double ipp = 1.0 / std::max(pp.value, DBL_MIN);
  const double inn = 1.0 / std::max(nn.value, DBL_MIN);
  const double ipn = 1.0 / std::max(pn.value, DBL_MIN);
  Vector g(pp.gradient.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] = pp.gradient[j] * ipp + nn.gradient[j] * inn - 2.0 * pn.gradient[j] * ipn;
  }
  return g;
}

inline DcsGradient dcs_with_gradient(std::span<const double> v, const ClassData& pos,
                                     const ClassData& neg, double gamma) {
  const auto tp = class_term(v, pos, gamma);
  const auto tn = class_term(v, neg, gamma);
  DcsGradient out;
  out.pos_pos = cip_with_gradient(pos, tp, pos, tp, true);
  out.neg_neg = cip_with_gradient(neg, tn, neg, tn, true);
  out.pos_neg = cip_with_gradient(pos, tp, neg, tn, false);
  out.value = detail::safe_log(out.pos_pos.value) + detail::safe_log(out.neg_neg.value) -
              2.0 * detail::safe_log(out.pos_neg.value);
  out.gradient = combine_dcs_gradient(out.pos_pos, out.neg_neg, out.pos_neg);
  return out;
}

inline Vector grad_dcs(std::span<const double> v, const ClassData& pos, const ClassData& neg,
                       double gamma) {
  return dcs_with_gradient(v, pos, neg, gamma).gradient;
}

struct GradientReport {
  Vector analytic;
  Vector numeric;
  double max_rel_error = 0.0;
};

// Central differences of f around v, compared coordinatewise with the
// analytic gradient; the error is max_i |a_i - n_i| / (||a|| + 1e-12).
inline GradientReport finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                        std::span<const double> v, Vector analytic, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite_diff_check: h must be positive");
  if (analytic.size() != v.size()) throw ArgumentError("finite_diff_check: dimension mismatch");
  GradientReport r;
  r.analytic = std::move(analytic);
  r.numeric.resize(v.size());
  Vector x(v.begin(), v.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    r.numeric[i] = (up - down) / (2.0 * h);
  }
  const double denom = norm(r.analytic) + 1e-12;
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.max_rel_error = std::max(r.max_rel_error, std::abs(r.analytic[i] - r.numeric[i]) / denom);
  }
  return r;
}

inline GradientReport finite_diff_check(std::span<const double> v, const ClassData& pos,
                                        const ClassData& neg, double gamma, double h) {
  return finite_diff_check([&](std::span<const double> x) { return dcs(x, pos, neg, gamma); }, v,
                           grad_dcs(v, pos, neg, gamma), h);
}

}  // namespace melc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "melc/dataset.hpp"
#include "melc/density.hpp"
#include "melc/error.hpp"
#include "melc/numeric.hpp"
#include "melc/optimizer.hpp"

namespace melc {

// Density classifier on the line v'x: the two projected training sets with
// their effective kernel widths.
struct ProjectionModel {
  Vector v;
  double gamma = 1.0;
  double width_pos = 1.0;
  double width_neg = 1.0;
  Projection proj_pos;
  Projection proj_neg;

  [[nodiscard]] std::size_t dim() const noexcept { return v.size(); }
};

// Labels alternate across the k+1 regions (-inf, t1], (t1, t2], ..., (tk, inf).
struct ThresholdClassifier {
  Vector v;
  std::vector<double> thresholds;
  int leftmost_label = 1;

  [[nodiscard]] std::size_t dim() const noexcept { return v.size(); }
  [[nodiscard]] std::size_t k() const noexcept { return thresholds.size(); }
};

inline ProjectionModel make_model(std::span<const double> v, const ClassData& pos,
                                  const ClassData& neg, double gamma) {
  ProjectionModel m;
  m.v = normalized(v);
  m.gamma = gamma;
  m.proj_pos = project(m.v, pos);
  m.proj_neg = project(m.v, neg);
  m.width_pos = effective_width(m.proj_pos, gamma);
  m.width_neg = effective_width(m.proj_neg, gamma);
  return m;
}

struct FitResult {
  ProjectionModel model;
  OptResult optimization;
};

inline FitResult fit_detailed(const ClassData& pos, const ClassData& neg, const OptOptions& opts,
                              const std::vector<SeedVector>& seeds = {}) {
  auto opt = multi_start(pos, neg, opts, seeds);
  auto model = make_model(opt.v, pos, neg, opts.gamma);
  return {std::move(model), std::move(opt)};
}

inline ProjectionModel fit(const ClassData& pos, const ClassData& neg, const OptOptions& opts,
                           const std::vector<SeedVector>& seeds = {}) {
  return fit_detailed(pos, neg, opts, seeds).model;
}

// log de+(x) - log de-(x); its sign is the sign of Q = de+ - de-, and it
// stays finite where both densities underflow.
inline double log_density_ratio(const ProjectionModel& m, double x) {
  return log_kde_eval(m.proj_pos, m.width_pos, x) - log_kde_eval(m.proj_neg, m.width_neg, x);
}

// Equal densities go to +1.
inline int density_label(const ProjectionModel& m, double x) {
  return log_density_ratio(m, x) >= 0.0 ? 1 : -1;
}

struct DensityPrediction {
  int label = 1;
  double likelihood = 0.5;  // p+ / (p+ + p-)
};

inline DensityPrediction classify_density_projected(const ProjectionModel& m, double x) {
  const double r = log_density_ratio(m, x);
  DensityPrediction out;
  out.label = r >= 0.0 ? 1 : -1;
  if (std::isnan(r)) {
    out.likelihood = 0.5;
    out.label = 1;
  } else if (r >= 0.0) {
    out.likelihood = 1.0 / (1.0 + std::exp(-r));
  } else {
    const double e = std::exp(r);
    out.likelihood = e / (1.0 + e);
  }
  return out;
}

inline DensityPrediction classify_density(const ProjectionModel& m, std::span<const double> x) {
  if (x.size() != m.dim()) throw DataError("point dimension does not match the model");
  return classify_density_projected(m, dot(m.v, x));
}

inline int classify_threshold_projected(const ThresholdClassifier& tc, double x) {
  // number of thresholds strictly below x; x == t stays in the left region
  const auto region = static_cast<std::size_t>(
      std::lower_bound(tc.thresholds.begin(), tc.thresholds.end(), x) - tc.thresholds.begin());
  return region % 2 == 0 ? tc.leftmost_label : -tc.leftmost_label;
}

inline int classify_thresholds(const ThresholdClassifier& tc, std::span<const double> x) {
  if (x.size() != tc.dim()) throw DataError("point dimension does not match the model");
  return classify_threshold_projected(tc, dot(tc.v, x));
}

// Converts the density model into thresholds. The merged sorted projections
// are bracketed by probes 10 kernel widths outside the data; every change of
// the density label between consecutive points yields one threshold, refined
// by binsearch_iters bisection steps (one step places it at the midpoint).
// A sample point where the densities are exactly equal becomes the threshold.
inline ThresholdClassifier extract_thresholds(const ProjectionModel& m, std::size_t binsearch_iters) {
  if (binsearch_iters < 1) throw ArgumentError("binsearch_iters must be at least 1");
  std::vector<double> xs = m.proj_pos.samples;
  xs.insert(xs.end(), m.proj_neg.samples.begin(), m.proj_neg.samples.end());
  if (xs.empty()) throw DataError("model has no training projections");
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const double reach = 10.0 * std::max(m.width_pos, m.width_neg);
  xs.insert(xs.begin(), xs.front() - reach);
  xs.push_back(xs.back() + reach);

  std::vector<double> ratio(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ratio[i] = log_density_ratio(m, xs[i]);
  auto label_of = [](double r) { return r >= 0.0 ? 1 : -1; };

  ThresholdClassifier tc;
  tc.v = m.v;
  tc.leftmost_label = label_of(ratio.front());
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const int left = label_of(ratio[i - 1]);
    if (left == label_of(ratio[i])) continue;
    double t;
    if (ratio[i - 1] == 0.0) {
      t = xs[i - 1];
    } else if (ratio[i] == 0.0) {
      t = xs[i];
    } else {
      double lo = xs[i - 1], hi = xs[i];
      t = 0.5 * (lo + hi);
      for (std::size_t it = 1; it < binsearch_iters; ++it) {
        const double r = log_density_ratio(m, t);
        if (r == 0.0) break;
        (label_of(r) == left ? lo : hi) = t;
        t = 0.5 * (lo + hi);
      }
    }
    if (!tc.thresholds.empty() && t <= tc.thresholds.back()) {
      // two boundaries collapsed onto one zero of Q: they cancel
      tc.thresholds.pop_back();
      continue;
    }
    tc.thresholds.push_back(t);
  }
  return tc;
}

// Single threshold with the orientation that maximizes training accuracy on
// the given projections. Used as the k = 1 baseline.
inline ThresholdClassifier best_single_threshold(std::span<const double> v,
                                                 std::span<const double> projections,
                                                 std::span<const int> labels) {
  std::vector<std::pair<double, int>> pts;
  for (std::size_t i = 0; i < projections.size(); ++i) pts.emplace_back(projections[i], labels[i]);
  std::sort(pts.begin(), pts.end());
  std::size_t total_pos = 0;
  for (const auto& p : pts) total_pos += p.second > 0;
  const std::size_t total_neg = pts.size() - total_pos;
  // left region gets leftmost label; sweep the cut over gaps
  std::size_t best_correct = 0;
  double best_t = pts.empty() ? 0.0 : pts.front().first - 1.0;
  int best_left = 1;
  std::size_t left_pos = 0, left_neg = 0;
  for (std::size_t i = 0; i <= pts.size(); ++i) {
    if (i == 0 || i == pts.size() || pts[i].first != pts[i - 1].first) {
      const double t = i == 0 ? pts.front().first - 1.0
                       : i == pts.size() ? pts.back().first + 1.0
                                         : 0.5 * (pts[i - 1].first + pts[i].first);
      const std::size_t left_plus = left_pos + (total_neg - left_neg);
      const std::size_t left_minus = left_neg + (total_pos - left_pos);
      if (left_plus > best_correct) {
        best_correct = left_plus;
        best_t = t;
        best_left = 1;
      }
      if (left_minus > best_correct) {
        best_correct = left_minus;
        best_t = t;
        best_left = -1;
      }
    }
    if (i < pts.size()) (pts[i].second > 0 ? left_pos : left_neg) += 1;
  }
  ThresholdClassifier tc;
  tc.v.assign(v.begin(), v.end());
  tc.thresholds = {best_t};
  tc.leftmost_label = best_left;
  return tc;
}

struct DensityRow {
  double x = 0.0;
  double pos = 0.0;
  double neg = 0.0;
};

inline std::vector<DensityRow> density_curve(const ProjectionModel& m, double lo, double hi,
                                             std::size_t n) {
  if (!(lo < hi)) throw ArgumentError("density_curve: need lo < hi");
  if (n < 2) throw ArgumentError("density_curve: need at least two rows");
  std::vector<DensityRow> rows(n);
  const KdeSpec pos_spec{m.width_pos, 1.0}, neg_spec{m.width_neg, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    rows[i] = {x, kde_eval(m.proj_pos, pos_spec, x), kde_eval(m.proj_neg, neg_spec, x)};
  }
  return rows;
}

inline void write_density_curve(std::ostream& out, const std::vector<DensityRow>& rows) {
  out << "x\tpos\tneg\n";
  for (const auto& r : rows) {
    out << format_real(r.x) << '\t' << format_real(r.pos) << '\t' << format_real(r.neg) << '\n';
  }
}

}  // namespace melc

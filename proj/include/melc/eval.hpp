#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "melc/classifier.hpp"
#include "melc/dataset.hpp"
#include "melc/density.hpp"
#include "melc/error.hpp"
#include "melc/optimizer.hpp"
#include "melc/parallel.hpp"

namespace melc {

struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  void add(int truth, int predicted) {
    if (truth > 0) {
      (predicted > 0 ? tp : fn) += 1;
    } else {
      (predicted > 0 ? fp : tn) += 1;
    }
  }
  [[nodiscard]] std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
};

struct Metrics {
  double acc = 0.0;
  double mcc = 0.0;
  double wac = 0.0;
};

// ACC = (tp+tn)/N, WAC = mean of the two recalls, MCC with 0 for a zero
// denominator.
inline Metrics compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ArgumentError("compute_metrics: no evaluated points");
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn),
               fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  if (tp + fn == 0 || tn + fp == 0) {
    throw ArgumentError("compute_metrics: both classes must be present");
  }
  Metrics m;
  m.acc = (tp + tn) / (tp + tn + fp + fn);
  m.wac = 0.5 * (tp / (tp + fn) + tn / (tn + fp));
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = denom == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(denom);
  return m;
}

// Sample Pearson correlation; 0 if either series is constant.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ArgumentError("pearson: length mismatch");
  if (xs.size() < 2) throw ArgumentError("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {
inline void check_bound_args(double n, std::uint64_t k, double delta, double e_emp) {
  if (!(n >= 1) || k < 1) throw ArgumentError("bound: N and k must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("bound: delta must lie in (0, 1)");
  if (!(e_emp >= 0.0 && e_emp <= 1.0)) throw ArgumentError("bound: e_emp must lie in [0, 1]");
}
}  // namespace detail

// Generalization bound for k-threshold linear classifiers on N points in R^d:
//   E <= E_emp + sqrt(8/N ((d+k-1) log(2eNk/(d+k-1)) + log(14k^2/delta)))
inline double anthony_bound(std::uint64_t n, std::uint64_t d, std::uint64_t k, double delta,
                            double e_emp) {
  const double nn = static_cast<double>(n);
  detail::check_bound_args(nn, k, delta, e_emp);
  if (d < 1) throw ArgumentError("bound: d must be at least 1");
  const double kk = static_cast<double>(k);
  const double dof = static_cast<double>(d) + kk - 1.0;
  const double inner =
      dof * std::log(2.0 * std::numbers::e * nn * kk / dof) + std::log(14.0 * kk * kk / delta);
  return e_emp + std::sqrt(8.0 / nn * inner);
}

// Margin version for ||x|| <= 1, ||v|| = 1 and margin in (0, 1]:
//   E <= E_emp + sqrt(8/N (1152/margin^2 log(9N) + k log(10/margin) + log(4/delta)))
inline double anthony_margin_bound(std::uint64_t n, double margin, std::uint64_t k, double delta,
                                   double e_emp) {
  const double nn = static_cast<double>(n);
  detail::check_bound_args(nn, k, delta, e_emp);
  if (!(margin > 0.0 && margin <= 1.0)) throw ArgumentError("bound: margin must lie in (0, 1]");
  const double inner = 1152.0 / (margin * margin) * std::log(9.0 * nn) +
                       static_cast<double>(k) * std::log(10.0 / margin) + std::log(4.0 / delta);
  return e_emp + std::sqrt(8.0 / nn * inner);
}

enum class SelectionMetric { kWac, kMcc };

struct CvOptions {
  OptOptions opt;
  std::vector<SeedMethod> seeds{SeedMethod::kMeanDifference};
  std::string seed_file;  // for SeedMethod::kFile
  std::size_t binsearch_iters = 5;
  SelectionMetric select = SelectionMetric::kWac;
};

struct FoldResult {
  std::size_t fold = 0;
  Metrics metrics;
  ConfusionCounts counts;
  std::size_t thresholds = 0;
  double dcs_train = 0.0;
  std::size_t test_size = 0;
  // test points where the threshold and density classifiers disagree
  std::size_t disagreements = 0;
  Vector v;
};

struct MetricSummary {
  Metrics mean;
  Metrics stddev;  // sample standard deviation over folds
};

struct GammaResult {
  double gamma = 1.0;
  std::vector<FoldResult> folds;
  MetricSummary summary;
  double mean_thresholds = 0.0;
};

struct CvReport {
  std::vector<GammaResult> per_gamma;
  std::size_t chosen = 0;

  [[nodiscard]] const GammaResult& selected() const { return per_gamma.at(chosen); }
  [[nodiscard]] double chosen_gamma() const { return selected().gamma; }
};

inline MetricSummary summarize(const std::vector<FoldResult>& folds) {
  MetricSummary s;
  const double n = static_cast<double>(folds.size());
  for (const auto& f : folds) {
    s.mean.acc += f.metrics.acc;
    s.mean.mcc += f.metrics.mcc;
    s.mean.wac += f.metrics.wac;
  }
  s.mean.acc /= n;
  s.mean.mcc /= n;
  s.mean.wac /= n;
  if (folds.size() > 1) {
    for (const auto& f : folds) {
      s.stddev.acc += std::pow(f.metrics.acc - s.mean.acc, 2);
      s.stddev.mcc += std::pow(f.metrics.mcc - s.mean.mcc, 2);
      s.stddev.wac += std::pow(f.metrics.wac - s.mean.wac, 2);
    }
    s.stddev.acc = std::sqrt(s.stddev.acc / (n - 1));
    s.stddev.mcc = std::sqrt(s.stddev.mcc / (n - 1));
    s.stddev.wac = std::sqrt(s.stddev.wac / (n - 1));
  }
  return s;
}

inline std::vector<SeedVector> build_seeds(const std::vector<SeedMethod>& methods,
                                           const ClassData& pos, const ClassData& neg,
                                           const std::string& seed_file, std::uint64_t seed) {
  std::vector<SeedVector> seeds;
  for (auto m : methods) {
    seeds.push_back({seed_vector(m, pos, neg, seed_file, seed), seed_method_name(m)});
  }
  return seeds;
}

// Fits on the training part of one fold and scores the test part with the
// threshold classifier.
inline FoldResult evaluate_fold(const Dataset& ds, const Fold& fold, std::size_t fold_index,
                                const CvOptions& cv, double gamma) {
  const Dataset train = ds.subset(fold.train);
  const ClassData pos = train.class_data(1), neg = train.class_data(-1);
  if (pos.size() < 2 || neg.size() < 2) {
    throw DataError("fold " + std::to_string(fold_index) +
                    ": training set lacks one of the classes");
  }
  OptOptions opt = cv.opt;
  opt.gamma = gamma;
  opt.seed = derive_seed(cv.opt.seed, fold_index + 1);
  const auto seeds = build_seeds(cv.seeds, pos, neg, cv.seed_file, opt.seed);
  const auto fitted = fit_detailed(pos, neg, opt, seeds);
  const auto tc = extract_thresholds(fitted.model, cv.binsearch_iters);

  FoldResult r;
  r.fold = fold_index;
  r.thresholds = tc.k();
  r.v = fitted.model.v;
  r.dcs_train = opt.objective == Objective::kDivergence ? fitted.optimization.objective
                                                        : dcs(fitted.model.v, pos, neg, gamma);
  r.test_size = fold.test.size();
  for (std::size_t i : fold.test) {
    const double p = dot(tc.v, ds.point(i));
    const int label = classify_threshold_projected(tc, p);
    if (label != density_label(fitted.model, p)) ++r.disagreements;
    r.counts.add(ds.label(i), label);
  }
  if (r.counts.tp + r.counts.fn == 0 || r.counts.tn + r.counts.fp == 0) {
    throw DataError("fold " + std::to_string(fold_index) +
                    ": test set lacks one of the classes; use fewer folds");
  }
  r.metrics = compute_metrics(r.counts);
  return r;
}

// For every gamma: fit on each training fold, evaluate on its test fold.
// The selected gamma has the best mean WAC (or MCC); ties go to the smaller
// gamma.
inline CvReport cross_validate(const Dataset& ds, const SplitPlan& plan,
                               const std::vector<double>& gammas, const CvOptions& cv) {
  if (gammas.empty()) throw ArgumentError("cross_validate: empty gamma list");
  if (plan.folds.empty()) throw ArgumentError("cross_validate: no folds");
  cv.opt.validate();
  for (double g : gammas) {
    if (!(g > 0.0)) throw ArgumentError("cross_validate: gamma values must be positive");
  }
  const std::size_t nf = plan.folds.size();
  std::vector<FoldResult> units(gammas.size() * nf);
  parallel_for(units.size(), [&](std::size_t u) {
    units[u] = evaluate_fold(ds, plan.folds[u % nf], u % nf, cv, gammas[u / nf]);
  });

  CvReport report;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    GammaResult gr;
    gr.gamma = gammas[g];
    gr.folds.assign(units.begin() + static_cast<std::ptrdiff_t>(g * nf),
                    units.begin() + static_cast<std::ptrdiff_t>((g + 1) * nf));
    gr.summary = summarize(gr.folds);
    for (const auto& f : gr.folds) gr.mean_thresholds += static_cast<double>(f.thresholds);
    gr.mean_thresholds /= static_cast<double>(nf);
    report.per_gamma.push_back(std::move(gr));
  }
  auto score = [&](const GammaResult& gr) {
    return cv.select == SelectionMetric::kWac ? gr.summary.mean.wac : gr.summary.mean.mcc;
  };
  for (std::size_t g = 1; g < report.per_gamma.size(); ++g) {
    const auto& cand = report.per_gamma[g];
    const auto& best = report.per_gamma[report.chosen];
    if (score(cand) > score(best) || (score(cand) == score(best) && cand.gamma < best.gamma)) {
      report.chosen = g;
    }
  }
  return report;
}

inline std::string fixed3(double x) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << x;
  return s.str();
}

// Columns: row gamma fold acc mcc wac k dcs_train n_test disagree.
// "fold" rows carry per-fold values; "mean" rows average them for one gamma
// (n_test and disagree are totals), "std" rows give the metric spread only;
// "selected" repeats the mean row of the chosen gamma.
inline void write_cv_report(std::ostream& out, const CvReport& report) {
  out << "row\tgamma\tfold\tacc\tmcc\twac\tk\tdcs_train\tn_test\tdisagree\n";
  auto summary_row = [&](const char* tag, const GammaResult& gr, const Metrics& m) {
    if (std::string_view(tag) == "std") {
      out << tag << '\t' << format_real(gr.gamma) << "\t-\t" << fixed3(m.acc) << '\t'
          << fixed3(m.mcc) << '\t' << fixed3(m.wac) << "\t-\t-\t-\t-\n";
      return;
    }
    double dcs_mean = 0.0;
    std::size_t n_test = 0, disagree = 0;
    for (const auto& f : gr.folds) {
      dcs_mean += f.dcs_train / static_cast<double>(gr.folds.size());
      n_test += f.test_size;
      disagree += f.disagreements;
    }
    out << tag << '\t' << format_real(gr.gamma) << "\t-\t" << fixed3(m.acc) << '\t'
        << fixed3(m.mcc) << '\t' << fixed3(m.wac) << '\t' << fixed3(gr.mean_thresholds) << '\t'
        << format_real(dcs_mean) << '\t' << n_test << '\t' << disagree << '\n';
  };
  for (const auto& gr : report.per_gamma) {
    for (const auto& f : gr.folds) {
      out << "fold\t" << format_real(gr.gamma) << '\t' << f.fold << '\t' << fixed3(f.metrics.acc)
          << '\t' << fixed3(f.metrics.mcc) << '\t' << fixed3(f.metrics.wac) << '\t'
          << f.thresholds << '\t' << format_real(f.dcs_train) << '\t' << f.test_size << '\t'
          << f.disagreements << '\n';
    }
    summary_row("mean", gr, gr.summary.mean);
    summary_row("std", gr, gr.summary.stddev);
  }
  summary_row("selected", report.selected(), report.selected().summary.mean);
}

}  // namespace melc

#pragma once

// Steepest ascent on the unit sphere. Each iteration projects the gradient
// onto the tangent plane at v, h = g - <g,v> v, and searches along the great
// circle v cos(a) + sin(a) h / ||h|| for a in (0, pi/2].

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "melc/dataset.hpp"
#include "melc/density.hpp"
#include "melc/error.hpp"
#include "melc/gradient.hpp"
#include "melc/numeric.hpp"
#include "melc/parallel.hpp"
#include "melc/random.hpp"

namespace melc {

enum class Objective {
  kDivergence,      // maximize D_CS
  kCrossPotential,  // maximize -log cip(+,-), no entropy terms
};

struct OptOptions {
  std::size_t max_iters = 200;
  double grad_tol = 1e-6;
  double obj_tol = 1e-9;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  Objective objective = Objective::kDivergence;
  // Keep every accepted iterate in OptResult::path.
  bool record_path = false;
  // Ascend in per-feature standardized coordinates and map the result back.
  // The objective is unchanged by this, only the steps are.
  bool standardize = true;

  void validate() const {
    if (max_iters < 1) throw ArgumentError("max_iters must be at least 1");
    if (!(grad_tol > 0.0) || !(obj_tol > 0.0)) throw ArgumentError("tolerances must be positive");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be positive");
  }
};

struct OptResult {
  Vector v;
  double objective = 0.0;
  std::vector<double> trace;
  std::size_t iterations = 0;
  std::string seed_label;
  std::vector<Vector> path;
};

// The function being maximized over directions v.
class ProjectionObjective {
 public:
  ProjectionObjective(const ClassData& pos, const ClassData& neg, double gamma,
                      Objective kind = Objective::kDivergence)
      : pos_(pos), neg_(neg), gamma_(gamma), kind_(kind) {
    if (pos.size() < 2 || neg.size() < 2) {
      throw DataError("degenerate class: each class needs at least two points");
    }
    if (pos.dim != neg.dim) throw DataError("class dimensions differ");
  }

  [[nodiscard]] std::size_t dim() const noexcept { return pos_.dim; }

  [[nodiscard]] double value(std::span<const double> v) const {
    if (kind_ == Objective::kDivergence) return dcs(v, pos_, neg_, gamma_);
    return -detail::safe_log(cip(v, pos_, neg_, gamma_));
  }

  struct Evaluation {
    double value = 0.0;
    Vector gradient;
  };

  [[nodiscard]] Evaluation evaluate(std::span<const double> v) const {
    if (kind_ == Objective::kDivergence) {
      auto r = dcs_with_gradient(v, pos_, neg_, gamma_);
      return {r.value, std::move(r.gradient)};
    }
    const auto tp = class_term(v, pos_, gamma_);
    const auto tn = class_term(v, neg_, gamma_);
    auto c = cip_with_gradient(pos_, tp, neg_, tn, false);
    const double inv = 1.0 / std::max(c.value, DBL_MIN);
    for (double& g : c.gradient) g *= -inv;
    return {-detail::safe_log(c.value), std::move(c.gradient)};
  }

 private:
  const ClassData& pos_;
  const ClassData& neg_;
  double gamma_;
  Objective kind_;
};

// g - <g, v> v
inline Vector tangent_component(std::span<const double> v, std::span<const double> g) {
  const double along = dot(g, v);
  Vector h(g.begin(), g.end());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] -= along * v[i];
  return h;
}

// Moves v by angle alpha along the great circle towards the tangent part of
// g. A zero tangent returns v unchanged.
inline Vector sphere_step(std::span<const double> v, std::span<const double> g, double alpha) {
  const Vector h = tangent_component(v, g);
  const double hn = norm(h);
  Vector out(v.begin(), v.end());
  if (!(hn > 0.0)) return out;
  const double c = std::cos(alpha), s = std::sin(alpha) / hn;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * v[i] + s * h[i];
  const double n = norm(out);
  for (double& x : out) x /= n;
  return out;
}

using DirectionFunction = std::function<double(std::span<const double>)>;

// Step angle along the great circle through v in direction h. Doubles from
// first_step (1e-3 by default) until the objective stops increasing, then
// golden-section search inside the bracket; if the first trial step does not
// improve, backtracks from pi/4. Returns 0 when no improving step exists.
inline double line_search(const DirectionFunction& objective, std::span<const double> v,
                          std::span<const double> h, std::optional<double> start_value = {},
                          double first_step = 1e-3) {
  constexpr double kMaxStep = std::numbers::pi / 2.0;
  constexpr double kMinStep = 1e-12;
  const double kFirstStep = std::clamp(first_step, 1e-6, kMaxStep / 2.0);
  const double f0 = start_value ? *start_value : objective(v);
  auto phi = [&](double a) { return objective(sphere_step(v, h, a)); };

  double best_a = 0.0, best_f = f0;
  auto consider = [&](double a, double f) {
    if (f > best_f) {
      best_f = f;
      best_a = a;
    }
  };

  double mid = kFirstStep;
  double fmid = phi(mid);
  if (!(fmid > f0)) {
    for (double a = std::numbers::pi / 4.0; a > kMinStep; a *= 0.5) {
      if (phi(a) > f0) return a;
    }
    return 0.0;
  }
  consider(mid, fmid);

  double lo = 0.0, flo = f0;
  double hi = std::min(2.0 * mid, kMaxStep);
  double fhi = phi(hi);
  consider(hi, fhi);
  while (fhi > fmid && hi < kMaxStep) {
    lo = mid;
    flo = fmid;
    mid = hi;
    fmid = fhi;
    hi = std::min(2.0 * hi, kMaxStep);
    fhi = phi(hi);
    consider(hi, fhi);
  }
  // Still rising at pi/2: look for an interior peak between mid and pi/2.
  for (int it = 0; fhi > fmid; ++it) {
    if (it == 8) return best_a;
    const double x = 0.5 * (mid + hi);
    const double fx = phi(x);
    consider(x, fx);
    lo = mid;
    flo = fmid;
    mid = x;
    fmid = fx;
  }

  // Successive parabolic interpolation on lo < mid < hi, fmid >= flo, fhi.
  constexpr int kRefinements = 6;
  for (int it = 0; it < kRefinements; ++it) {
    const double p = (mid - lo) * (fmid - fhi), q = (mid - hi) * (fmid - flo);
    const double den = p - q;
    double x = 0.0;
    if (den != 0.0) x = mid - 0.5 * ((mid - lo) * p - (mid - hi) * q) / den;
    if (!(x > lo && x < hi) || x == mid) {
      x = (mid - lo > hi - mid) ? 0.5 * (lo + mid) : 0.5 * (mid + hi);
    }
    const double fx = phi(x);
    consider(x, fx);
    const double moved = std::abs(x - mid);
    if (fx > fmid) {
      if (x < mid) {
        hi = mid;
        fhi = fmid;
      } else {
        lo = mid;
        flo = fmid;
      }
      mid = x;
      fmid = fx;
    } else if (x < mid) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    if (moved < std::max(1e-9, 1e-2 * mid)) break;
  }
  return best_a;
}

// Diagonal rescaling x'_j = x_j / s_j with s_j the pooled standard deviation
// of feature j. Directions map as v_j = v'_j / s_j.
struct FeatureScaling {
  Vector scale;

  static FeatureScaling pooled(const ClassData& pos, const ClassData& neg) {
    const std::size_t d = pos.dim;
    FeatureScaling fs;
    fs.scale.assign(d, 1.0);
    const std::size_t n = pos.size() + neg.size();
    for (std::size_t j = 0; j < d; ++j) {
      KahanSum sum, sq;
      for (const ClassData* c : {&pos, &neg}) {
        for (std::size_t i = 0; i < c->size(); ++i) sum += c->point(i)[j];
      }
      const double mean = sum.value() / static_cast<double>(n);
      for (const ClassData* c : {&pos, &neg}) {
        for (std::size_t i = 0; i < c->size(); ++i) {
          const double t = c->point(i)[j] - mean;
          sq += t * t;
        }
      }
      const double sd = std::sqrt(sq.value() / static_cast<double>(n));
      if (sd > 0.0 && std::isfinite(sd)) fs.scale[j] = sd;
    }
    return fs;
  }

  [[nodiscard]] ClassData apply(const ClassData& c) const {
    ClassData out = c;
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = 0; j < out.dim; ++j) out.values[i * out.dim + j] /= scale[j];
    }
    return out;
  }

  [[nodiscard]] Vector to_scaled(std::span<const double> v) const {
    Vector out(v.begin(), v.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= scale[j];
    return normalized(out);
  }

  [[nodiscard]] Vector to_original(std::span<const double> v) const {
    Vector out(v.begin(), v.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] /= scale[j];
    return normalized(out);
  }
};

namespace detail {

inline OptResult ascend(const ProjectionObjective& objective, Vector v0, const OptOptions& opts) {
  OptResult r;
  r.v = std::move(v0);
  auto value_of = [&](std::span<const double> x) { return objective.value(x); };
  auto current = objective.evaluate(r.v);
  r.objective = current.value;
  r.trace.push_back(current.value);
  if (opts.record_path) r.path.push_back(r.v);

  double first_step = 1e-3;
  while (r.iterations < opts.max_iters) {
    const Vector h = tangent_component(r.v, current.gradient);
    if (norm(h) < opts.grad_tol) break;
    ++r.iterations;
    const double alpha = line_search(value_of, r.v, h, current.value, first_step);
    if (alpha == 0.0) break;
    first_step = 0.5 * alpha;
    Vector next_v = sphere_step(r.v, h, alpha);
    auto next = objective.evaluate(next_v);
    if (!(next.value > current.value)) break;
    const double gain = next.value - current.value;
    r.v = std::move(next_v);
    current = std::move(next);
    r.objective = current.value;
    r.trace.push_back(current.value);
    if (opts.record_path) r.path.push_back(r.v);
    if (gain <= opts.obj_tol * std::max(std::abs(current.value), DBL_MIN)) break;
  }
  return r;
}

}  // namespace detail

inline OptResult optimize(const ClassData& pos, const ClassData& neg, std::span<const double> v0,
                          const OptOptions& opts, std::string seed_label = "v0") {
  opts.validate();
  const ProjectionObjective objective(pos, neg, opts.gamma, opts.objective);
  if (v0.size() != objective.dim()) throw ArgumentError("optimize: starting vector has wrong dimension");
  Vector start;
  try {
    start = normalized(v0);
  } catch (const ArgumentError&) {
    throw ArgumentError("optimize: starting vector must be nonzero and finite");
  }
  OptResult r;
  if (!opts.standardize) {
    r = detail::ascend(objective, std::move(start), opts);
  } else {
    const auto fs = FeatureScaling::pooled(pos, neg);
    const ClassData spos = fs.apply(pos), sneg = fs.apply(neg);
    const ProjectionObjective scaled(spos, sneg, opts.gamma, opts.objective);
    r = detail::ascend(scaled, fs.to_scaled(start), opts);
    r.v = fs.to_original(r.v);
    r.objective = objective.value(r.v);
    for (auto& p : r.path) p = fs.to_original(p);
  }
  r.seed_label = std::move(seed_label);
  return r;
}

// Uniform point on S^{d-1}: normalized standard Gaussian vector.
inline Vector uniform_sphere_point(Rng& rng, std::size_t d) {
  Vector v(d);
  for (;;) {
    for (double& x : v) x = rng.normal();
    const double n = norm(v);
    if (n > 0.0) {
      for (double& x : v) x /= n;
      return v;
    }
  }
}

struct SeedVector {
  Vector v;
  std::string label;
};

// Runs optimize from each extra seed, then from opts.restarts random points,
// and keeps the best objective (earliest start wins ties).
inline OptResult multi_start(const ClassData& pos, const ClassData& neg, const OptOptions& opts,
                             const std::vector<SeedVector>& extra_seeds = {}) {
  opts.validate();
  std::vector<SeedVector> starts = extra_seeds;
  Rng rng(derive_seed(opts.seed, seed_stream::kRestarts));
  for (std::size_t i = 0; i < opts.restarts; ++i) {
    starts.push_back({uniform_sphere_point(rng, pos.dim), "random:" + std::to_string(i)});
  }
  if (starts.empty()) throw ArgumentError("multi_start: need at least one starting point");
  std::vector<OptResult> results(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    results[i] = optimize(pos, neg, starts[i].v, opts, starts[i].label);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].objective > results[best].objective) best = i;
  }
  return std::move(results[best]);
}

enum class SeedMethod { kMeanDifference, kPerceptron, kFile };

inline Vector mean_difference_seed(const ClassData& pos, const ClassData& neg) {
  Vector diff(pos.dim, 0.0);
  auto accumulate = [&](const ClassData& c, double sign) {
    KahanSum total;
    for (double w : c.weights) total += w;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto x = c.point(i);
      for (std::size_t j = 0; j < c.dim; ++j) diff[j] += sign * c.weights[i] * x[j] / total.value();
    }
  };
  accumulate(pos, 1.0);
  accumulate(neg, -1.0);
  if (!(norm(diff) > 0.0)) throw DataError("class means coincide; mean-difference seed undefined");
  return normalized(diff);
}

struct PerceptronResult {
  Vector weights;  // direction part only
  double bias = 0.0;
  std::size_t epochs = 0;
  std::size_t final_mistakes = 0;
};

// Mistake-driven perceptron with a bias input, learning rate 1, at most
// max_epochs passes in a freshly shuffled order.
inline PerceptronResult train_perceptron(const ClassData& pos, const ClassData& neg,
                                         std::uint64_t seed, std::size_t max_epochs = 1000) {
  if (pos.empty() || neg.empty()) throw DataError("perceptron seed needs both classes");
  const std::size_t d = pos.dim;
  std::vector<std::pair<const ClassData*, std::size_t>> order;
  for (std::size_t i = 0; i < pos.size(); ++i) order.emplace_back(&pos, i);
  for (std::size_t i = 0; i < neg.size(); ++i) order.emplace_back(&neg, i);
  Rng rng(derive_seed(seed, seed_stream::kPerceptron));
  PerceptronResult r;
  r.weights.assign(d, 0.0);
  for (r.epochs = 0; r.epochs < max_epochs;) {
    rng.shuffle(std::span(order));
    std::size_t mistakes = 0;
    for (const auto& [cls, i] : order) {
      const double y = cls == &pos ? 1.0 : -1.0;
      const auto x = cls->point(i);
      if (y * (dot(r.weights, x) + r.bias) <= 0.0) {
        ++mistakes;
        for (std::size_t j = 0; j < d; ++j) r.weights[j] += y * x[j];
        r.bias += y;
      }
    }
    ++r.epochs;
    r.final_mistakes = mistakes;
    if (mistakes == 0) break;
  }
  return r;
}

// One line of d whitespace-separated reals, returned normalized.
inline Vector read_seed_file(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read seed vector file '" + path + "'");
  std::string line;
  while (std::getline(in, line) && detail::trim(line).empty()) {
  }
  std::istringstream tokens(line);
  Vector v;
  std::string tok;
  while (tokens >> tok) {
    double x;
    if (!parse_real(tok, x) || !std::isfinite(x)) {
      throw DataError("seed vector file '" + path + "': bad value '" + tok + "'");
    }
    v.push_back(x);
  }
  if (v.size() != dim) {
    throw DataError("seed vector file '" + path + "' has " + std::to_string(v.size()) +
                    " values, expected " + std::to_string(dim));
  }
  if (!(norm(v) > 0.0)) throw DataError("seed vector file '" + path + "' holds a zero vector");
  return normalized(v);
}

inline Vector seed_vector(SeedMethod method, const ClassData& pos, const ClassData& neg,
                          const std::string& path = {}, std::uint64_t seed = 0) {
  switch (method) {
    case SeedMethod::kMeanDifference:
      return mean_difference_seed(pos, neg);
    case SeedMethod::kPerceptron: {
      const auto p = train_perceptron(pos, neg, seed);
      if (!(norm(p.weights) > 0.0)) throw DataError("perceptron produced a zero weight vector");
      return normalized(p.weights);
    }
    case SeedMethod::kFile:
      return read_seed_file(path, pos.dim);
  }
  throw ArgumentError("unknown seed method");
}

inline std::string seed_method_name(SeedMethod m) {
  switch (m) {
    case SeedMethod::kMeanDifference:
      return "mean_difference";
    case SeedMethod::kPerceptron:
      return "perceptron";
    case SeedMethod::kFile:
      return "file";
  }
  return "unknown";
}

}  // namespace melc

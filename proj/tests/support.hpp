#pragma once

// Shared helpers for the unit tests: synthetic data and independent
// numerical oracles. Nothing here calls into the density code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "melc/dataset.hpp"
#include "melc/random.hpp"

namespace melc::test {

inline ClassData gaussian_class(Rng& rng, std::size_t n, const Vector& mean, double stddev) {
  ClassData c;
  c.dim = mean.size();
  Vector x(mean.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = mean[j] + stddev * rng.normal();
    c.push_back(x);
  }
  return c;
}

inline ClassData random_class(Rng& rng, std::size_t n, std::size_t d, double shift = 0.0) {
  return gaussian_class(rng, n, Vector(d, shift), 1.0);
}

inline ClassData scaled(const ClassData& c, double alpha) {
  ClassData out = c;
  for (double& x : out.values) x *= alpha;
  return out;
}

inline ClassData translated(const ClassData& c, const Vector& shift) {
  ClassData out = c;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < out.dim; ++j) out.values[i * out.dim + j] += shift[j];
  }
  return out;
}

inline Vector random_unit(Rng& rng, std::size_t d) {
  Vector v(d);
  double n = 0.0;
  for (double& x : v) {
    x = rng.normal();
    n += x * x;
  }
  for (double& x : v) x /= std::sqrt(n);
  return v;
}

// Composite trapezoid rule on [lo, hi] with n intervals.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi,
                        std::size_t n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double s = 0.5 * (f(lo) + f(hi));
  for (std::size_t i = 1; i < n; ++i) s += f(lo + h * static_cast<double>(i));
  return s * h;
}

// Plain Gaussian-mixture density written independently of the library.
inline double mixture_density(const std::vector<double>& centers, double width, double x) {
  double s = 0.0;
  for (double c : centers) {
    const double z = (x - c) / width;
    s += std::exp(-0.5 * z * z) / (width * std::sqrt(2.0 * std::numbers::pi));
  }
  return s / static_cast<double>(centers.size());
}

// Silverman width recomputed from scratch (population variance).
inline double reference_silverman(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return std::pow(4.0 / 3.0, 0.2) * std::pow(static_cast<double>(xs.size()), -0.2) *
         std::sqrt(var);
}

// Four Gaussian blobs at (+-1, +-1); (1,1) and (-1,-1) are positive.
inline Dataset xor_dataset(Rng& rng, std::size_t per_blob = 100, double sigma = 0.3) {
  Dataset ds(2);
  const double centers[4][2] = {{1, 1}, {-1, -1}, {-1, 1}, {1, -1}};
  for (int g = 0; g < 4; ++g) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      const double x = centers[g][0] + sigma * rng.normal();
      const double y = centers[g][1] + sigma * rng.normal();
      ds.add(Vector{x, y}, g < 2 ? 1 : -1);
    }
  }
  return ds;
}

// Two anisotropic Gaussian classes in the first two coordinates plus
// standard-normal noise coordinates.
inline Dataset splice_like(Rng& rng, std::size_t per_class, double sep, std::size_t noise) {
  Dataset ds(2 + noise);
  Vector x(2 + noise);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int label : {1, -1}) {
      x[0] = label * sep + rng.normal(0, 0.6);
      x[1] = label * 0.5 * sep + rng.normal(0, 2.0);
      for (std::size_t j = 0; j < noise; ++j) x[2 + j] = rng.normal();
      ds.add(x, label);
    }
  }
  return ds;
}

}  // namespace melc::test

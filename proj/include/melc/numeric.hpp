#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "melc/error.hpp"

namespace melc {

using Vector = std::vector<double>;

// Neumaier variant of compensated summation.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  KahanSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ArgumentError("dot: dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

// Returns a / ||a||; throws on a zero or non-finite vector.
inline Vector normalized(std::span<const double> a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ArgumentError("cannot normalize a zero or non-finite vector");
  }
  Vector out(a.begin(), a.end());
  for (double& x : out) x /= n;
  return out;
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Shortest decimal string that parses back to the same double.
inline std::string format_real(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) throw ArgumentError("format_real: conversion failed");
  return std::string(buf, ptr);
}

// Strict full-token parse of a decimal real. Accepts a leading '+'.
inline bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace melc

#pragma once

// Line-oriented text model format:
//
//   melc-model v1
//   d <int>
//   gamma <real>
//   v <d reals>
//   width_pos <real>
//   width_neg <real>
//   proj_pos <n> <n reals>          optional, with proj_neg
//   proj_pos_weights <n> <n reals>  optional, only for non-unit weights
//   proj_neg <n> <n reals>
//   proj_neg_weights <n> <n reals>
//   thresholds <k> <k reals>        optional, with leftmost
//   leftmost <+1|-1>
//
// Reals are written as shortest round-trip decimals.

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "melc/classifier.hpp"
#include "melc/error.hpp"
#include "melc/numeric.hpp"

namespace melc {

inline constexpr const char* kModelHeader = "melc-model v1";

struct ModelFile {
  std::size_t dim = 0;
  double gamma = 1.0;
  Vector v;
  double width_pos = 1.0;
  double width_neg = 1.0;
  std::optional<Projection> proj_pos;
  std::optional<Projection> proj_neg;
  std::optional<std::vector<double>> thresholds;
  int leftmost_label = 1;

  [[nodiscard]] bool has_density() const { return proj_pos.has_value() && proj_neg.has_value(); }
  [[nodiscard]] bool has_thresholds() const { return thresholds.has_value(); }

  [[nodiscard]] ProjectionModel density_model() const {
    if (!has_density()) throw ModelFormatError("model file carries no training projections");
    return {v, gamma, width_pos, width_neg, *proj_pos, *proj_neg};
  }

  [[nodiscard]] ThresholdClassifier threshold_classifier() const {
    if (!has_thresholds()) throw ModelFormatError("model file carries no thresholds");
    return {v, *thresholds, leftmost_label};
  }
};

inline ModelFile make_model_file(const ProjectionModel& m, const ThresholdClassifier* tc,
                                 bool with_projections = true) {
  ModelFile f;
  f.dim = m.dim();
  f.gamma = m.gamma;
  f.v = m.v;
  f.width_pos = m.width_pos;
  f.width_neg = m.width_neg;
  if (with_projections) {
    f.proj_pos = m.proj_pos;
    f.proj_neg = m.proj_neg;
  }
  if (tc) {
    f.thresholds = tc->thresholds;
    f.leftmost_label = tc->leftmost_label;
  }
  return f;
}

namespace detail {

inline void write_list(std::ostream& out, const char* key, std::span<const double> xs,
                       bool with_count) {
  out << key;
  if (with_count) out << ' ' << xs.size();
  for (double x : xs) out << ' ' << format_real(x);
  out << '\n';
}

inline bool unit_weights(const Projection& p) {
  return std::all_of(p.weights.begin(), p.weights.end(), [](double w) { return w == 1.0; });
}

}  // namespace detail

inline void save_model(std::ostream& out, const ModelFile& f) {
  out << kModelHeader << '\n';
  out << "d " << f.dim << '\n';
  out << "gamma " << format_real(f.gamma) << '\n';
  detail::write_list(out, "v", f.v, false);
  out << "width_pos " << format_real(f.width_pos) << '\n';
  out << "width_neg " << format_real(f.width_neg) << '\n';
  if (f.has_density()) {
    detail::write_list(out, "proj_pos", f.proj_pos->samples, true);
    if (!detail::unit_weights(*f.proj_pos)) {
      detail::write_list(out, "proj_pos_weights", f.proj_pos->weights, true);
    }
    detail::write_list(out, "proj_neg", f.proj_neg->samples, true);
    if (!detail::unit_weights(*f.proj_neg)) {
      detail::write_list(out, "proj_neg_weights", f.proj_neg->weights, true);
    }
  }
  if (f.has_thresholds()) {
    detail::write_list(out, "thresholds", *f.thresholds, true);
    out << "leftmost " << (f.leftmost_label > 0 ? "+1" : "-1") << '\n';
  }
}

inline ModelFile load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ModelFormatError("empty model file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kModelHeader) {
    if (line.rfind("melc", 0) == 0) {
      throw ModelVersionError("unsupported model version '" + line + "' (expected '" +
                              kModelHeader + "')");
    }
    throw ModelFormatError("not a model file (missing '" + std::string(kModelHeader) + "' header)");
  }

  std::map<std::string, std::vector<std::string>> fields;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string key;
    if (!(tokens >> key)) continue;
    std::vector<std::string> values;
    for (std::string tok; tokens >> tok;) values.push_back(tok);
    if (!fields.emplace(key, std::move(values)).second) {
      throw ModelFormatError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  auto real = [](const std::string& key, const std::string& tok) {
    double x;
    if (!parse_real(tok, x)) throw ModelFormatError(key + ": bad number '" + tok + "'");
    if (!std::isfinite(x)) throw ModelFormatError(key + ": non-finite value");
    return x;
  };
  auto take = [&](const std::string& key) -> const std::vector<std::string>& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ModelFormatError("truncated model file: missing '" + key + "'");
    return it->second;
  };
  auto scalar = [&](const std::string& key) {
    const auto& vals = take(key);
    if (vals.size() != 1) throw ModelFormatError(key + ": expected one value");
    return real(key, vals[0]);
  };
  auto counted = [&](const std::string& key) {
    const auto& vals = take(key);
    std::size_t n = 0;
    if (vals.empty() || !std::all_of(vals[0].begin(), vals[0].end(), ::isdigit) ||
        vals[0].empty()) {
      throw ModelFormatError(key + ": missing count");
    }
    n = std::stoul(vals[0]);
    if (vals.size() != n + 1) {
      throw ModelFormatError("truncated model file: '" + key + "' lists " +
                             std::to_string(vals.size() - 1) + " of " + std::to_string(n) +
                             " values");
    }
    std::vector<double> xs;
    for (std::size_t i = 1; i < vals.size(); ++i) xs.push_back(real(key, vals[i]));
    return xs;
  };

  ModelFile f;
  {
    const double d = scalar("d");
    if (d < 1 || d != std::floor(d)) throw ModelFormatError("d: must be a positive integer");
    f.dim = static_cast<std::size_t>(d);
  }
  f.gamma = scalar("gamma");
  for (const auto& tok : take("v")) f.v.push_back(real("v", tok));
  if (f.v.size() != f.dim) throw ModelFormatError("v: expected " + std::to_string(f.dim) + " values");
  if (std::abs(norm(f.v) - 1.0) > 1e-9) throw ModelFormatError("v: not a unit vector");
  f.width_pos = scalar("width_pos");
  f.width_neg = scalar("width_neg");
  if (!(f.gamma > 0) || !(f.width_pos > 0) || !(f.width_neg > 0)) {
    throw ModelFormatError("gamma and widths must be positive");
  }

  const bool has_pos = fields.count("proj_pos"), has_neg = fields.count("proj_neg");
  if (has_pos != has_neg) throw ModelFormatError("truncated model file: projections incomplete");
  if (has_pos) {
    auto block = [&](const std::string& key) {
      Projection p;
      p.samples = counted(key);
      if (p.samples.empty()) throw ModelFormatError(key + ": empty projection");
      if (fields.count(key + "_weights")) {
        p.weights = counted(key + "_weights");
        if (p.weights.size() != p.samples.size()) throw ModelFormatError(key + "_weights: size mismatch");
        for (double w : p.weights) {
          if (!(w > 0)) throw ModelFormatError(key + "_weights: weights must be positive");
        }
      } else {
        p.weights.assign(p.samples.size(), 1.0);
      }
      return p;
    };
    f.proj_pos = block("proj_pos");
    f.proj_neg = block("proj_neg");
  }

  const bool has_t = fields.count("thresholds"), has_left = fields.count("leftmost");
  if (has_t != has_left) throw ModelFormatError("truncated model file: thresholds need 'leftmost'");
  if (has_t) {
    f.thresholds = counted("thresholds");
    for (std::size_t i = 1; i < f.thresholds->size(); ++i) {
      if (!((*f.thresholds)[i - 1] < (*f.thresholds)[i])) {
        throw ModelFormatError("thresholds: not strictly increasing");
      }
    }
    const auto& left = take("leftmost");
    if (left.size() != 1 || (left[0] != "+1" && left[0] != "-1" && left[0] != "1")) {
      throw ModelFormatError("leftmost: expected +1 or -1");
    }
    f.leftmost_label = left[0] == "-1" ? -1 : 1;
  }

  static const char* known[] = {"d",        "gamma",          "v",         "width_pos",
                                "width_neg", "proj_pos",      "proj_neg",  "proj_pos_weights",
                                "proj_neg_weights", "thresholds", "leftmost"};
  for (const auto& [key, _] : fields) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ModelFormatError("unknown key '" + key + "'");
    }
  }
  return f;
}

}  // namespace melc

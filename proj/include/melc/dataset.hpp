#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "melc/error.hpp"
#include "melc/numeric.hpp"
#include "melc/random.hpp"

namespace melc {

// Points of a single class, row-major, with per-point weights.
struct ClassData {
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
  [[nodiscard]] bool empty() const noexcept { return weights.empty(); }
  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }

  void push_back(std::span<const double> x, double w = 1.0) {
    if (x.size() != dim) throw ArgumentError("ClassData::push_back: dimension mismatch");
    values.insert(values.end(), x.begin(), x.end());
    weights.push_back(w);
  }

  static ClassData from_rows(const std::vector<Vector>& rows) {
    ClassData c;
    c.dim = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) c.push_back(r);
    return c;
  }
};

// Labeled points; labels are +1 / -1, weights strictly positive.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t dim) : dim_(dim) {}

  void add(std::span<const double> x, int label, double weight = 1.0) {
    if (x.size() != dim_) {
      throw DataError("point has dimension " + std::to_string(x.size()) + ", expected " +
                      std::to_string(dim_));
    }
    if (label != 1 && label != -1) throw DataError("label must be +1 or -1");
    if (!(weight > 0.0) || !std::isfinite(weight)) throw DataError("weights must be positive");
    values_.insert(values_.end(), x.begin(), x.end());
    labels_.push_back(label);
    weights_.push_back(weight);
  }

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] bool empty() const noexcept { return labels_.empty(); }
  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  [[nodiscard]] int label(std::size_t i) const { return labels_[i]; }
  [[nodiscard]] double weight(std::size_t i) const { return weights_[i]; }
  [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }

  [[nodiscard]] std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
  }

  [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out(dim_);
    for (std::size_t i : indices) out.add(point(i), labels_[i], weights_[i]);
    return out;
  }

  [[nodiscard]] ClassData class_data(int label) const {
    ClassData c;
    c.dim = dim_;
    for (std::size_t i = 0; i < size(); ++i) {
      if (labels_[i] == label) c.push_back(point(i), weights_[i]);
    }
    return c;
  }

  // Same points and labels, zero-padded to a larger dimension.
  [[nodiscard]] Dataset padded_to(std::size_t dim) const {
    if (dim < dim_) throw DataError("cannot shrink dataset dimension");
    Dataset out(dim);
    Vector x(dim, 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
      std::copy_n(point(i).begin(), dim_, x.begin());
      out.add(x, labels_[i], weights_[i]);
    }
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::vector<double> weights_;
};

struct LabelOptions {
  // Accept "0" as the negative label.
  bool zero_is_negative = false;
  // Explicit (positive, negative) label tokens; overrides numeric parsing.
  std::optional<std::pair<std::string, std::string>> mapping;
};

struct LibsvmOptions {
  LabelOptions labels;
  // Minimum dimension of the result; 0 infers it from the largest index.
  std::size_t dimension = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Typographic minus (U+2212) is read as ASCII '-'.
inline std::string normalize_minus(std::string_view s) {
  static constexpr std::string_view kMinus = "\xE2\x88\x92";
  std::string out(s);
  for (std::size_t pos = out.find(kMinus); pos != std::string::npos; pos = out.find(kMinus, pos)) {
    out.replace(pos, kMinus.size(), "-");
  }
  return out;
}

inline std::optional<int> parse_label(std::string_view raw, const LabelOptions& opts) {
  const std::string token = normalize_minus(trim(raw));
  if (opts.mapping) {
    if (token == opts.mapping->first) return 1;
    if (token == opts.mapping->second) return -1;
    return std::nullopt;
  }
  double value = 0.0;
  if (!parse_real(token, value)) return std::nullopt;
  if (value == 1.0) return 1;
  if (value == -1.0) return -1;
  if (value == 0.0 && opts.zero_is_negative) return -1;
  return std::nullopt;
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace detail

// "<label> <idx>:<val> ..." per line, 1-based strictly increasing indices.
inline Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {}) {
  struct Row {
    int label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = detail::trim(view.substr(0, hash));
    }
    if (view.empty()) continue;
    std::istringstream tokens{std::string(view)};
    std::string tok;
    tokens >> tok;
    const auto label = detail::parse_label(tok, opts.labels);
    if (!label) throw DataError(detail::at_line(line_no) + "label '" + tok + "' is not +1/-1");
    Row row{*label, {}};
    std::size_t last = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw DataError(detail::at_line(line_no) + "malformed feature '" + tok + "'");
      }
      const std::string idx_text = tok.substr(0, colon);
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc{} || p != idx_text.data() + idx_text.size() || idx == 0) {
        throw DataError(detail::at_line(line_no) + "bad feature index '" + idx_text + "'");
      }
      double value = 0.0;
      if (!parse_real(detail::normalize_minus(tok.substr(colon + 1)), value) ||
          !std::isfinite(value)) {
        throw DataError(detail::at_line(line_no) + "bad feature value in '" + tok + "'");
      }
      if (idx <= last) {
        throw DataError(detail::at_line(line_no) + "non-increasing index " + std::to_string(idx));
      }
      last = idx;
      row.entries.emplace_back(idx, value);
    }
    max_index = std::max(max_index, last);
    rows.push_back(std::move(row));
  }
  const std::size_t dim = std::max({max_index, opts.dimension, std::size_t{1}});
  Dataset ds(dim);
  Vector x(dim);
  for (const auto& row : rows) {
    std::fill(x.begin(), x.end(), 0.0);
    for (auto [idx, value] : row.entries) x[idx - 1] = value;
    ds.add(x, row.label);
  }
  return ds;
}

inline Dataset parse_libsvm(std::string_view text, const LibsvmOptions& opts = {}) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, opts);
}

inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << (ds.label(i) > 0 ? "+1" : "-1");
    const auto x = ds.point(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] != 0.0) out << ' ' << (j + 1) << ':' << format_real(x[j]);
    }
    out << '\n';
  }
}

enum class CsvHeader { kAuto, kPresent, kAbsent };

struct CsvOptions {
  LabelOptions labels;
  CsvHeader header = CsvHeader::kAuto;
  char delimiter = ',';
};

using LabelColumn = std::variant<std::size_t, std::string>;

// Rectangular numeric table; the label column is removed, the rest become
// features in file order.
inline Dataset parse_csv(std::istream& in, const LabelColumn& label_column,
                         const CsvOptions& opts = {}) {
  auto split = [&](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto pos = line.find(opts.delimiter, start);
      cells.push_back(detail::normalize_minus(
          detail::trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start))));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return cells;
  };

  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    rows.emplace_back(line_no, split(view));
  }
  if (rows.empty()) throw DataError("CSV input is empty");

  bool has_header = opts.header == CsvHeader::kPresent;
  if (opts.header == CsvHeader::kAuto) {
    // A header row is one whose feature cells are not all numeric.
    has_header = std::holds_alternative<std::string>(label_column);
    if (!has_header) {
      const auto label_idx = std::get<std::size_t>(label_column);
      for (std::size_t j = 0; j < rows.front().second.size(); ++j) {
        double v;
        if (j != label_idx && !parse_real(rows.front().second[j], v)) has_header = true;
      }
    }
  }

  const std::size_t width = rows.front().second.size();
  std::size_t label_idx = 0;
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    if (!has_header) throw DataError("label column '" + *name + "' requires a header row");
    const auto& header = rows.front().second;
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw DataError("missing label column '" + *name + "'");
    label_idx = static_cast<std::size_t>(it - header.begin());
  } else {
    label_idx = std::get<std::size_t>(label_column);
    if (label_idx >= width) {
      throw DataError("missing label column " + std::to_string(label_idx) + " (table has " +
                      std::to_string(width) + " columns)");
    }
  }
  if (width < 2) throw DataError("CSV needs at least one feature column");

  Dataset ds(width - 1);
  Vector x(width - 1);
  for (std::size_t r = has_header ? 1 : 0; r < rows.size(); ++r) {
    const auto& [no, cells] = rows[r];
    if (cells.size() != width) {
      throw DataError(detail::at_line(no) + "ragged row (" + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(width) + ")");
    }
    std::size_t k = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_idx) continue;
      if (!parse_real(cells[j], x[k]) || !std::isfinite(x[k])) {
        throw DataError(detail::at_line(no) + "non-numeric cell '" + cells[j] + "'");
      }
      ++k;
    }
    const auto label = detail::parse_label(cells[label_idx], opts.labels);
    if (!label) {
      throw DataError(detail::at_line(no) + "label '" + cells[label_idx] + "' is not +1/-1");
    }
    ds.add(x, *label);
  }
  return ds;
}

inline Dataset parse_csv(std::string_view text, const LabelColumn& label_column,
                         const CsvOptions& opts = {}) {
  std::istringstream in{std::string(text)};
  return parse_csv(in, label_column, opts);
}

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
};

// Each class is shuffled and dealt round-robin into k test folds; the deal
// continues across classes so fold sizes stay balanced overall.
inline SplitPlan stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("stratified_kfold: k must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.size(); ++i) (ds.label(i) > 0 ? pos : neg).push_back(i);
  if (k > ds.size()) {
    throw DataError("cannot make " + std::to_string(k) + " folds from " +
                    std::to_string(ds.size()) + " points");
  }
  Rng rng(derive_seed(seed, seed_stream::kFolds));
  rng.shuffle(std::span(pos));
  rng.shuffle(std::span(neg));

  SplitPlan plan;
  plan.seed = seed;
  plan.folds.resize(k);
  std::size_t slot = 0;
  for (const auto* members : {&pos, &neg}) {
    for (std::size_t i : *members) {
      plan.folds[slot].test.push_back(i);
      slot = (slot + 1) % k;
    }
  }
  std::vector<char> in_test(ds.size());
  for (auto& fold : plan.folds) {
    std::sort(fold.test.begin(), fold.test.end());
    std::fill(in_test.begin(), in_test.end(), 0);
    for (std::size_t i : fold.test) in_test[i] = 1;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!in_test[i]) fold.train.push_back(i);
    }
  }
  return plan;
}

// x -> A x + b for every point; A is given by rows.
inline Dataset affine_transform(const Dataset& ds, const std::vector<Vector>& a,
                                std::span<const double> b) {
  const std::size_t d = ds.dim();
  if (a.size() != d || b.size() != d) throw ArgumentError("affine_transform: dimension mismatch");
  for (const auto& row : a) {
    if (row.size() != d) throw ArgumentError("affine_transform: dimension mismatch");
  }
  Dataset out(d);
  Vector y(d);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.point(i);
    for (std::size_t r = 0; r < d; ++r) y[r] = dot(a[r], x) + b[r];
    out.add(y, ds.label(i), ds.weight(i));
  }
  return out;
}

}  // namespace melc

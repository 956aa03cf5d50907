#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "melc/melc.hpp"

namespace {

using namespace melc;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct DataArgs {
  std::string path;
  std::string format;  // empty: guess from the extension
  std::string label_column = "0";
  bool zero_negative = false;
};

void add_data_options(CLI::App* app, DataArgs& d, bool required = true) {
  auto* opt = app->add_option("--data", d.path, "input file (libsvm or csv)");
  if (required) opt->required();
  app->add_option("--format", d.format, "libsvm or csv (default: by extension)")
      ->check(CLI::IsMember({"libsvm", "csv"}));
  app->add_option("--label-column", d.label_column, "csv label column, index or header name")
      ->capture_default_str();
  app->add_flag("--zero-negative", d.zero_negative, "treat label 0 as the negative class");
}

Dataset load_data(const DataArgs& d, std::size_t min_dim = 0) {
  std::ifstream in(d.path);
  if (!in) throw DataError("cannot open " + d.path);
  std::string format = d.format;
  if (format.empty()) {
    const bool csv = d.path.size() >= 4 && d.path.compare(d.path.size() - 4, 4, ".csv") == 0;
    format = csv ? "csv" : "libsvm";
  }
  LabelOptions labels;
  labels.zero_is_negative = d.zero_negative;
  try {
    if (format == "libsvm") {
      LibsvmOptions opts;
      opts.labels = labels;
      opts.dimension = min_dim;
      return parse_libsvm(in, opts);
    }
    CsvOptions opts;
    opts.labels = labels;
    LabelColumn col = d.label_column;
    if (!d.label_column.empty() &&
        std::all_of(d.label_column.begin(), d.label_column.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      col = static_cast<std::size_t>(std::stoull(d.label_column));
    }
    Dataset ds = parse_csv(in, col, opts);
    return ds.dim() < min_dim ? ds.padded_to(min_dim) : ds;
  } catch (const DataError& e) {
    throw DataError(d.path + ": " + e.what());
  }
}

struct FitArgs {
  double gamma = 1.0;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  std::size_t max_iters = 200;
  bool cip_only = false;
  std::string seed_method = "mean";
  std::string seed_file;
  std::size_t binsearch_iters = 5;
};

void add_fit_options(CLI::App* app, FitArgs& f, bool with_gamma) {
  if (with_gamma) {
    app->add_option("--gamma", f.gamma, "kernel width multiplier")->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
  app->add_option("--restarts", f.restarts, "random restarts")->capture_default_str();
  app->add_option("--seed", f.seed, "random seed")->capture_default_str();
  app->add_option("--max-iters", f.max_iters, "ascent iterations per start")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app->add_flag("--cip-only", f.cip_only, "maximize -log cip(+,-) without the entropy terms");
  app->add_option("--seed-method", f.seed_method, "extra starting vector")
      ->capture_default_str()->check(CLI::IsMember({"mean", "perceptron", "file", "none"}));
  app->add_option("--seed-file", f.seed_file, "starting vector file (implies --seed-method file)");
  app->add_option("--binsearch-iters", f.binsearch_iters, "bisection steps per threshold")
      ->capture_default_str()->check(CLI::PositiveNumber);
}

OptOptions opt_options(const FitArgs& f) {
  OptOptions o;
  o.gamma = f.gamma;
  o.restarts = f.restarts;
  o.seed = f.seed;
  o.max_iters = f.max_iters;
  o.objective = f.cip_only ? Objective::kCrossPotential : Objective::kDivergence;
  return o;
}

std::vector<SeedMethod> seed_methods(const FitArgs& f) {
  if (!f.seed_file.empty() || f.seed_method == "file") {
    if (f.seed_file.empty()) throw ArgumentError("--seed-method file needs --seed-file");
    return {SeedMethod::kFile};
  }
  if (f.seed_method == "mean") return {SeedMethod::kMeanDifference};
  if (f.seed_method == "perceptron") return {SeedMethod::kPerceptron};
  return {};
}

std::vector<double> parse_gammas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double g = 0.0;
    if (!parse_real(detail::trim(tok), g) || !(g > 0.0) || !std::isfinite(g)) {
      throw ArgumentError("bad gamma value '" + tok + "'");
    }
    out.push_back(g);
  }
  if (out.empty()) throw ArgumentError("empty gamma list");
  return out;
}

ModelFile read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return load_model(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Output goes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw DataError("cannot write " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int run_train(const DataArgs& data, const FitArgs& fa, const std::string& out_path,
              bool thresholds_only) {
  const Dataset ds = load_data(data);
  const ClassData pos = ds.class_data(1), neg = ds.class_data(-1);
  const OptOptions opts = opt_options(fa);
  const auto seeds = build_seeds(seed_methods(fa), pos, neg, fa.seed_file, derive_seed(fa.seed, 1));
  const auto fitted = fit_detailed(pos, neg, opts, seeds);
  const auto tc = extract_thresholds(fitted.model, fa.binsearch_iters);
  {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    save_model(out, make_model_file(fitted.model, &tc, !thresholds_only));
  }
  std::cout << "dcs\t" << format_real(dcs(fitted.model.v, pos, neg, fa.gamma)) << '\n';
  std::cout << "k\t" << tc.k() << '\n';
  std::cout << "iterations\t" << fitted.optimization.iterations << '\n';
  std::cout << "start\t" << fitted.optimization.seed_label << '\n';
  return 0;
}

int run_predict(const DataArgs& data, const std::string& model_path, bool use_thresholds,
                const std::string& out_path) {
  const ModelFile mf = read_model(model_path);
  const Dataset ds = load_data(data, mf.dim);
  if (ds.dim() > mf.dim) {
    throw DataError("incompatible model dimension: data has " + std::to_string(ds.dim()) +
                    " features, model expects " + std::to_string(mf.dim));
  }
  Sink sink(out_path);
  auto& out = sink.get();
  if (use_thresholds || !mf.has_density()) {
    const auto tc = mf.threshold_classifier();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      out << (classify_thresholds(tc, ds.point(i)) > 0 ? "+1" : "-1") << "\t-\n";
    }
    return 0;
  }
  const auto m = mf.density_model();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto p = classify_density(m, ds.point(i));
    out << (p.label > 0 ? "+1" : "-1") << '\t' << format_real(p.likelihood) << '\n';
  }
  return 0;
}

int run_eval(const DataArgs& data, const FitArgs& fa, std::size_t folds, const std::string& gammas,
             const std::string& select, const std::string& out_path) {
  const Dataset ds = load_data(data);
  CvOptions cv;
  cv.opt = opt_options(fa);
  cv.seeds = seed_methods(fa);
  cv.seed_file = fa.seed_file;
  cv.binsearch_iters = fa.binsearch_iters;
  cv.select = select == "mcc" ? SelectionMetric::kMcc : SelectionMetric::kWac;
  const auto plan = stratified_kfold(ds, folds, fa.seed);
  const auto report = cross_validate(ds, plan, parse_gammas(gammas), cv);
  Sink sink(out_path);
  write_cv_report(sink.get(), report);
  return 0;
}

int run_thresholds(const std::string& model_path, std::size_t iters, bool iters_given) {
  const ModelFile mf = read_model(model_path);
  ThresholdClassifier tc;
  if (mf.has_density() && (iters_given || !mf.has_thresholds())) {
    tc = extract_thresholds(mf.density_model(), iters);
  } else {
    tc = mf.threshold_classifier();
  }
  std::cout << "k\t" << tc.k() << '\n';
  std::cout << "leftmost\t" << (tc.leftmost_label > 0 ? "+1" : "-1") << '\n';
  for (double t : tc.thresholds) std::cout << format_real(t) << '\n';
  return 0;
}

int run_density_curve(const std::string& model_path, std::optional<double> lo,
                      std::optional<double> hi, std::size_t points, const std::string& out_path) {
  const auto m = read_model(model_path).density_model();
  double a = 0.0, b = 0.0;
  {
    auto lo_hi = [](const Projection& p) {
      const auto [mn_it, mx_it] = std::minmax_element(p.samples.begin(), p.samples.end());
      return std::pair{*mn_it, *mx_it};
    };
    const auto [pl, ph] = lo_hi(m.proj_pos);
    const auto [nl, nh] = lo_hi(m.proj_neg);
    const double pad = 3.0 * std::max(m.width_pos, m.width_neg);
    a = std::min(pl, nl) - pad;
    b = std::max(ph, nh) + pad;
  }
  if (lo) a = *lo;
  if (hi) b = *hi;
  if (!(a < b)) throw ArgumentError("density-curve: need lo < hi");
  Sink sink(out_path);
  write_density_curve(sink.get(), density_curve(m, a, b, points));
  return 0;
}

int run_gradcheck(const DataArgs& data, double gamma, std::uint64_t seed, std::size_t trials,
                  double h) {
  const Dataset ds = load_data(data);
  const ClassData pos = ds.class_data(1), neg = ds.class_data(-1);
  Rng rng(derive_seed(seed, seed_stream::kRestarts));
  std::cout << "trial\tdcs\tmax_rel_error\n";
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Vector v = uniform_sphere_point(rng, ds.dim());
    const auto rep = finite_diff_check(v, pos, neg, gamma, h);
    worst = std::max(worst, rep.max_rel_error);
    std::cout << t << '\t' << format_real(dcs(v, pos, neg, gamma)) << '\t'
              << format_real(rep.max_rel_error) << '\n';
  }
  std::cout << "max\t-\t" << format_real(worst) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multithreshold entropy linear classifier"};
  app.require_subcommand(1);

  DataArgs data;
  FitArgs fit_args;
  std::string out_path, model_path;

  auto* train = app.add_subcommand("train", "fit a model and save it");
  add_data_options(train, data);
  add_fit_options(train, fit_args, true);
  train->add_option("--out", out_path, "model file")->required();
  bool thresholds_only = false;
  train->add_flag("--thresholds-only", thresholds_only, "store only v and the thresholds");

  auto* predict = app.add_subcommand("predict", "label points with a saved model");
  add_data_options(predict, data);
  predict->add_option("--model", model_path, "model file")->required();
  bool use_thresholds = false;
  predict->add_flag("--thresholds", use_thresholds, "use the threshold classifier");
  predict->add_option("--out", out_path, "output file (default stdout)");

  auto* eval = app.add_subcommand("eval", "stratified cross-validation over a gamma grid");
  add_data_options(eval, data);
  add_fit_options(eval, fit_args, false);
  std::size_t folds = 10;
  std::string gammas = "0.25,0.5,0.75,1,1.25,1.5,2,2.9,4";
  std::string select = "wac";
  eval->add_option("--folds", folds, "number of folds")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  eval->add_option("--gammas", gammas, "comma separated gamma grid")->capture_default_str();
  eval->add_option("--select", select, "gamma selection metric")->capture_default_str()
      ->check(CLI::IsMember({"wac", "mcc"}));
  eval->add_option("--out", out_path, "report file (default stdout)");
  eval->footer(
      "Report columns: row gamma fold acc mcc wac k dcs_train n_test disagree.\n"
      "row is fold, mean, std or selected. k is the threshold count, dcs_train the\n"
      "training objective, disagree the test points where thresholds and densities differ.");

  auto* thresholds = app.add_subcommand("thresholds", "print the thresholds of a model");
  thresholds->add_option("--model", model_path, "model file")->required();
  std::size_t th_iters = 5;
  auto* iters_opt = thresholds->add_option("--binsearch-iters", th_iters,
                                           "re-extract with this many bisection steps");
  iters_opt->check(CLI::PositiveNumber);

  auto* curve = app.add_subcommand("density-curve", "tabulate both class densities");
  curve->add_option("--model", model_path, "model file")->required();
  std::optional<double> lo, hi;
  std::size_t points = 200;
  curve->add_option("--lo", lo, "left end");
  curve->add_option("--hi", hi, "right end");
  curve->add_option("--points", points, "grid size")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{10000000}));
  curve->add_option("--out", out_path, "output file (default stdout)");

  auto* gradcheck = app.add_subcommand("gradcheck", "compare the gradient with finite differences");
  add_data_options(gradcheck, data);
  double gc_gamma = 1.0, gc_h = 1e-6;
  std::uint64_t gc_seed = 0;
  std::size_t gc_trials = 5;
  gradcheck->add_option("--gamma", gc_gamma)->capture_default_str()->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed)->capture_default_str();
  gradcheck->add_option("--trials", gc_trials)->capture_default_str();
  gradcheck->add_option("--step", gc_h, "central difference step")->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* bound = app.add_subcommand("bound", "generalization bound for a k-threshold classifier");
  std::uint64_t b_n = 0, b_d = 0, b_k = 1;
  double b_delta = 0.05, b_emp = 0.0;
  std::optional<double> b_margin;
  bound->add_option("--n", b_n, "training set size")->required();
  auto* d_opt = bound->add_option("--d", b_d, "input dimension");
  bound->add_option("--k", b_k, "threshold count")->capture_default_str();
  bound->add_option("--delta", b_delta, "confidence parameter")->capture_default_str();
  bound->add_option("--emp", b_emp, "empirical error")->capture_default_str();
  auto* m_opt = bound->add_option("--margin", b_margin, "margin in (0, 1], unit-ball data");
  d_opt->excludes(m_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return run_train(data, fit_args, out_path, thresholds_only);
    if (*predict) return run_predict(data, model_path, use_thresholds, out_path);
    if (*eval) return run_eval(data, fit_args, folds, gammas, select, out_path);
    if (*thresholds) return run_thresholds(model_path, th_iters, iters_opt->count() > 0);
    if (*curve) return run_density_curve(model_path, lo, hi, points, out_path);
    if (*gradcheck) return run_gradcheck(data, gc_gamma, gc_seed, gc_trials, gc_h);
    if (*bound) {
      if (b_margin) {
        std::cout << format_real(anthony_margin_bound(b_n, *b_margin, b_k, b_delta, b_emp)) << '\n';
      } else {
        if (d_opt->count() == 0) throw ArgumentError("bound: give --d or --margin");
        std::cout << format_real(anthony_bound(b_n, b_d, b_k, b_delta, b_emp)) << '\n';
      }
      return 0;
    }
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

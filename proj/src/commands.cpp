#include "gods/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gods/data_io.hpp"
#include "gods/experiments.hpp"
#include "gods/inference.hpp"
#include "gods/model_io.hpp"

namespace gods {

namespace {

using Json = nlohmann::ordered_json;

struct DataFlags {
  std::string label_column;  ///< index or header name; empty means no labels
  bool header = false;
  std::string delimiter = ",";
  std::string target;
};

void add_data_flags(CLI::App* cmd, DataFlags& f, bool labels_default_last) {
  if (labels_default_last) f.label_column = "-1";
  auto* opt = cmd->add_option("--label-column", f.label_column,
                              "Label column: index (negative counts from the end) or header name");
  if (labels_default_last) opt->capture_default_str();
  cmd->add_flag("--header", f.header, "First line is a header");
  cmd->add_option("--delimiter", f.delimiter, "Field delimiter")->capture_default_str();
}

Dataset load_data(const std::string& path, const DataFlags& f) {
  if (f.delimiter.size() != 1) throw Error(ErrorCode::Domain, "--delimiter must be one character");
  CsvOptions o;
  o.delimiter = f.delimiter[0];
  o.header = f.header;
  if (!f.label_column.empty()) {
    int idx = 0;
    const char* end = f.label_column.data() + f.label_column.size();
    const auto [ptr, ec] = std::from_chars(f.label_column.data(), end, idx);
    if (ec == std::errc() && ptr == end) o.label_column = idx;
    else o.label_column = f.label_column;
  }
  return load_csv(path, o);
}

std::vector<Label> truth_labels(const Dataset& ds, const std::string& target) {
  if (!ds.has_labels()) throw Error(ErrorCode::Schema, ds.source + ": no label column");
  std::vector<Label> out;
  for (const auto& l : ds.labels) out.push_back(l == target ? Label::InClass : Label::Anomaly);
  return out;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json report_json(const EvalReport& r) {
  return Json{{"accuracy", optional_json(r.accuracy)},
              {"f1", optional_json(r.f1)},
              {"f1bar", optional_json(r.f1bar)},
              {"tnr", optional_json(r.tnr)},
              {"npv", optional_json(r.npv)},
              {"auc", optional_json(r.auc)},
              {"far", optional_json(r.far)},
              {"threshold", r.threshold},
              {"confusion",
               {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failure on '" + path + "'");
}

// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string data;
  DataFlags io;
  std::string variant = "gods";
  std::string kernel = "rbf";
  double sigma = 0.1;
  int degree = 3;
  double offset = 1.0;
  std::optional<int> k;
  double eta = 0.3, nu = 1.0, lambda = 1.0, p_norm = 1.0;
  std::uint64_t seed = 0;
  bool no_normalize = false;
  int max_iters = 500;
  std::string out = "model.json";
  std::string report;
};

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  Dataset ds = load_data(f.data, f.io);
  Matrix X = ds.features;
  if (!f.io.target.empty()) {
    if (!ds.has_labels()) throw Error(ErrorCode::Schema, "--target needs a label column");
    std::vector<Index> keep;
    for (Index i = 0; i < ds.rows(); ++i)
      if (ds.labels[static_cast<std::size_t>(i)] == f.io.target) keep.push_back(i);
    if (keep.empty()) throw Error(ErrorCode::EmptyData, "no rows with label '" + f.io.target + "'");
    X = ds.features(keep, Eigen::all);
  }
  SolverConfig cfg;
  cfg.max_iters = f.max_iters;

  ModelFile file;
  file.fingerprint = {f.seed, data_hash(X)};
  SolveReport report;
  Json extra;
  if (f.variant == "kods") {
    KodsHyper h;
    h.k = f.k.value_or(3);
    h.eta = f.eta;
    h.lambda = f.lambda;
    h.normalize = !f.no_normalize;
    KernelSpec kernel;
    kernel.family = kernel_family_from_string(f.kernel);
    kernel.sigma = f.sigma;
    kernel.degree = f.degree;
    kernel.offset = f.offset;
    KodsTrainResult r = kods_train(X, kernel, h, cfg, f.seed);
    extra = Json{{"jitter", r.model.jitter},
                 {"feasibility_y", r.feasibility_y},
                 {"feasibility_z", r.feasibility_z},
                 {"zero_rows", r.zero_rows}};
    if (r.zero_rows) err << "warning: " << r.zero_rows << " zero rows left unnormalized\n";
    report = std::move(r.report);
    file.model = std::move(r.model);
  } else {
    GodsHyper h;
    h.variant = variant_from_string(f.variant);
    h.k = f.k.value_or(h.variant == Variant::Bods ? 1 : 3);
    h.eta = f.eta;
    h.nu = f.nu;
    h.lambda = f.lambda;
    h.p_norm = f.p_norm;
    h.normalize = !f.no_normalize;
    PrimalTrainResult r = train_primal(X, h, cfg, f.seed);
    extra = Json{{"random_init", r.random_fallback}, {"zero_rows", r.zero_rows}};
    if (r.zero_rows) err << "warning: " << r.zero_rows << " zero rows left unnormalized\n";
    if (r.random_fallback) err << "warning: fewer than 3k samples, frames initialized at random\n";
    report = std::move(r.report);
    file.model = std::move(r.model);
  }
  save_model(f.out, file);

  if (report.status == SolveStatus::Stalled)
    err << "warning: line search stalled after " << report.iterations << " iterations\n";
  Json rep{{"variant", file.variant_name()},
           {"model", f.out},
           {"iterations", report.iterations},
           {"status", to_string(report.status)},
           {"converged", report.converged},
           {"final_objective", report.objective_trace.back()},
           {"final_grad_norm", report.grad_norm_trace.back()},
           {"wall_time", report.wall_time},
           {"objective_trace", report.objective_trace},
           {"grad_norm_trace", report.grad_norm_trace}};
  for (auto it = extra.begin(); it != extra.end(); ++it) rep[it.key()] = it.value();
  if (!f.report.empty()) write_text(f.report, rep.dump(2) + "\n");
  out << "trained " << file.variant_name() << " on " << X.rows() << " x " << X.cols() << ": "
      << report.iterations << " iterations, " << to_string(report.status) << ", objective "
      << std::setprecision(10) << report.objective_trace.back() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ScoreFlags {
  std::string model, data;
  DataFlags io;
  std::string out, roc;
};

int cmd_predict(const ScoreFlags& f, std::ostream& out) {
  const ModelFile model = load_model(f.model);
  const Dataset ds = load_data(f.data, f.io);
  const double eta = model.eta_effective();
  std::ostringstream csv;
  csv << std::setprecision(17) << "s1,s2,anomaly_score,label\n";
  for (Index i = 0; i < ds.rows(); ++i) {
    const ScorePair s = model_scores(model, ds.features.row(i).transpose());
    csv << s.s1 << ',' << s.s2 << ',' << anomaly_score(s.s1, s.s2, eta) << ','
        << to_string(classify(s.s1, s.s2, eta)) << '\n';
  }
  if (f.out.empty()) out << csv.str();
  else write_text(f.out, csv.str());
  return kExitOk;
}

int cmd_eval(const ScoreFlags& f, std::ostream& out) {
  const ModelFile model = load_model(f.model);
  const Dataset ds = load_data(f.data, f.io);
  const std::vector<Label> truth = truth_labels(ds, f.io.target);
  const double eta = model.eta_effective();
  std::vector<Label> pred;
  std::vector<double> scores;
  for (Index i = 0; i < ds.rows(); ++i) {
    const ScorePair s = model_scores(model, ds.features.row(i).transpose());
    pred.push_back(classify(s.s1, s.s2, eta));
    scores.push_back(anomaly_score(s.s1, s.s2, eta));
  }
  EvalReport r = compute_metrics(pred, truth, scores);
  r.threshold = eta;
  Json doc{{"model", f.model}, {"data", f.data}, {"variant", model.variant_name()},
           {"samples", ds.rows()}};
  const Json metrics = report_json(r);
  for (auto it = metrics.begin(); it != metrics.end(); ++it) doc[it.key()] = it.value();
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!f.out.empty()) write_text(f.out, text);
  if (!f.roc.empty()) {
    std::ostringstream csv;
    csv << std::setprecision(17) << "threshold,fpr,tpr\n";
    for (const RocPoint& p : roc_curve(truth, scores))
      csv << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
    write_text(f.roc, csv.str());
  }
  return kExitOk;
}

int cmd_calibrate(const ScoreFlags& f, std::ostream& out, std::ostream& err) {
  if (f.out.empty()) throw Error(ErrorCode::Domain, "calibrate: --out is required");
  if (f.out == f.model) throw Error(ErrorCode::Domain, "calibrate: --out must differ from the input model");
  ModelFile model = load_model(f.model);
  const Dataset ds = load_data(f.data, f.io);
  const std::vector<Label> truth = truth_labels(ds, f.io.target);
  const bool has_in = std::count(truth.begin(), truth.end(), Label::InClass) > 0;
  const bool has_out = std::count(truth.begin(), truth.end(), Label::Anomaly) > 0;
  if (!has_in || !has_out)
    throw Error(ErrorCode::Schema, "calibrate: validation data needs both in-class and anomalous rows");
  std::vector<double> vl, vu;
  for (Index i = 0; i < ds.rows(); ++i) {
    const ScorePair s = model_scores(model, ds.features.row(i).transpose());
    vl.push_back(s.s1);
    vu.push_back(s.s2);
  }
  const double eta = model.eta_effective();
  const Calibration c = calibrate_eta(vl, vu, eta);
  if (c.status == CalibrationStatus::Degenerate)
    err << "warning: degenerate clustering, eta left at " << eta << "\n";
  if (c.status == CalibrationStatus::Clamped)
    err << "warning: calibrated eta clamped to " << c.eta_prime << "\n";
  model.set_eta_effective(c.eta_prime);
  model.calibration = c;
  save_model(f.out, model);
  out << std::setprecision(17) << "eta " << eta << " -> " << c.eta_prime << " (delta " << c.delta
      << ", " << to_string(c.status) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  std::string kind;
  long n = 100;
  long d = 2;
  std::vector<double> mean;
  double stddev = 1.0;
  double r_in = 0.7, r_out = 1.0, half_height = 0.15;
  std::uint64_t seed = 0;
  std::string out;
  std::string label;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  SynthParams p;
  p.kind = synth_kind_from_string(f.kind);
  p.n = f.n;
  p.d = f.d;
  if (!f.mean.empty()) p.mean = Eigen::Map<const Vector>(f.mean.data(), static_cast<Index>(f.mean.size()));
  if (!(f.stddev > 0)) throw Error(ErrorCode::Domain, "synth: --std must be > 0");
  if (f.stddev != 1.0) p.cov = Matrix::Identity(p.d, p.d) * (f.stddev * f.stddev);
  p.r_in = f.r_in;
  p.r_out = f.r_out;
  p.half_height = f.half_height;
  Dataset ds = synth(p, f.seed);
  if (!f.label.empty()) ds.labels.assign(static_cast<std::size_t>(ds.rows()), f.label);
  write_csv(f.out, ds);
  out << "wrote " << ds.rows() << " x " << ds.dim() << " " << f.kind << " samples to " << f.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GradcheckFlags {
  std::string variant = "all";
  std::uint64_t seed = 0;
  int points = 20;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out) {
  std::optional<std::string> only;
  if (f.variant != "all") only = f.variant == "kods" ? "kods" : to_string(variant_from_string(f.variant));
  const auto entries = run_gradchecks(f.seed, f.points, f.corrupt, only);
  bool ok = true;
  for (const auto& e : entries) {
    out << std::left << std::setw(8) << e.name << " max_rel_error " << std::scientific
        << std::setprecision(3) << e.max_rel_error << std::defaultfloat << " over " << e.points
        << " points  " << (e.pass ? "PASS" : "FAIL") << "\n";
    ok = ok && e.pass;
  }
  out << entries.size() << " objectives checked, tolerance " << kGradcheckTolerance << ": "
      << (ok ? "all pass" : "FAILED") << "\n";
  return ok ? kExitOk : kExitNumeric;
}

struct BenchFlags {
  std::string config = "data/uci";
  int seeds = 5;
  int max_iters = 500;
  std::string out;
};

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  BenchOptions o;
  o.seeds = f.seeds;
  o.solver.max_iters = f.max_iters;
  const auto rows = bench_uci(f.config, o);
  for (const auto& r : rows)
    if (!r.present) err << "notice: " << r.dataset.name << " " << r.notice << "\n";
  out << format_bench_table(rows);
  if (!f.out.empty()) {
    Json doc = Json::array();
    for (const auto& r : rows) {
      Json row{{"dataset", r.dataset.name}, {"target", r.dataset.target}, {"present", r.present}};
      if (!r.present) {
        row["notice"] = r.notice;
      } else {
        auto stats = [](const MethodStats& s) {
          Json auc = Json::array();
          for (double a : s.auc) auc.push_back(std::isfinite(a) ? Json(a) : Json(nullptr));
          return Json{{"mean_f1", s.mean_f1}, {"std_f1", s.std_f1}, {"f1", s.f1}, {"auc", auc}};
        };
        row["samples"] = r.rows;
        row["dim"] = r.dim;
        row["gods"] = stats(r.gods);
        row["kods"] = stats(r.kods);
        row["max_kods_feasibility"] = r.max_kods_feasibility;
      }
      doc.push_back(std::move(row));
    }
    write_text(f.out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"One-class subspace classifiers: train, score, evaluate, calibrate, benchmark"};
  app.name("gods");
  app.require_subcommand(1);

  TrainFlags train;
  auto* t = app.add_subcommand("train", "Train a model on a CSV file");
  t->add_option("data", train.data, "Training CSV")->required();
  add_data_flags(t, train.io, false);
  t->add_option("--target", train.io.target, "Train only on rows with this label");
  t->add_option("--variant", train.variant, "bods | gods | gods_n | gods_o | gods_e | kods")
      ->capture_default_str();
  t->add_option("--kernel", train.kernel, "KODS kernel: linear | rbf | polynomial | chi-square | hik")
      ->capture_default_str();
  t->add_option("--sigma", train.sigma, "RBF bandwidth")->capture_default_str();
  t->add_option("--degree", train.degree, "Polynomial degree")->capture_default_str();
  t->add_option("--offset", train.offset, "Polynomial offset")->capture_default_str();
  t->add_option("--k", train.k, "Hyperplanes per frame (default 3, 1 for bods)");
  t->add_option("--eta", train.eta, "Margin")->capture_default_str();
  t->add_option("--nu", train.nu, "Hinge penalty")->capture_default_str();
  t->add_option("--lambda", train.lambda, "Regularizer weight")->capture_default_str();
  t->add_option("--p-norm", train.p_norm, "Scale penalty norm for gods_n")->capture_default_str();
  t->add_option("--seed", train.seed, "Seed")->capture_default_str();
  t->add_flag("--no-normalize", train.no_normalize, "Skip l2 row normalization");
  t->add_option("--max-iters", train.max_iters, "Solver iteration cap")->capture_default_str();
  t->add_option("--out", train.out, "Model file")->capture_default_str();
  t->add_option("--report", train.report, "Run report (JSON)");

  ScoreFlags predict;
  auto* p = app.add_subcommand("predict", "Score and classify every row of a CSV file");
  p->add_option("model", predict.model, "Model file")->required();
  p->add_option("data", predict.data, "CSV file")->required();
  add_data_flags(p, predict.io, false);
  p->add_option("--out", predict.out, "Output CSV (default stdout)");

  ScoreFlags eval;
  eval.io.target = "in";
  auto* e = app.add_subcommand("eval", "Evaluate a model on labelled data");
  e->add_option("model", eval.model, "Model file")->required();
  e->add_option("data", eval.data, "Labelled CSV file")->required();
  add_data_flags(e, eval.io, true);
  e->add_option("--target", eval.io.target, "Label of the in-class rows")->capture_default_str();
  e->add_option("--out", eval.out, "Also write the report here");
  e->add_option("--roc", eval.roc, "Write ROC points (CSV)");

  ScoreFlags calib;
  calib.io.target = "in";
  auto* c = app.add_subcommand("calibrate", "Recalibrate eta on labelled validation data");
  c->add_option("model", calib.model, "Model file")->required();
  c->add_option("data", calib.data, "Labelled validation CSV")->required();
  add_data_flags(c, calib.io, true);
  c->add_option("--target", calib.io.target, "Label of the in-class rows")->capture_default_str();
  c->add_option("--out", calib.out, "Calibrated model file")->required();

  SynthFlags syn;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  s->add_option("kind", syn.kind, "gaussian | arbitrary | ring | ring3d")->required();
  s->add_option("--n", syn.n, "Samples")->capture_default_str();
  s->add_option("--d", syn.d, "Dimension (gaussian)")->capture_default_str();
  s->add_option("--mean", syn.mean, "Mean vector (gaussian)")->delimiter(',');
  s->add_option("--std", syn.stddev, "Isotropic standard deviation (gaussian)")->capture_default_str();
  s->add_option("--r-in", syn.r_in, "Inner radius (ring)")->capture_default_str();
  s->add_option("--r-out", syn.r_out, "Outer radius (ring)")->capture_default_str();
  s->add_option("--half-height", syn.half_height, "Half height (ring3d)")->capture_default_str();
  s->add_option("--seed", syn.seed, "Seed")->capture_default_str();
  s->add_option("--label", syn.label, "Append a label column with this value");
  s->add_option("--out", syn.out, "Output CSV")->required();

  GradcheckFlags gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every objective gradient");
  g->add_option("--variant", gc.variant, "all | bods | gods | gods_n | gods_o | gods_e | kods")
      ->capture_default_str();
  g->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  g->add_option("--points", gc.points, "Points per objective")->capture_default_str();
  g->add_flag("--corrupt-gradient", gc.corrupt)->group("");

  BenchFlags bench;
  auto* b = app.add_subcommand("bench-uci", "One-class UCI protocol benchmark");
  b->add_option("config", bench.config, "Directory holding datasets.json")->capture_default_str();
  b->add_option("--seeds", bench.seeds, "Random splits")->capture_default_str();
  b->add_option("--max-iters", bench.max_iters, "Solver iteration cap")->capture_default_str();
  b->add_option("--out", bench.out, "Write the table as JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*t) return cmd_train(train, out, err);
    if (*p) return cmd_predict(predict, out);
    if (*e) return cmd_eval(eval, out);
    if (*c) return cmd_calibrate(calib, out, err);
    if (*s) return cmd_synth(syn, out);
    if (*g) return cmd_gradcheck(gc, out);
    if (*b) return cmd_bench(bench, out, err);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << " (" << to_string(ex.code()) << ")\n";
    return is_numeric_error(ex.code()) ? kExitNumeric : kExitInput;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace gods

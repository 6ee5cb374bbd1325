#include "gods/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "gods/data_io.hpp"
#include "gods/inference.hpp"
#include "gods/random.hpp"

namespace gods {

namespace {

Objective<double> corrupted(Objective<double> obj) {
  auto inner = obj.egrad;
  obj.egrad = [inner](const Point<double>& p) {
    AmbientVector<double> g = inner(p);
    for (auto& b : g.blocks) b.array() += 1e-2;
    return g;
  };
  return obj;
}

GradcheckEntry check_primal(Variant v, std::uint64_t seed, int points, bool corrupt) {
  constexpr Index d = 5, n = 10;
  const Index k = v == Variant::Bods ? 1 : 2;
  GodsHyper hyper;
  hyper.variant = v;
  hyper.k = static_cast<int>(k);
  const auto m = primal_manifold(v, d, k);
  Rng master(seed);
  GradcheckEntry e{to_string(v), 0.0, points, false};
  for (int i = 0; i < points; ++i) {
    Rng rng(master.next());
    const Matrix X = l2_normalize(rng.gaussian(n, d)).features;
    auto obj = primal_objective_handle(X, hyper);
    if (corrupt) obj = corrupted(std::move(obj));
    const Point<double> p = random_point(m, rng.next());
    e.max_rel_error = std::max(e.max_rel_error, fd_gradient_check(obj, p));
  }
  e.pass = e.max_rel_error <= kGradcheckTolerance;
  return e;
}

GradcheckEntry check_kods(std::uint64_t seed, int points, bool corrupt) {
  constexpr Index n = 6, k = 2, dim = 3;
  KodsHyper hyper;
  hyper.k = static_cast<int>(k);
  Rng master(seed ^ 0x5bd1e995ULL);
  GradcheckEntry e{"kods", 0.0, points, false};
  for (int i = 0; i < points; ++i) {
    Rng rng(master.next());
    const Matrix X = rng.gaussian(n, dim);
    const Matrix g = ensure_pd(gram(KernelSpec::rbf(1.0), X), 1e-10).matrix;
    const auto m = kods_manifold(g, k);
    auto obj = kods_objective_handle(g, hyper);
    if (corrupt) obj = corrupted(std::move(obj));
    const Point<double> p = random_point(m, rng.next());
    e.max_rel_error = std::max(e.max_rel_error, fd_gradient_check(obj, p));
  }
  e.pass = e.max_rel_error <= kGradcheckTolerance;
  return e;
}

}  // namespace

std::vector<GradcheckEntry> run_gradchecks(std::uint64_t seed, int points, bool corrupt,
                                           const std::optional<std::string>& only) {
  if (points < 1) throw Error(ErrorCode::Domain, "gradcheck: points must be >= 1");
  std::vector<GradcheckEntry> out;
  const Variant variants[] = {Variant::Bods, Variant::Gods, Variant::GodsN, Variant::GodsO,
                              Variant::GodsE};
  bool matched = false;
  for (Variant v : variants) {
    if (only && *only != to_string(v)) continue;
    matched = true;
    out.push_back(check_primal(v, seed, points, corrupt));
  }
  if (!only || *only == "kods") {
    matched = true;
    out.push_back(check_kods(seed, points, corrupt));
  }
  if (!matched) throw Error(ErrorCode::Domain, "gradcheck: unknown objective '" + *only + "'");
  return out;
}

std::vector<BenchDataset> load_bench_config(const std::string& dir) {
  const auto path = std::filesystem::path(dir) / "datasets.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  std::vector<BenchDataset> out;
  try {
    for (const auto& j : doc.at("datasets")) {
      BenchDataset d;
      d.name = j.at("name").get<std::string>();
      d.file = j.at("file").get<std::string>();
      d.target = j.at("target").get<std::string>();
      d.label_column = j.value("label_column", -1);
      d.header = j.value("header", false);
      const std::string delim = j.value("delimiter", std::string(","));
      if (delim.size() != 1) throw Error(ErrorCode::Schema, d.name + ": delimiter must be one character");
      d.delimiter = delim[0];
      if (j.contains("reference_gods_f1")) d.reference_gods_f1 = j["reference_gods_f1"].get<double>();
      if (j.contains("reference_kods_f1")) d.reference_kods_f1 = j["reference_kods_f1"].get<double>();
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
  }
  return out;
}

namespace {

struct SplitScores {
  double f1;
  double auc;
};

template <typename ScoreFn>
SplitScores evaluate(const Dataset& test, const std::string& target, double eta, ScoreFn&& score) {
  std::vector<Label> pred, truth;
  std::vector<double> anomaly;
  for (Index i = 0; i < test.rows(); ++i) {
    const ScorePair s = score(Vector(test.features.row(i).transpose()));
    pred.push_back(classify(s.s1, s.s2, eta));
    anomaly.push_back(anomaly_score(s.s1, s.s2, eta));
    truth.push_back(test.labels[static_cast<std::size_t>(i)] == target ? Label::InClass
                                                                         : Label::Anomaly);
  }
  const EvalReport r = compute_metrics(pred, truth, anomaly);
  return {r.f1.value_or(0.0), r.auc.value_or(std::numeric_limits<double>::quiet_NaN())};
}

void summarize(MethodStats& s) {
  const double n = static_cast<double>(s.f1.size());
  if (s.f1.empty()) return;
  double sum = 0, auc_sum = 0, auc_n = 0;
  for (double v : s.f1) sum += v;
  s.mean_f1 = sum / n;
  double ss = 0;
  for (double v : s.f1) ss += (v - s.mean_f1) * (v - s.mean_f1);
  s.std_f1 = s.f1.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  for (double v : s.auc)
    if (std::isfinite(v)) {
      auc_sum += v;
      auc_n += 1;
    }
  s.mean_auc = auc_n > 0 ? auc_sum / auc_n : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<BenchRow> bench_uci(const std::string& dir, const BenchOptions& options) {
  if (options.seeds < 1) throw Error(ErrorCode::Domain, "bench: seeds must be >= 1");
  std::vector<BenchRow> rows;
  for (const BenchDataset& d : load_bench_config(dir)) {
    BenchRow row;
    row.dataset = d;
    const auto path = std::filesystem::path(dir) / d.file;
    if (!std::filesystem::exists(path)) {
      row.notice = "skipped: " + path.string() + " not found";
      rows.push_back(std::move(row));
      continue;
    }
    CsvOptions csv;
    csv.delimiter = d.delimiter;
    csv.header = d.header;
    csv.label_column = d.label_column;
    const Dataset ds = load_csv(path.string(), csv);
    row.present = true;
    row.rows = ds.rows();
    row.dim = ds.dim();
    for (int s = 0; s < options.seeds; ++s) {
      const auto seed = static_cast<std::uint64_t>(s);
      const Split split = one_class_split(ds, d.target, options.ratio, seed);

      const PrimalTrainResult g = train_primal(split.train.features, options.gods, options.solver, seed);
      const SplitScores gs = evaluate(split.test, d.target, g.model.eta_effective,
                                      [&](const Vector& x) { return primal_scores(g.model, x); });
      row.gods.f1.push_back(gs.f1);
      row.gods.auc.push_back(gs.auc);

      const KodsTrainResult k =
          kods_train(split.train.features, options.kernel, options.kods, options.solver, seed);
      row.max_kods_feasibility =
          std::max({row.max_kods_feasibility, k.feasibility_y, k.feasibility_z});
      const SplitScores ks = evaluate(split.test, d.target, k.model.eta_effective,
                                      [&](const Vector& x) { return kods_scores(k.model, x); });
      row.kods.f1.push_back(ks.f1);
      row.kods.auc.push_back(ks.auc);
    }
    summarize(row.gods);
    summarize(row.kods);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %6s %4s %-10s %-16s %-16s %-8s %-8s %-9s %-9s\n", "dataset",
                "N", "D", "target", "GODS F1", "KODS F1", "GODS AUC", "KODS AUC", "ref GODS",
                "ref KODS");
  out << buf;
  auto ref = [](const std::optional<double>& v) {
    char b[16];
    if (v) std::snprintf(b, sizeof b, "%.3f", *v);
    else std::snprintf(b, sizeof b, "-");
    return std::string(b);
  };
  for (const BenchRow& r : rows) {
    if (!r.present) {
      std::snprintf(buf, sizeof buf, "%-10s %6s %4s %-10s %s\n", r.dataset.name.c_str(), "-", "-",
                    r.dataset.target.c_str(), r.notice.c_str());
      out << buf;
      continue;
    }
    char gf[32], kf[32];
    std::snprintf(gf, sizeof gf, "%.3f +- %.3f", r.gods.mean_f1, r.gods.std_f1);
    std::snprintf(kf, sizeof kf, "%.3f +- %.3f", r.kods.mean_f1, r.kods.std_f1);
    std::snprintf(buf, sizeof buf, "%-10s %6ld %4ld %-10s %-16s %-16s %-8.3f %-8.3f %-9s %-9s\n",
                  r.dataset.name.c_str(), static_cast<long>(r.rows), static_cast<long>(r.dim),
                  r.dataset.target.c_str(), gf, kf, r.gods.mean_auc, r.kods.mean_auc,
                  ref(r.dataset.reference_gods_f1).c_str(), ref(r.dataset.reference_kods_f1).c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace gods

#include "gods/inference.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace gods {

std::pair<double, double> two_means_1d(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  if (v.size() < 2 || v.front() == v.back())
    throw Error(ErrorCode::Domain, "two_means_1d: need at least two distinct values");
  const std::size_t n = v.size();
  // Prefix sums of values and squares give each split's within-cluster SSE in O(1).
  std::vector<double> s(n + 1, 0.0), q(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s[i + 1] = s[i] + v[i];
    q[i + 1] = q[i] + v[i] * v[i];
  }
  auto sse = [&](std::size_t lo, std::size_t hi) {
    const double m = static_cast<double>(hi - lo);
    const double sum = s[hi] - s[lo];
    return (q[hi] - q[lo]) - sum * sum / m;
  };
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t cut = 1; cut < n; ++cut) {
    if (v[cut - 1] == v[cut]) continue;  // equal values never straddle an optimal split
    const double cost = sse(0, cut) + sse(cut, n);
    if (cost < best_cost) {
      best_cost = cost;
      best = cut;
    }
  }
  return {s[best] / static_cast<double>(best),
          (s[n] - s[best]) / static_cast<double>(n - best)};
}

Calibration calibrate_eta(std::span<const double> scores_l, std::span<const double> scores_u,
                          double eta) {
  if (!(eta > 0)) throw Error(ErrorCode::Domain, "calibrate_eta: eta must be > 0");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Calibration out{eta, 0.0, {nan, nan}, {nan, nan}, CalibrationStatus::Ok};
  std::pair<double, double> cl, cu;
  try {
    cl = two_means_1d(scores_l);
    cu = two_means_1d(scores_u);
  } catch (const Error&) {
    out.status = CalibrationStatus::Degenerate;
    return out;
  }
  out.centroid_l[0] = cl.first;
  out.centroid_l[1] = cl.second;
  out.centroid_u[0] = cu.first;
  out.centroid_u[1] = cu.second;
  auto pos = [](double t) { return t > 0 ? t : 0.0; };
  out.delta = 0.5 * (pos(eta - cl.first) - pos(eta + cu.first));
  out.eta_prime = eta + out.delta;
  constexpr double kMinEta = 1e-6;
  if (out.eta_prime < kMinEta) {
    out.eta_prime = kMinEta;
    out.status = CalibrationStatus::Clamped;
  }
  return out;
}

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* where) {
  if (a == 0) throw Error(ErrorCode::EmptyData, std::string(where) + ": no samples");
  require_shape(a == b, std::string(where) + ": length mismatch (" + std::to_string(a) + " vs " +
                            std::to_string(b) + ")");
}

std::optional<double> ratio(double num, double den) {
  if (den == 0) return std::nullopt;
  return num / den;
}

/// Descending distinct thresholds; a sample is flagged anomalous when its
/// score is >= the threshold.
std::vector<RocPoint> roc_points(std::span<const Label> truth, std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double pos = 0, neg = 0;
  for (Label l : truth) (l == Label::Anomaly ? pos : neg) += 1;
  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i)
      (truth[order[i]] == Label::Anomaly ? tp : fp) += 1;
    out.push_back({t, neg > 0 ? fp / neg : 0.0, pos > 0 ? tp / pos : 0.0});
  }
  return out;
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const Label> truth, std::span<const double> scores) {
  check_lengths(truth.size(), scores.size(), "roc_curve");
  return roc_points(truth, scores);
}

EvalReport compute_metrics(std::span<const Label> predictions, std::span<const Label> truth,
                           std::span<const double> scores) {
  check_lengths(predictions.size(), truth.size(), "compute_metrics");
  require_shape(scores.empty() || scores.size() == truth.size(),
                "compute_metrics: scores length mismatch");
  EvalReport r;
  auto& c = r.confusion;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pred_in = predictions[i] == Label::InClass;
    const bool true_in = truth[i] == Label::InClass;
    if (pred_in && true_in) ++c.tp;
    else if (pred_in) ++c.fp;
    else if (true_in) ++c.fn;
    else ++c.tn;
  }
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  r.accuracy = ratio(tp + tn, static_cast<double>(c.total()));
  // Harmonic means written in count form; they coincide with 2PR/(P+R) and
  // 2 TNR NPV/(TNR+NPV) wherever those are defined.
  r.f1 = ratio(2 * tp, 2 * tp + fp + fn);
  r.f1bar = ratio(2 * tn, 2 * tn + fp + fn);
  r.tnr = ratio(tn, tn + fp);
  r.npv = ratio(tn, tn + fn);
  r.far = ratio(fp, fp + tn);
  if (!scores.empty()) {
    const bool has_pos = c.tp + c.fn > 0, has_neg = c.tn + c.fp > 0;
    if (has_pos && has_neg) {
      const auto roc = roc_points(truth, scores);
      double auc = 0;
      for (std::size_t i = 1; i < roc.size(); ++i)
        auc += 0.5 * (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr);
      r.auc = auc;
    }
  }
  return r;
}

}  // namespace gods

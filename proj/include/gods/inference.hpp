#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gods/common.hpp"

namespace gods {

enum class Label { InClass, Anomaly };

inline const char* to_string(Label l) { return l == Label::InClass ? "in-class" : "anomaly"; }

/// In-class iff s1 >= eta and s2 <= -eta (both boundaries inclusive).
inline Label classify(double s1, double s2, double eta) {
  return (s1 >= eta && s2 <= -eta) ? Label::InClass : Label::Anomaly;
}

/// max(eta - s1, s2 + eta): <= 0 exactly when classify() says in-class.
/// Larger means more anomalous.
inline double anomaly_score(double s1, double s2, double eta) {
  return std::max(eta - s1, s2 + eta);
}

enum class CalibrationStatus { Ok, Degenerate, Clamped };

inline const char* to_string(CalibrationStatus s) {
  switch (s) {
    case CalibrationStatus::Ok: return "ok";
    case CalibrationStatus::Degenerate: return "degenerate";
    case CalibrationStatus::Clamped: return "clamped";
  }
  return "?";
}

struct Calibration {
  double eta_prime;
  double delta;
  double centroid_l[2];  ///< ascending
  double centroid_u[2];  ///< ascending
  CalibrationStatus status;
};

/// Exact 1-D 2-means by enumerating every split of the sorted values.
/// Returns the two centroids in ascending order; ties keep the first split.
/// Throws ErrorCode::Domain with fewer than two distinct values.
std::pair<double, double> two_means_1d(std::span<const double> values);

/// eta' = eta + ([eta - min(c_l)]_+ - [eta + min(c_u)]_+) / 2, with c_l, c_u the
/// 2-means centroids of the min-scores and max-scores. Degenerate clusterings
/// leave eta unchanged; eta' is clamped to at least 1e-6.
Calibration calibrate_eta(std::span<const double> scores_l, std::span<const double> scores_u,
                          double eta);

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

/// Rates are empty (undefined) when their denominator is zero.
struct EvalReport {
  std::optional<double> accuracy, f1, f1bar, tnr, npv, auc, far;
  ConfusionCounts confusion;
  double threshold = 0.0;
};

/// In-class is the positive class. `scores` are anomaly scores (higher means
/// more anomalous); AUC is the trapezoidal area under the ROC curve for
/// detecting anomalies, swept over the distinct score values.
EvalReport compute_metrics(std::span<const Label> predictions, std::span<const Label> truth,
                           std::span<const double> scores);

struct RocPoint {
  double threshold, fpr, tpr;
};
std::vector<RocPoint> roc_curve(std::span<const Label> truth, std::span<const double> scores);

}  // namespace gods

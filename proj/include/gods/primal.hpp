#pragma once

// Primal one-class models: a pair of complementary frames (W1, b1), (W2, b2)
// such that in-class points x satisfy min(W1^T x + b1) >= eta and
// max(W2^T x + b2) <= -eta.
//
//   BODS    K = 1, unit-norm w's, coupling -w1^T w2 + alpha(b1, b2) / 2
//   GODS    W on the Stiefel manifold, data-dependent frame distance
//   GODS_N  W = Q diag(r), Q on Stiefel, penalty (lambda/2) ||r||_p per frame
//   GODS_O  W on the oblique manifold, penalty (lambda/2) ||W^T W - I||_F^2
//   GODS_E  W Euclidean, same soft-orthogonality penalty

#include <cstdint>
#include <string>
#include <utility>

#include "gods/common.hpp"
#include "gods/manifold.hpp"
#include "gods/rcg.hpp"

namespace gods {

enum class Variant { Bods, Gods, GodsN, GodsO, GodsE };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct GodsHyper {
  Variant variant = Variant::Gods;
  int k = 3;
  double eta = 0.3;
  double nu = 1.0;
  double lambda = 1.0;
  double p_norm = 1.0;
  bool normalize = true;

  void validate() const;
};

struct FramePair {
  Matrix w1, w2;  ///< d x K (Q factors for GODS_N)
  Vector b1, b2;  ///< K
  Vector r1, r2;  ///< positive column scales, GODS_N only (empty otherwise)

  Index dim() const { return w1.rows(); }
  Index k() const { return w1.cols(); }
  bool scaled() const { return r1.size() > 0; }

  /// W1, W2 with the column scales applied.
  Matrix effective_w1() const { return scaled() ? Matrix(w1 * r1.asDiagonal()) : w1; }
  Matrix effective_w2() const { return scaled() ? Matrix(w2 * r2.asDiagonal()) : w2; }

  friend bool operator==(const FramePair&, const FramePair&) = default;
};

/// Euclidean gradient of a primal objective. For GODS_N, dr1/dr2 are taken
/// with respect to r (not log r).
struct FrameGradient {
  Matrix dw1, dw2;
  Vector db1, db2;
  Vector dr1, dr2;
};

/// X is n x d (one sample per row).
double bods_objective(const FramePair& frames, const Matrix& X, const GodsHyper& hyper);
FrameGradient bods_egrad(const FramePair& frames, const Matrix& X, const GodsHyper& hyper);

/// GODS objective plus the variant's penalty (none for GODS).
double gods_objective(const FramePair& frames, const Matrix& X, const GodsHyper& hyper);
FrameGradient gods_egrad(const FramePair& frames, const Matrix& X, const GodsHyper& hyper);

/// Dispatches to the BODS or GODS path according to hyper.variant.
double primal_objective(const FramePair& frames, const Matrix& X, const GodsHyper& hyper);
FrameGradient primal_egrad(const FramePair& frames, const Matrix& X, const GodsHyper& hyper);

struct InitResult {
  FramePair frames;
  bool random_fallback = false;  ///< n < 3K: frames came from random_point
};

/// Thin-SVD initialization: W1 spans the 3K training points nearest the
/// origin, W2 the 3K farthest (stable sort on the Euclidean norm). Columns are
/// sign-fixed so the first nonzero entry is non-negative; biases start at 0.
InitResult init_frames(const Matrix& X, Index k, std::uint64_t seed);

/// Optimization manifold for a variant: frames, then b1, b2 (then log r1,
/// log r2 for GODS_N).
Manifold<double> primal_manifold(Variant v, Index d, Index k);
Point<double> pack_frames(const FramePair& frames, Variant v);
FramePair unpack_frames(const Point<double>& p, Variant v);
Objective<double> primal_objective_handle(const Matrix& X, const GodsHyper& hyper);

struct TrainedPrimalModel {
  FramePair frames;
  GodsHyper hyper;
  double eta_effective = 0.3;
  Index feature_dim = 0;
  bool normalization = true;
};

struct PrimalTrainResult {
  TrainedPrimalModel model;
  SolveReport report;
  bool random_fallback = false;
  Index zero_rows = 0;  ///< rows left at zero by l2 normalization
};

/// Normalizes X when hyper.normalize is set, initializes with init_frames and
/// runs RCG on the variant's manifold.
PrimalTrainResult train_primal(const Matrix& X, const GodsHyper& hyper, const SolverConfig& cfg,
                               std::uint64_t seed);
/// Same, from caller-supplied initial frames (X is used as given).
PrimalTrainResult train_primal(const Matrix& X, const GodsHyper& hyper, const SolverConfig& cfg,
                               const FramePair& init);

struct ScorePair {
  double s1;  ///< min(W1^T x + b1)
  double s2;  ///< max(W2^T x + b2)
};

/// x is normalized first when the model was trained on normalized data.
ScorePair primal_scores(const TrainedPrimalModel& model, const Vector& x);

}  // namespace gods

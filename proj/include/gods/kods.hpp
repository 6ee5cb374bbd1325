#pragma once

// Kernelized one-class discriminative subspaces, approximate dual form.
//
// The duals Y, Z are K x n points of the generalized Stiefel manifold
// {U : U K U^T = I}; their element-wise squares act as the non-negative
// multipliers. With A = Y.Y and B = Z.Z (element-wise):
//
//   f(Y, Z) = 1/2 |A 1|^2 + tr(A K B^T) - eta * sum(A + B) + lambda/2 |(A - B) 1|^2
//
// Scores of a test point x with kernel column k = k(X, x):
//   s1 = min(B k + b1),   s2 = max(-A k + b2)
//   b1 = rowmax(eta - B K),   b2 = rowmin(-eta + A K)

#include <cstdint>
#include <utility>

#include "gods/common.hpp"
#include "gods/kernels.hpp"
#include "gods/manifold.hpp"
#include "gods/primal.hpp"
#include "gods/rcg.hpp"

namespace gods {

struct KodsHyper {
  int k = 3;
  double eta = 0.3;
  double lambda = 1.0;
  bool normalize = true;
  /// Diagonal jitter for the Gram matrix, relative to trace(K)/n.
  double relative_jitter = 1e-10;

  void validate() const;
};

struct DualVars {
  Matrix y, z;  ///< K x n

  friend bool operator==(const DualVars&, const DualVars&) = default;
};

struct DualGradient {
  Matrix dy, dz;
};

double kods_objective(const DualVars& duals, const Matrix& gram, const KodsHyper& hyper);

/// Exact Euclidean gradient of kods_objective, with E = 1 1^T:
///   dY = (2 + 2 lambda) Y.(A E) + Y.(B [2K - 2 lambda E]) - 2 eta Y
///   dZ = 2 lambda Z.(B E) + Z.(A [2K - 2 lambda E]) - 2 eta Z
DualGradient kods_egrad(const DualVars& duals, const Matrix& gram, const KodsHyper& hyper);

struct Intercepts {
  Vector b1, b2;
};

Intercepts recover_primal(const DualVars& duals, const Matrix& gram, double eta);

struct KodsModel {
  DualVars duals;
  KernelSpec kernel;
  Matrix support;  ///< training features (normalized if `normalization`)
  Vector b1, b2;
  KodsHyper hyper;
  double eta_effective = 0.3;
  double jitter = 0.0;  ///< absolute diagonal shift applied to the Gram matrix
  bool normalization = true;

  Index feature_dim() const { return support.cols(); }
};

struct KodsTrainResult {
  KodsModel model;
  SolveReport report;
  double feasibility_y = 0.0;  ///< |Y K Y^T - I|_F at the solution
  double feasibility_z = 0.0;
  Index zero_rows = 0;
};

/// Product of two generalized Stiefel manifolds sharing one Gram factor.
Manifold<double> kods_manifold(const Matrix& gram, Index k);
Objective<double> kods_objective_handle(const Matrix& gram, const KodsHyper& hyper);

/// 1/(nK) plus a seeded relative perturbation, retracted onto the manifold.
DualVars kods_init(const Manifold<double>& m, Index n, Index k, std::uint64_t seed);

KodsTrainResult kods_train(const Matrix& X, const KernelSpec& kernel, const KodsHyper& hyper,
                           const SolverConfig& cfg, std::uint64_t seed);

ScorePair kods_scores(const KodsModel& model, const Vector& x);

}  // namespace gods

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "gods/common.hpp"

namespace gods {

enum class KernelFamily { Linear, Rbf, Polynomial, ChiSquare, HistogramIntersection };

inline const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Linear: return "linear";
    case KernelFamily::Rbf: return "rbf";
    case KernelFamily::Polynomial: return "polynomial";
    case KernelFamily::ChiSquare: return "chi-square";
    case KernelFamily::HistogramIntersection: return "histogram-intersection";
  }
  return "?";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "linear") return KernelFamily::Linear;
  if (s == "rbf") return KernelFamily::Rbf;
  if (s == "polynomial" || s == "poly") return KernelFamily::Polynomial;
  if (s == "chi-square" || s == "chi2") return KernelFamily::ChiSquare;
  if (s == "histogram-intersection" || s == "hik") return KernelFamily::HistogramIntersection;
  throw Error(ErrorCode::Domain, "unknown kernel '" + s + "'");
}

/// Kernel family and parameters.
///   linear                 x.y
///   rbf                    exp(-|x-y|^2 / (2 sigma^2))
///   polynomial             (x.y + offset)^degree
///   chi-square             sum_i 2 x_i y_i / (x_i + y_i), 0/0 := 0
///   histogram-intersection sum_i min(x_i, y_i)
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double sigma = 0.1;
  int degree = 3;
  double offset = 1.0;

  static KernelSpec linear() { return {KernelFamily::Linear}; }
  static KernelSpec rbf(double sigma) { return {KernelFamily::Rbf, sigma}; }
  static KernelSpec polynomial(int degree, double offset = 1.0) {
    return {KernelFamily::Polynomial, 0.1, degree, offset};
  }
  static KernelSpec chi_square() { return {KernelFamily::ChiSquare}; }
  static KernelSpec histogram_intersection() { return {KernelFamily::HistogramIntersection}; }

  void validate() const {
    if (family == KernelFamily::Rbf && !(sigma > 0))
      throw Error(ErrorCode::Domain, "rbf kernel: sigma must be > 0");
    if (family == KernelFamily::Polynomial && degree < 1)
      throw Error(ErrorCode::Domain, "polynomial kernel: degree must be >= 1");
    if (family == KernelFamily::Polynomial && !(offset >= 0))
      throw Error(ErrorCode::Domain, "polynomial kernel: offset must be >= 0");
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

namespace detail {

template <typename DerivedX, typename DerivedY>
void require_histograms(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if ((x.array() < 0).any() || (y.array() < 0).any())
    throw Error(ErrorCode::Domain, "histogram kernels need non-negative inputs");
}

}  // namespace detail

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  require_shape(x.size() == y.size(), "kernel_eval: dimension mismatch (" +
                                          std::to_string(x.size()) + " vs " +
                                          std::to_string(y.size()) + ")");
  spec.validate();
  switch (spec.family) {
    case KernelFamily::Linear:
      return x.reshaped().dot(y.reshaped());
    case KernelFamily::Rbf: {
      const Scalar s = static_cast<Scalar>(spec.sigma);
      return std::exp(-(x.reshaped() - y.reshaped()).squaredNorm() / (Scalar(2) * s * s));
    }
    case KernelFamily::Polynomial:
      return std::pow(x.reshaped().dot(y.reshaped()) + static_cast<Scalar>(spec.offset),
                      spec.degree);
    case KernelFamily::ChiSquare: {
      detail::require_histograms(x, y);
      Scalar s(0);
      for (Index i = 0; i < x.size(); ++i) {
        const Scalar a = x.reshaped()(i), b = y.reshaped()(i);
        const Scalar den = a + b;
        if (den > Scalar(0)) s += Scalar(2) * a * b / den;
      }
      return s;
    }
    case KernelFamily::HistogramIntersection:
      detail::require_histograms(x, y);
      return x.reshaped().cwiseMin(y.reshaped()).sum();
  }
  throw Error(ErrorCode::Domain, "kernel_eval: unknown family");
}

/// n x m matrix of kernel values between the rows of X and the rows of Y.
template <typename DerivedX, typename DerivedY>
MatrixX<typename DerivedX::Scalar> gram(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& X,
                                        const Eigen::MatrixBase<DerivedY>& Y) {
  spec.validate();
  require_shape(X.cols() == Y.cols(), "gram: feature dimension mismatch");
  MatrixX<typename DerivedX::Scalar> out(X.rows(), Y.rows());
  for (Index j = 0; j < Y.rows(); ++j)
    for (Index i = 0; i < X.rows(); ++i) out(i, j) = kernel_eval(spec, X.row(i), Y.row(j));
  return out;
}

/// Square Gram matrix of the rows of X. Every kernel here is exactly
/// symmetric in floating point, so the upper triangle is mirrored.
template <typename DerivedX>
MatrixX<typename DerivedX::Scalar> gram(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& X) {
  spec.validate();
  const Index n = X.rows();
  MatrixX<typename DerivedX::Scalar> out(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      out(i, j) = kernel_eval(spec, X.row(i), X.row(j));
      out(j, i) = out(i, j);
    }
  }
  return out;
}

template <typename Scalar>
struct PdMatrix {
  MatrixX<Scalar> matrix;
  Scalar jitter;  ///< diagonal shift that was applied
};

/// Smallest shift from {0, jitter, 10 jitter, ...} for which K + shift*I has a
/// Cholesky factor whose squared pivots are all above 1e-14 * trace(K)/n.
/// Shifts beyond 1e-2 * trace(K)/n are refused.
template <typename Derived>
PdMatrix<typename Derived::Scalar> ensure_pd(const Eigen::MatrixBase<Derived>& k,
                                             typename Derived::Scalar jitter) {
  using Scalar = typename Derived::Scalar;
  require_shape(k.rows() == k.cols() && k.rows() >= 1, "ensure_pd: matrix must be square");
  if (!k.allFinite()) throw Error(ErrorCode::Domain, "ensure_pd: non-finite entries");
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10))
    throw Error(ErrorCode::Domain, "ensure_pd: matrix is not symmetric");
  if (!(jitter > Scalar(0))) throw Error(ErrorCode::Domain, "ensure_pd: jitter must be > 0");

  const Index n = k.rows();
  const Scalar mean_diag = k.trace() / static_cast<Scalar>(n);
  if (!(mean_diag > Scalar(0)))
    throw Error(ErrorCode::Conditioning, "ensure_pd: non-positive trace");
  const Scalar limit = Scalar(1e-2) * mean_diag;
  const Scalar pivot_floor = Scalar(1e-14) * mean_diag;

  MatrixX<Scalar> shifted = k;
  Scalar eps(0);
  for (;;) {
    if (eps > limit)
      throw Error(ErrorCode::Conditioning,
                  "ensure_pd: required jitter exceeds 1e-2 * trace/n");
    shifted = k;
    shifted.diagonal().array() += eps;
    Eigen::LLT<MatrixX<Scalar>> llt(shifted);
    if (llt.info() == Eigen::Success) {
      const auto piv = llt.matrixLLT().diagonal();
      if (piv.allFinite() && piv.cwiseAbs2().minCoeff() > pivot_floor)
        return {std::move(shifted), eps};
    }
    eps = eps == Scalar(0) ? jitter : eps * Scalar(10);
  }
}

}  // namespace gods

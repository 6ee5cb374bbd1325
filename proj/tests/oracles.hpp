#pragma once

// Independent reference implementations used only by the tests. None of them
// shares code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "gods/common.hpp"
#include "gods/kernels.hpp"
#include "gods/rcg.hpp"

namespace oracle {

using gods::Index;
using gods::Matrix;
using gods::Vector;

/// Classical Gram-Schmidt on the columns (twice, for stability).
inline Matrix gram_schmidt(const Matrix& a) {
  Matrix q = a;
  for (Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    q.col(j).normalize();
  }
  return q;
}

/// Denman-Beavers iteration: Y -> A^{1/2}, Z -> A^{-1/2} for SPD A.
inline Matrix inverse_sqrt(const Matrix& a) {
  const double scale = a.trace() / static_cast<double>(a.rows());
  Matrix y = a / scale;
  Matrix z = Matrix::Identity(a.rows(), a.cols());
  for (int it = 0; it < 100; ++it) {
    const Matrix y_next = 0.5 * (y + z.inverse());
    const Matrix z_next = 0.5 * (z + y.inverse());
    const double change = (y_next - y).norm();
    y = y_next;
    z = z_next;
    if (change < 1e-15) break;
  }
  return z / std::sqrt(scale);
}

/// Stiefel tangent projection written out as a - p sym(p^T a).
inline Matrix stiefel_projection(const Matrix& p, const Matrix& a) {
  const Matrix pa = p.transpose() * a;
  return a - p * (0.5 * (pa + pa.transpose()));
}

inline double kernel_scalar(const gods::KernelSpec& s, const Vector& x, const Vector& y) {
  double v = 0;
  switch (s.family) {
    case gods::KernelFamily::Linear:
      for (Index i = 0; i < x.size(); ++i) v += x[i] * y[i];
      return v;
    case gods::KernelFamily::Rbf:
      for (Index i = 0; i < x.size(); ++i) v += (x[i] - y[i]) * (x[i] - y[i]);
      return std::exp(-v / (2 * s.sigma * s.sigma));
    case gods::KernelFamily::Polynomial:
      for (Index i = 0; i < x.size(); ++i) v += x[i] * y[i];
      return std::pow(v + s.offset, s.degree);
    case gods::KernelFamily::ChiSquare:
      for (Index i = 0; i < x.size(); ++i)
        if (x[i] + y[i] > 0) v += 2 * x[i] * y[i] / (x[i] + y[i]);
      return v;
    case gods::KernelFamily::HistogramIntersection:
      for (Index i = 0; i < x.size(); ++i) v += std::min(x[i], y[i]);
      return v;
  }
  return v;
}

/// Best 2-partition over every subset (no sortedness assumed); n <= 16.
/// Returns the minimal within-cluster sum of squares.
inline double two_means_brute_force(const std::vector<double>& v) {
  const std::size_t n = v.size();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    double s[2] = {0, 0}, c[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1u;
      s[g] += v[i];
      c[g] += 1;
    }
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1u;
      const double m = s[g] / c[g];
      sse += (v[i] - m) * (v[i] - m);
    }
    best = std::min(best, sse);
  }
  return best;
}

/// KODS Euclidean gradient as stated in closed form with an E_n weighting of
/// lambda in the cross terms. Agrees with the exact derivative when lambda = 0.
struct KodsGradient {
  Matrix dy, dz;
};
inline KodsGradient kods_theorem_gradient(const Matrix& y, const Matrix& z, const Matrix& k,
                                          double eta, double lambda) {
  const Index n = y.cols();
  const Matrix e = Matrix::Ones(n, n);
  const Matrix y2 = y.cwiseProduct(y), z2 = z.cwiseProduct(z);
  const double gamma = 2 + 2 * lambda;
  KodsGradient g;
  g.dz = 2 * lambda * z.cwiseProduct(z2 * e) + z.cwiseProduct(y2 * (2 * k - lambda * e)) - 2 * eta * z;
  g.dy = gamma * y.cwiseProduct(y2 * e) + y.cwiseProduct(z2 * (2 * k - lambda * e)) - 2 * eta * y;
  return g;
}

/// Element loop for the KODS gradient with K = I, lambda = 0:
///   dY_ij = 2 Y_ij (sum_l Y_il^2) + 2 Y_ij Z_ij^2 - 2 eta Y_ij.
inline KodsGradient kods_identity_loop(const Matrix& y, const Matrix& z, double eta) {
  KodsGradient g{Matrix(y.rows(), y.cols()), Matrix(z.rows(), z.cols())};
  for (Index i = 0; i < y.rows(); ++i) {
    double ry = 0;
    for (Index l = 0; l < y.cols(); ++l) ry += y(i, l) * y(i, l);
    for (Index j = 0; j < y.cols(); ++j) {
      g.dy(i, j) = 2 * y(i, j) * ry + 2 * y(i, j) * z(i, j) * z(i, j) - 2 * eta * y(i, j);
      g.dz(i, j) = 2 * z(i, j) * y(i, j) * y(i, j) - 2 * eta * z(i, j);
    }
  }
  return g;
}

/// Armijo acceptance implies a non-increasing trace; asserted on every solve.
inline void check_trace(const gods::SolveReport& r) {
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
    REQUIRE(r.objective_trace[i] <= r.objective_trace[i - 1]);
}

}  // namespace oracle

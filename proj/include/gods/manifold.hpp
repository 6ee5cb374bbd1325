#pragma once

// Matrix manifolds used by the one-class models, together with the handful of
// operations a first-order Riemannian solver needs: tangent projection,
// Euclidean-to-Riemannian gradient conversion, retraction, projection-based
// vector transport and the (Frobenius) inner product.
//
// A point is a list of dense blocks. Every manifold is flattened into a list of
// leaves, one leaf per block, so products of products need no recursion at
// evaluation time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "gods/common.hpp"
#include "gods/random.hpp"

namespace gods {

enum class ManifoldKind {
  Sphere,
  Stiefel,
  NonCompactStiefel,
  Oblique,
  Euclidean,
  GeneralizedStiefel,
  Product,
};

inline const char* to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::Stiefel: return "stiefel";
    case ManifoldKind::NonCompactStiefel: return "non-compact-stiefel";
    case ManifoldKind::Oblique: return "oblique";
    case ManifoldKind::Euclidean: return "euclidean";
    case ManifoldKind::GeneralizedStiefel: return "generalized-stiefel";
    case ManifoldKind::Product: return "product";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Block containers. Points, tangent vectors and ambient (Euclidean) gradients
// share a layout but are distinct types so they cannot be mixed up.

struct PointTag {};
struct TangentTag {};
struct AmbientTag {};

template <typename Scalar, typename Tag>
struct Blocks {
  std::vector<MatrixX<Scalar>> blocks;

  Blocks() = default;
  explicit Blocks(std::vector<MatrixX<Scalar>> b) : blocks(std::move(b)) {}

  std::size_t size() const { return blocks.size(); }
  MatrixX<Scalar>& operator[](std::size_t i) { return blocks[i]; }
  const MatrixX<Scalar>& operator[](std::size_t i) const { return blocks[i]; }

  friend bool operator==(const Blocks& a, const Blocks& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
      if (!(a[i].array() == b[i].array()).all()) return false;
    }
    return true;
  }
};

template <typename Scalar>
using Point = Blocks<Scalar, PointTag>;
template <typename Scalar>
using TangentVector = Blocks<Scalar, TangentTag>;
template <typename Scalar>
using AmbientVector = Blocks<Scalar, AmbientTag>;

/// Frobenius pairing of any two block sets with matching shapes.
template <typename Scalar, typename TagA, typename TagB>
Scalar frobenius_dot(const Blocks<Scalar, TagA>& a, const Blocks<Scalar, TagB>& b) {
  require_shape(a.size() == b.size(), "frobenius_dot: block count mismatch");
  Scalar s(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    require_shape(a[i].rows() == b[i].rows() && a[i].cols() == b[i].cols(),
                  "frobenius_dot: block shape mismatch");
    s += (a[i].array() * b[i].array()).sum();
  }
  return s;
}

template <typename Scalar, typename Tag>
Scalar frobenius_norm(const Blocks<Scalar, Tag>& a) {
  return std::sqrt(frobenius_dot(a, a));
}

template <typename Scalar, typename Tag>
Blocks<Scalar, Tag> scaled(const Blocks<Scalar, Tag>& a, Scalar factor) {
  Blocks<Scalar, Tag> out = a;
  for (auto& b : out.blocks) b *= factor;
  return out;
}

/// a + factor * b
template <typename Scalar, typename Tag>
Blocks<Scalar, Tag> axpy(const Blocks<Scalar, Tag>& a, Scalar factor,
                         const Blocks<Scalar, Tag>& b) {
  require_shape(a.size() == b.size(), "axpy: block count mismatch");
  Blocks<Scalar, Tag> out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += factor * b[i];
  return out;
}

template <typename Scalar, typename Tag>
bool all_finite(const Blocks<Scalar, Tag>& a) {
  for (const auto& b : a.blocks)
    if (!b.allFinite()) return false;
  return true;
}

// ---------------------------------------------------------------------------

/// Positive-definite weight matrix of a generalized Stiefel manifold with its
/// Cholesky factor, shared by every copy of the manifold description.
template <typename Scalar>
struct GramFactor {
  MatrixX<Scalar> gram;
  Eigen::LLT<MatrixX<Scalar>> llt;

  explicit GramFactor(MatrixX<Scalar> k) : gram(std::move(k)), llt(gram) {
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::NotPositiveDefinite,
                  "generalized Stiefel: gram matrix is not positive definite");
    const VectorX<Scalar> d = llt.matrixLLT().diagonal();
    if (!(d.array() > Scalar(0)).all() || !d.allFinite())
      throw Error(ErrorCode::NotPositiveDefinite,
                  "generalized Stiefel: gram matrix is not positive definite");
  }

  /// a * gram^{-1}, via the cached factor.
  MatrixX<Scalar> right_solve(const MatrixX<Scalar>& a) const {
    return llt.solve(a.transpose()).transpose();
  }
};

template <typename Scalar>
class Manifold {
 public:
  struct Leaf {
    ManifoldKind kind;
    Index rows;
    Index cols;
    std::shared_ptr<const GramFactor<Scalar>> gram;
  };

  static Manifold sphere(Index d) {
    require_shape(d >= 1, "sphere: dimension must be >= 1");
    return Manifold(ManifoldKind::Sphere, {Leaf{ManifoldKind::Sphere, d, 1, nullptr}});
  }

  static Manifold stiefel(Index d, Index k) {
    check_frame(d, k, "stiefel");
    return Manifold(ManifoldKind::Stiefel, {Leaf{ManifoldKind::Stiefel, d, k, nullptr}});
  }

  /// Full-rank d x k matrices factored as Q diag(r) with Q on St(d, k). The
  /// second block stores log(r) so the scales stay positive without
  /// constraints.
  static Manifold non_compact_stiefel(Index d, Index k) {
    check_frame(d, k, "non-compact stiefel");
    return Manifold(ManifoldKind::NonCompactStiefel,
                    {Leaf{ManifoldKind::Stiefel, d, k, nullptr},
                     Leaf{ManifoldKind::Euclidean, k, 1, nullptr}});
  }

  static Manifold oblique(Index d, Index k) {
    check_frame(d, k, "oblique");
    return Manifold(ManifoldKind::Oblique, {Leaf{ManifoldKind::Oblique, d, k, nullptr}});
  }

  static Manifold euclidean(Index rows, Index cols) {
    require_shape(rows >= 1 && cols >= 1, "euclidean: empty shape");
    return Manifold(ManifoldKind::Euclidean,
                    {Leaf{ManifoldKind::Euclidean, rows, cols, nullptr}});
  }

  /// k x n matrices U with U * gram * U^T = I_k.
  static Manifold generalized_stiefel(Index n, Index k, MatrixX<Scalar> gram) {
    require_shape(n >= k && k >= 1, "generalized stiefel: need n >= k >= 1");
    require_shape(gram.rows() == n && gram.cols() == n,
                  "generalized stiefel: gram must be n x n");
    auto factor = std::make_shared<const GramFactor<Scalar>>(std::move(gram));
    return Manifold(ManifoldKind::GeneralizedStiefel,
                    {Leaf{ManifoldKind::GeneralizedStiefel, k, n, std::move(factor)}});
  }

  static Manifold product(const std::vector<Manifold>& factors) {
    require_shape(!factors.empty(), "product: no factors");
    std::vector<Leaf> leaves;
    for (const auto& f : factors) leaves.insert(leaves.end(), f.leaves_.begin(), f.leaves_.end());
    return Manifold(ManifoldKind::Product, std::move(leaves));
  }

  ManifoldKind kind() const { return kind_; }
  const std::vector<Leaf>& leaves() const { return leaves_; }
  std::size_t num_blocks() const { return leaves_.size(); }

  Index ambient_dimension() const {
    Index n = 0;
    for (const auto& l : leaves_) n += l.rows * l.cols;
    return n;
  }

  template <typename Tag>
  void check(const Blocks<Scalar, Tag>& x, const char* where) const {
    require_shape(x.size() == leaves_.size(),
                  std::string(where) + ": expected " + std::to_string(leaves_.size()) +
                      " blocks, got " + std::to_string(x.size()));
    for (std::size_t i = 0; i < leaves_.size(); ++i)
      require_shape(x[i].rows() == leaves_[i].rows && x[i].cols() == leaves_[i].cols,
                    std::string(where) + ": block " + std::to_string(i) + " is " +
                        std::to_string(x[i].rows()) + "x" + std::to_string(x[i].cols()) +
                        ", expected " + std::to_string(leaves_[i].rows) + "x" +
                        std::to_string(leaves_[i].cols));
  }

 private:
  Manifold(ManifoldKind kind, std::vector<Leaf> leaves) : kind_(kind), leaves_(std::move(leaves)) {}

  static void check_frame(Index d, Index k, const char* name) {
    require_shape(d >= k && k >= 1, std::string(name) + ": need d >= k >= 1");
  }

  ManifoldKind kind_;
  std::vector<Leaf> leaves_;
};

namespace detail {

template <typename Scalar>
MatrixX<Scalar> sym(const MatrixX<Scalar>& a) {
  return Scalar(0.5) * (a + a.transpose());
}

template <typename Scalar>
MatrixX<Scalar> project_leaf(const typename Manifold<Scalar>::Leaf& leaf,
                             const MatrixX<Scalar>& p, const MatrixX<Scalar>& a) {
  switch (leaf.kind) {
    case ManifoldKind::Euclidean:
      return a;
    case ManifoldKind::Sphere:
    case ManifoldKind::Stiefel:
      return a - p * sym<Scalar>(p.transpose() * a);
    case ManifoldKind::Oblique: {
      const VectorX<Scalar> d = (p.array() * a.array()).colwise().sum().transpose();
      return a - p * d.asDiagonal();
    }
    case ManifoldKind::GeneralizedStiefel: {
      const MatrixX<Scalar> akp = a * leaf.gram->gram * p.transpose();
      return a - sym<Scalar>(akp) * p;
    }
    default:
      break;
  }
  throw Error(ErrorCode::Domain, "project_tangent: unsupported leaf");
}

/// Thin QR with the triangular factor's diagonal made strictly positive.
template <typename Scalar>
MatrixX<Scalar> qr_positive(const MatrixX<Scalar>& v) {
  const Index d = v.rows(), k = v.cols();
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(v);
  MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(d, k);
  const auto r = qr.matrixQR().diagonal();
  const Scalar scale = std::max(r.cwiseAbs().maxCoeff(), Scalar(1));
  for (Index j = 0; j < k; ++j) {
    if (!(std::abs(r(j)) > Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale))
      throw Error(ErrorCode::DegenerateStep, "retract: rank-deficient QR step");
    if (r(j) < Scalar(0)) q.col(j) = -q.col(j);
  }
  return q;
}

/// (V K V^T)^{-1/2} V for a k x n matrix V.
template <typename Scalar>
MatrixX<Scalar> generalized_polar(const GramFactor<Scalar>& g, const MatrixX<Scalar>& v) {
  const MatrixX<Scalar> s = sym<Scalar>(v * g.gram * v.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(s);
  if (es.info() != Eigen::Success || !s.allFinite())
    throw Error(ErrorCode::DegenerateStep, "retract: eigen-decomposition failed");
  const Scalar lo = es.eigenvalues().minCoeff();
  const Scalar hi = es.eigenvalues().maxCoeff();
  if (!(lo > Scalar(64) * std::numeric_limits<Scalar>::epsilon() * hi))
    throw Error(ErrorCode::DegenerateStep, "retract: rank-deficient generalized polar step");
  return es.operatorInverseSqrt() * v;
}

template <typename Scalar>
MatrixX<Scalar> retract_leaf(const typename Manifold<Scalar>::Leaf& leaf,
                             const MatrixX<Scalar>& p, const MatrixX<Scalar>& t) {
  if (t.isZero(0)) return p;
  const MatrixX<Scalar> v = p + t;
  switch (leaf.kind) {
    case ManifoldKind::Euclidean:
      return v;
    case ManifoldKind::Sphere: {
      const Scalar n = v.norm();
      if (!(n > std::numeric_limits<Scalar>::min()))
        throw Error(ErrorCode::DegenerateStep, "retract: zero vector on sphere");
      return v / n;
    }
    case ManifoldKind::Stiefel:
      return qr_positive<Scalar>(v);
    case ManifoldKind::Oblique: {
      MatrixX<Scalar> out = v;
      for (Index j = 0; j < v.cols(); ++j) {
        const Scalar n = v.col(j).norm();
        if (!(n > std::numeric_limits<Scalar>::min()))
          throw Error(ErrorCode::DegenerateStep, "retract: zero column on oblique manifold");
        out.col(j) /= n;
      }
      return out;
    }
    case ManifoldKind::GeneralizedStiefel:
      return generalized_polar<Scalar>(*leaf.gram, v);
    default:
      break;
  }
  throw Error(ErrorCode::Domain, "retract: unsupported leaf");
}

template <typename Scalar>
Scalar feasibility_leaf(const typename Manifold<Scalar>::Leaf& leaf, const MatrixX<Scalar>& p) {
  const Index k = p.cols();
  switch (leaf.kind) {
    case ManifoldKind::Euclidean:
      return Scalar(0);
    case ManifoldKind::Sphere:
      return std::abs(p.norm() - Scalar(1));
    case ManifoldKind::Stiefel:
      return (p.transpose() * p - MatrixX<Scalar>::Identity(k, k)).norm();
    case ManifoldKind::Oblique:
      return (p.colwise().squaredNorm().array() - Scalar(1)).matrix().norm();
    case ManifoldKind::GeneralizedStiefel: {
      const Index r = p.rows();
      return (p * leaf.gram->gram * p.transpose() - MatrixX<Scalar>::Identity(r, r)).norm();
    }
    default:
      break;
  }
  return Scalar(0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations

template <typename Scalar, typename Tag>
TangentVector<Scalar> project_tangent(const Manifold<Scalar>& m, const Point<Scalar>& p,
                                      const Blocks<Scalar, Tag>& a) {
  m.check(p, "project_tangent(point)");
  m.check(a, "project_tangent(vector)");
  TangentVector<Scalar> out;
  out.blocks.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out.blocks.push_back(detail::project_leaf<Scalar>(m.leaves()[i], p[i], a[i]));
  return out;
}

/// Maps a Euclidean gradient to the Riemannian gradient:
///   Stiefel             g - p g^T p                      (canonical metric)
///   generalized Stiefel g K^{-1} - p g^T p               (K^{-1} via Cholesky)
///   sphere, oblique     tangent projection
///   Euclidean           g
template <typename Scalar>
TangentVector<Scalar> egrad_to_rgrad(const Manifold<Scalar>& m, const Point<Scalar>& p,
                                     const AmbientVector<Scalar>& g) {
  m.check(p, "egrad_to_rgrad(point)");
  m.check(g, "egrad_to_rgrad(gradient)");
  TangentVector<Scalar> out;
  out.blocks.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& leaf = m.leaves()[i];
    switch (leaf.kind) {
      case ManifoldKind::Stiefel:
        out.blocks.push_back(g[i] - p[i] * g[i].transpose() * p[i]);
        break;
      case ManifoldKind::GeneralizedStiefel:
        out.blocks.push_back(leaf.gram->right_solve(g[i]) - p[i] * g[i].transpose() * p[i]);
        break;
      default:
        out.blocks.push_back(detail::project_leaf<Scalar>(leaf, p[i], g[i]));
        break;
    }
  }
  return out;
}

/// Throws ErrorCode::DegenerateStep when p + t cannot be normalized; the
/// solver responds by shrinking the step.
template <typename Scalar>
Point<Scalar> retract(const Manifold<Scalar>& m, const Point<Scalar>& p,
                      const TangentVector<Scalar>& t) {
  m.check(p, "retract(point)");
  m.check(t, "retract(tangent)");
  Point<Scalar> out;
  out.blocks.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out.blocks.push_back(detail::retract_leaf<Scalar>(m.leaves()[i], p[i], t[i]));
  return out;
}

/// Projection-based transport from the tangent space at `from` to the one at `to`.
template <typename Scalar>
TangentVector<Scalar> transport(const Manifold<Scalar>& m, const Point<Scalar>& from,
                                const Point<Scalar>& to, const TangentVector<Scalar>& t) {
  m.check(from, "transport(from)");
  return project_tangent(m, to, t);
}

/// Frobenius inner product, summed over blocks.
template <typename Scalar>
Scalar inner(const Manifold<Scalar>& m, const Point<Scalar>& p, const TangentVector<Scalar>& a,
             const TangentVector<Scalar>& b) {
  m.check(p, "inner(point)");
  m.check(a, "inner(a)");
  m.check(b, "inner(b)");
  return frobenius_dot(a, b);
}

/// Gaussian blocks (column-major draws, leaf order) mapped onto the manifold.
template <typename Scalar>
Point<Scalar> random_point(const Manifold<Scalar>& m, std::uint64_t seed) {
  Rng rng(seed);
  Point<Scalar> out;
  for (const auto& leaf : m.leaves()) {
    const MatrixX<Scalar> g = rng.gaussian(leaf.rows, leaf.cols).template cast<Scalar>();
    switch (leaf.kind) {
      case ManifoldKind::Euclidean:
        out.blocks.push_back(g);
        break;
      case ManifoldKind::Sphere:
        out.blocks.push_back(g / g.norm());
        break;
      case ManifoldKind::Stiefel:
        out.blocks.push_back(detail::qr_positive<Scalar>(g));
        break;
      case ManifoldKind::Oblique:
        out.blocks.push_back(g.colwise().normalized());
        break;
      case ManifoldKind::GeneralizedStiefel:
        out.blocks.push_back(detail::generalized_polar<Scalar>(*leaf.gram, g));
        break;
      default:
        throw Error(ErrorCode::Domain, "random_point: unsupported leaf");
    }
  }
  return out;
}

template <typename Scalar>
TangentVector<Scalar> zero_tangent(const Manifold<Scalar>& m) {
  TangentVector<Scalar> out;
  for (const auto& leaf : m.leaves())
    out.blocks.push_back(MatrixX<Scalar>::Zero(leaf.rows, leaf.cols));
  return out;
}

/// Largest constraint residual over all blocks (0 for Euclidean blocks).
template <typename Scalar>
Scalar feasibility_residual(const Manifold<Scalar>& m, const Point<Scalar>& p) {
  m.check(p, "feasibility_residual");
  Scalar r(0);
  for (std::size_t i = 0; i < p.size(); ++i)
    r = std::max(r, detail::feasibility_leaf<Scalar>(m.leaves()[i], p[i]));
  return r;
}

/// Largest violation of the linearized constraint at p; 0 for tangent vectors.
template <typename Scalar>
Scalar tangency_residual(const Manifold<Scalar>& m, const Point<Scalar>& p,
                         const TangentVector<Scalar>& t) {
  m.check(p, "tangency_residual(point)");
  m.check(t, "tangency_residual(tangent)");
  Scalar r(0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& leaf = m.leaves()[i];
    const auto& x = p[i];
    const auto& v = t[i];
    Scalar e(0);
    switch (leaf.kind) {
      case ManifoldKind::Sphere:
      case ManifoldKind::Stiefel:
        e = (x.transpose() * v + v.transpose() * x).norm();
        break;
      case ManifoldKind::Oblique:
        e = (x.array() * v.array()).colwise().sum().matrix().norm();
        break;
      case ManifoldKind::GeneralizedStiefel: {
        const MatrixX<Scalar> w = v * leaf.gram->gram * x.transpose();
        e = (w + w.transpose()).norm();
        break;
      }
      default:
        break;
    }
    r = std::max(r, e);
  }
  return r;
}

}  // namespace gods

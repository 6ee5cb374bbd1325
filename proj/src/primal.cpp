#include "gods/primal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/SVD>

#include "gods/data_io.hpp"

namespace gods {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Bods: return "bods";
    case Variant::Gods: return "gods";
    case Variant::GodsN: return "gods_n";
    case Variant::GodsO: return "gods_o";
    case Variant::GodsE: return "gods_e";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  if (t == "bods") return Variant::Bods;
  if (t == "gods") return Variant::Gods;
  if (t == "gods_n") return Variant::GodsN;
  if (t == "gods_o") return Variant::GodsO;
  if (t == "gods_e") return Variant::GodsE;
  throw Error(ErrorCode::Domain, "unknown variant '" + s + "'");
}

void GodsHyper::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::Domain, what); };
  if (k < 1) bad("k must be >= 1");
  if (variant == Variant::Bods && k != 1) bad("bods requires k = 1");
  if (!(eta > 0)) bad("eta must be > 0");
  if (!(nu > 0)) bad("nu must be > 0");
  if (!(lambda >= 0)) bad("lambda must be >= 0");
  if (!(p_norm >= 1)) bad("p_norm must be >= 1");
}

namespace {

void check_data(const FramePair& f, const Matrix& X, const char* where) {
  if (X.rows() == 0) throw Error(ErrorCode::EmptyData, std::string(where) + ": no samples");
  require_shape(X.cols() == f.dim(), std::string(where) + ": X has " + std::to_string(X.cols()) +
                                         " columns, frames have dimension " +
                                         std::to_string(f.dim()));
  require_shape(f.w2.rows() == f.dim() && f.w2.cols() == f.k() && f.b1.size() == f.k() &&
                    f.b2.size() == f.k(),
                std::string(where) + ": inconsistent frame shapes");
  if (f.scaled())
    require_shape(f.r1.size() == f.k() && f.r2.size() == f.k(),
                  std::string(where) + ": scale vectors must have k entries");
}

double hinge(double t) { return t > 0 ? t : 0.0; }

/// Column index of the row minimum (maximum); ties go to the lowest index.
Index row_argmin(const Matrix& e, Index i) {
  Index best = 0;
  for (Index k = 1; k < e.cols(); ++k)
    if (e(i, k) < e(i, best)) best = k;
  return best;
}

Index row_argmax(const Matrix& e, Index i) {
  Index best = 0;
  for (Index k = 1; k < e.cols(); ++k)
    if (e(i, k) > e(i, best)) best = k;
  return best;
}

double p_norm_of(const Vector& r, double p) {
  return std::pow(r.array().abs().pow(p).sum(), 1.0 / p);
}

/// d/dr ||r||_p for r with at least one nonzero entry.
Vector p_norm_grad(const Vector& r, double p) {
  const double nrm = p_norm_of(r, p);
  if (nrm == 0.0) return Vector::Zero(r.size());
  return (r.array().sign() * r.array().abs().pow(p - 1.0) * std::pow(nrm, 1.0 - p)).matrix();
}

double soft_orthogonality(const Matrix& w) {
  return (w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).squaredNorm();
}

}  // namespace

double bods_objective(const FramePair& f, const Matrix& X, const GodsHyper& hyper) {
  check_data(f, X, "bods_objective");
  require_shape(f.k() == 1, "bods_objective: k must be 1");
  const double n = static_cast<double>(X.rows());
  const double db = f.b1(0) - f.b2(0);
  const Vector a1 = (X * f.w1).array() + f.b1(0);
  const Vector a2 = (X * f.w2).array() + f.b2(0);
  double hinges = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double h1 = hinge(hyper.eta - a1(i));
    const double h2 = hinge(hyper.eta + a2(i));
    hinges += h1 * h1 + h2 * h2;
  }
  return 0.5 * (db * db - 2.0 * db) - f.w1.col(0).dot(f.w2.col(0)) +
         hyper.nu / (2.0 * n) * hinges;
}

FrameGradient bods_egrad(const FramePair& f, const Matrix& X, const GodsHyper& hyper) {
  check_data(f, X, "bods_egrad");
  require_shape(f.k() == 1, "bods_egrad: k must be 1");
  const double n = static_cast<double>(X.rows());
  const double c = hyper.nu / n;
  const Vector a1 = (X * f.w1).array() + f.b1(0);
  const Vector a2 = (X * f.w2).array() + f.b2(0);
  Vector h1(X.rows()), h2(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    h1(i) = hinge(hyper.eta - a1(i));
    h2(i) = hinge(hyper.eta + a2(i));
  }
  const double db = f.b1(0) - f.b2(0);
  FrameGradient g;
  g.dw1 = -f.w2 - c * X.transpose() * h1;
  g.dw2 = -f.w1 + c * X.transpose() * h2;
  g.db1 = Vector::Constant(1, db - 1.0 - c * h1.sum());
  g.db2 = Vector::Constant(1, -db + 1.0 + c * h2.sum());
  return g;
}

double gods_objective(const FramePair& f, const Matrix& X, const GodsHyper& hyper) {
  check_data(f, X, "gods_objective");
  const double n = static_cast<double>(X.rows());
  const Matrix w1 = f.effective_w1(), w2 = f.effective_w2();
  const Matrix e1 = (X * w1).rowwise() + f.b1.transpose();
  const Matrix e2 = (X * w2).rowwise() + f.b2.transpose();
  double hinges = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const double h1 = hinge(hyper.eta - e1.row(i).minCoeff());
    const double h2 = hinge(hyper.eta + e2.row(i).maxCoeff());
    hinges += h1 * h1 + h2 * h2;
  }
  double value = (e1.squaredNorm() + e2.squaredNorm()) / (2.0 * n) + hyper.nu / (2.0 * n) * hinges;
  switch (hyper.variant) {
    case Variant::GodsN:
      require_shape(f.scaled(), "gods_objective: gods_n needs column scales");
      value += 0.5 * hyper.lambda * (p_norm_of(f.r1, hyper.p_norm) + p_norm_of(f.r2, hyper.p_norm));
      break;
    case Variant::GodsO:
    case Variant::GodsE:
      value += 0.5 * hyper.lambda * (soft_orthogonality(w1) + soft_orthogonality(w2));
      break;
    default:
      break;
  }
  return value;
}

FrameGradient gods_egrad(const FramePair& f, const Matrix& X, const GodsHyper& hyper) {
  check_data(f, X, "gods_egrad");
  const double n = static_cast<double>(X.rows());
  const Matrix w1 = f.effective_w1(), w2 = f.effective_w2();
  const Matrix e1 = (X * w1).rowwise() + f.b1.transpose();
  const Matrix e2 = (X * w2).rowwise() + f.b2.transpose();

  // Residuals R with dF/dE = R: the quadratic part contributes E/n, each active
  // hinge adds -+nu h/n at the row's extreme column.
  Matrix r1 = e1 / n, r2 = e2 / n;
  for (Index i = 0; i < X.rows(); ++i) {
    const Index k1 = row_argmin(e1, i);
    const Index k2 = row_argmax(e2, i);
    const double h1 = hinge(hyper.eta - e1(i, k1));
    const double h2 = hinge(hyper.eta + e2(i, k2));
    r1(i, k1) -= hyper.nu * h1 / n;
    r2(i, k2) += hyper.nu * h2 / n;
  }

  Matrix dw1 = X.transpose() * r1;
  Matrix dw2 = X.transpose() * r2;
  FrameGradient g;
  g.db1 = r1.colwise().sum().transpose();
  g.db2 = r2.colwise().sum().transpose();

  switch (hyper.variant) {
    case Variant::GodsN: {
      require_shape(f.scaled(), "gods_egrad: gods_n needs column scales");
      // W = Q diag(r): dQ = dW diag(r), dr_k = Q_k . dW_k.
      g.dr1 = (f.w1.array() * dw1.array()).colwise().sum().transpose();
      g.dr2 = (f.w2.array() * dw2.array()).colwise().sum().transpose();
      g.dr1 += 0.5 * hyper.lambda * p_norm_grad(f.r1, hyper.p_norm);
      g.dr2 += 0.5 * hyper.lambda * p_norm_grad(f.r2, hyper.p_norm);
      dw1 = dw1 * f.r1.asDiagonal();
      dw2 = dw2 * f.r2.asDiagonal();
      break;
    }
    case Variant::GodsO:
    case Variant::GodsE: {
      const Matrix eye = Matrix::Identity(w1.cols(), w1.cols());
      dw1 += 2.0 * hyper.lambda * w1 * (w1.transpose() * w1 - eye);
      dw2 += 2.0 * hyper.lambda * w2 * (w2.transpose() * w2 - eye);
      break;
    }
    default:
      break;
  }
  g.dw1 = std::move(dw1);
  g.dw2 = std::move(dw2);
  return g;
}

double primal_objective(const FramePair& f, const Matrix& X, const GodsHyper& hyper) {
  return hyper.variant == Variant::Bods ? bods_objective(f, X, hyper) : gods_objective(f, X, hyper);
}

FrameGradient primal_egrad(const FramePair& f, const Matrix& X, const GodsHyper& hyper) {
  return hyper.variant == Variant::Bods ? bods_egrad(f, X, hyper) : gods_egrad(f, X, hyper);
}

namespace {

/// First K left singular vectors of the selected rows, sign-fixed.
Matrix frame_from_rows(const Matrix& X, const std::vector<Index>& rows, Index k) {
  Matrix s(X.cols(), static_cast<Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) s.col(static_cast<Index>(j)) = X.row(rows[j]).transpose();
  Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeFullU);
  Matrix w = svd.matrixU().leftCols(k);
  for (Index c = 0; c < k; ++c) {
    const double tol = 1e-12 * w.col(c).cwiseAbs().maxCoeff();
    for (Index i = 0; i < w.rows(); ++i) {
      if (std::abs(w(i, c)) > tol) {
        if (w(i, c) < 0) w.col(c) = -w.col(c);
        break;
      }
    }
  }
  return w;
}

}  // namespace

InitResult init_frames(const Matrix& X, Index k, std::uint64_t seed) {
  require_shape(k >= 1, "init_frames: k must be >= 1");
  require_shape(X.cols() >= k, "init_frames: dimension " + std::to_string(X.cols()) +
                                   " is smaller than k = " + std::to_string(k));
  const Index d = X.cols();
  InitResult out;
  out.frames.b1 = Vector::Zero(k);
  out.frames.b2 = Vector::Zero(k);
  const Index m = 3 * k;
  if (X.rows() < m) {
    const auto st = Manifold<double>::stiefel(d, k);
    const Point<double> p = random_point(Manifold<double>::product({st, st}), seed);
    out.frames.w1 = p[0];
    out.frames.w2 = p[1];
    out.random_fallback = true;
    return out;
  }
  std::vector<Index> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector norms = X.rowwise().norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return norms(a) < norms(b); });
  const std::vector<Index> near(order.begin(), order.begin() + m);
  const std::vector<Index> far(order.end() - m, order.end());
  out.frames.w1 = frame_from_rows(X, near, k);
  out.frames.w2 = frame_from_rows(X, far, k);
  return out;
}

Manifold<double> primal_manifold(Variant v, Index d, Index k) {
  using M = Manifold<double>;
  const M bias = M::euclidean(k, 1);
  switch (v) {
    case Variant::Bods: {
      require_shape(k == 1, "primal_manifold: bods requires k = 1");
      const M s = M::sphere(d);
      return M::product({s, s, bias, bias});
    }
    case Variant::Gods: {
      const M s = M::stiefel(d, k);
      return M::product({s, s, bias, bias});
    }
    case Variant::GodsN: {
      const M s = M::stiefel(d, k);
      return M::product({s, s, bias, bias, bias, bias});
    }
    case Variant::GodsO: {
      const M o = M::oblique(d, k);
      return M::product({o, o, bias, bias});
    }
    case Variant::GodsE: {
      require_shape(d >= k && k >= 1, "primal_manifold: need d >= k >= 1");
      const M e = M::euclidean(d, k);
      return M::product({e, e, bias, bias});
    }
  }
  throw Error(ErrorCode::Domain, "primal_manifold: unknown variant");
}

Point<double> pack_frames(const FramePair& f, Variant v) {
  Point<double> p({f.w1, f.w2, f.b1, f.b2});
  if (v == Variant::GodsN) {
    require_shape(f.scaled(), "pack_frames: gods_n needs column scales");
    if (!(f.r1.array() > 0).all() || !(f.r2.array() > 0).all())
      throw Error(ErrorCode::Domain, "pack_frames: column scales must be positive");
    p.blocks.push_back(f.r1.array().log().matrix());
    p.blocks.push_back(f.r2.array().log().matrix());
  }
  return p;
}

FramePair unpack_frames(const Point<double>& p, Variant v) {
  const std::size_t expected = v == Variant::GodsN ? 6 : 4;
  require_shape(p.size() == expected, "unpack_frames: wrong block count");
  FramePair f;
  f.w1 = p[0];
  f.w2 = p[1];
  f.b1 = p[2].col(0);
  f.b2 = p[3].col(0);
  if (v == Variant::GodsN) {
    f.r1 = p[4].col(0).array().exp().matrix();
    f.r2 = p[5].col(0).array().exp().matrix();
  }
  return f;
}

Objective<double> primal_objective_handle(const Matrix& X, const GodsHyper& hyper) {
  Objective<double> obj;
  obj.cost = [X, hyper](const Point<double>& p) {
    return primal_objective(unpack_frames(p, hyper.variant), X, hyper);
  };
  obj.egrad = [X, hyper](const Point<double>& p) {
    const FramePair f = unpack_frames(p, hyper.variant);
    const FrameGradient g = primal_egrad(f, X, hyper);
    AmbientVector<double> out({g.dw1, g.dw2, g.db1, g.db2});
    if (hyper.variant == Variant::GodsN) {
      // Chain rule through r = exp(s).
      out.blocks.push_back(g.dr1.cwiseProduct(f.r1));
      out.blocks.push_back(g.dr2.cwiseProduct(f.r2));
    }
    return out;
  };
  return obj;
}

namespace {

PrimalTrainResult train_from(const Matrix& X, const GodsHyper& hyper, const SolverConfig& cfg,
                             FramePair init) {
  if (hyper.variant == Variant::GodsN && !init.scaled()) {
    init.r1 = Vector::Ones(init.k());
    init.r2 = Vector::Ones(init.k());
  } else if (hyper.variant != Variant::GodsN) {
    init.r1.resize(0);
    init.r2.resize(0);
  }
  const auto m = primal_manifold(hyper.variant, X.cols(), hyper.k);
  auto result = minimize(primal_objective_handle(X, hyper), m, pack_frames(init, hyper.variant), cfg);
  PrimalTrainResult out;
  out.model.frames = unpack_frames(result.point, hyper.variant);
  out.model.hyper = hyper;
  out.model.eta_effective = hyper.eta;
  out.model.feature_dim = X.cols();
  out.model.normalization = hyper.normalize;
  out.report = std::move(result.report);
  return out;
}

}  // namespace

PrimalTrainResult train_primal(const Matrix& X, const GodsHyper& hyper, const SolverConfig& cfg,
                               std::uint64_t seed) {
  hyper.validate();
  if (X.rows() == 0) throw Error(ErrorCode::EmptyData, "train_primal: no samples");
  Matrix data = X;
  Index zero_rows = 0;
  if (hyper.normalize) {
    Normalized nrm = l2_normalize(X);
    data = std::move(nrm.features);
    zero_rows = nrm.zero_rows;
  }
  // SVD frames are orthonormal, hence feasible for every variant's manifold.
  InitResult init = init_frames(data, hyper.k, seed);
  PrimalTrainResult out = train_from(data, hyper, cfg, std::move(init.frames));
  out.random_fallback = init.random_fallback;
  out.zero_rows = zero_rows;
  return out;
}

PrimalTrainResult train_primal(const Matrix& X, const GodsHyper& hyper, const SolverConfig& cfg,
                               const FramePair& init) {
  hyper.validate();
  if (X.rows() == 0) throw Error(ErrorCode::EmptyData, "train_primal: no samples");
  require_shape(init.dim() == X.cols() && init.k() == hyper.k,
                "train_primal: initial frames do not match data and k");
  return train_from(X, hyper, cfg, init);
}

ScorePair primal_scores(const TrainedPrimalModel& model, const Vector& x) {
  require_shape(x.size() == model.feature_dim,
                "primal_scores: expected " + std::to_string(model.feature_dim) +
                    " features, got " + std::to_string(x.size()));
  Vector v = x;
  if (model.normalization) {
    const double nrm = v.norm();
    if (nrm > 0) v /= nrm;
  }
  const Vector a1 = model.frames.effective_w1().transpose() * v + model.frames.b1;
  const Vector a2 = model.frames.effective_w2().transpose() * v + model.frames.b2;
  return {a1.minCoeff(), a2.maxCoeff()};
}

}  // namespace gods

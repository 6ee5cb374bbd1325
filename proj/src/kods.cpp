#include "gods/kods.hpp"

#include "gods/data_io.hpp"
#include "gods/random.hpp"

namespace gods {

void KodsHyper::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::Domain, what); };
  if (k < 1) bad("k must be >= 1");
  if (!(eta > 0)) bad("eta must be > 0");
  if (!(lambda >= 0)) bad("lambda must be >= 0");
  if (!(relative_jitter > 0)) bad("relative jitter must be > 0");
}

namespace {

void check_duals(const DualVars& d, const Matrix& gram, const char* where) {
  require_shape(gram.rows() == gram.cols(), std::string(where) + ": gram must be square");
  require_shape(d.y.rows() == d.z.rows() && d.y.cols() == d.z.cols(),
                std::string(where) + ": Y and Z shapes differ");
  require_shape(d.y.cols() == gram.rows(), std::string(where) + ": duals have " +
                                               std::to_string(d.y.cols()) +
                                               " columns, gram is " +
                                               std::to_string(gram.rows()) + " x " +
                                               std::to_string(gram.cols()));
}

}  // namespace

double kods_objective(const DualVars& d, const Matrix& gram, const KodsHyper& hyper) {
  check_duals(d, gram, "kods_objective");
  const Matrix a = d.y.cwiseAbs2();
  const Matrix b = d.z.cwiseAbs2();
  const Vector a1 = a.rowwise().sum();
  const Vector diff = a1 - b.rowwise().sum();
  return 0.5 * a1.squaredNorm() + (a * gram).cwiseProduct(b).sum() -
         hyper.eta * (a.sum() + b.sum()) + 0.5 * hyper.lambda * diff.squaredNorm();
}

DualGradient kods_egrad(const DualVars& d, const Matrix& gram, const KodsHyper& hyper) {
  check_duals(d, gram, "kods_egrad");
  const Matrix a = d.y.cwiseAbs2();
  const Matrix b = d.z.cwiseAbs2();
  // X E_n broadcasts the row sums of X across every column.
  const Vector ra = a.rowwise().sum();
  const Vector rb = b.rowwise().sum();
  const double lam = hyper.lambda;
  const Index n = a.cols();
  const Matrix ae = ra.replicate(1, n);
  const Matrix be = rb.replicate(1, n);
  DualGradient g;
  g.dy = d.y.cwiseProduct((2.0 + 2.0 * lam) * ae + 2.0 * (b * gram) - 2.0 * lam * be) -
         2.0 * hyper.eta * d.y;
  g.dz = d.z.cwiseProduct(2.0 * lam * be + 2.0 * (a * gram) - 2.0 * lam * ae) -
         2.0 * hyper.eta * d.z;
  return g;
}

Intercepts recover_primal(const DualVars& d, const Matrix& gram, double eta) {
  check_duals(d, gram, "recover_primal");
  const Matrix bk = d.z.cwiseAbs2() * gram;
  const Matrix ak = d.y.cwiseAbs2() * gram;
  Intercepts out;
  out.b1 = (eta - bk.array()).rowwise().maxCoeff();
  out.b2 = (ak.array() - eta).rowwise().minCoeff();
  return out;
}

Manifold<double> kods_manifold(const Matrix& gram, Index k) {
  const auto g = Manifold<double>::generalized_stiefel(gram.rows(), k, gram);
  return Manifold<double>::product({g, g});
}

Objective<double> kods_objective_handle(const Matrix& gram, const KodsHyper& hyper) {
  Objective<double> obj;
  obj.cost = [gram, hyper](const Point<double>& p) {
    return kods_objective(DualVars{p[0], p[1]}, gram, hyper);
  };
  obj.egrad = [gram, hyper](const Point<double>& p) {
    DualGradient g = kods_egrad(DualVars{p[0], p[1]}, gram, hyper);
    return AmbientVector<double>({std::move(g.dy), std::move(g.dz)});
  };
  return obj;
}

DualVars kods_init(const Manifold<double>& m, Index n, Index k, std::uint64_t seed) {
  require_shape(m.num_blocks() == 2 && m.leaves()[0].kind == ManifoldKind::GeneralizedStiefel,
                "kods_init: expected a product of two generalized Stiefel manifolds");
  const double base = 1.0 / static_cast<double>(n * k);
  // The constant start is rank one; a small relative perturbation makes its
  // generalized polar factor well defined.
  auto start = [&](std::uint64_t s, const Manifold<double>::Leaf& leaf) {
    Rng rng(s);
    Matrix v(k, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < k; ++i) v(i, j) = base * (1.0 + 0.05 * rng.uniform(-1.0, 1.0));
    return detail::generalized_polar<double>(*leaf.gram, v);
  };
  return {start(seed, m.leaves()[0]), start(seed ^ 0x9e3779b97f4a7c15ULL, m.leaves()[1])};
}

KodsTrainResult kods_train(const Matrix& X, const KernelSpec& kernel, const KodsHyper& hyper,
                           const SolverConfig& cfg, std::uint64_t seed) {
  hyper.validate();
  kernel.validate();
  if (X.rows() == 0) throw Error(ErrorCode::EmptyData, "kods_train: no samples");
  const Index n = X.rows();
  const Index k = hyper.k;
  require_shape(n >= k, "kods_train: need at least k = " + std::to_string(k) + " samples");

  KodsTrainResult out;
  Matrix data = X;
  if (hyper.normalize) {
    Normalized nrm = l2_normalize(X);
    data = std::move(nrm.features);
    out.zero_rows = nrm.zero_rows;
  }
  const Matrix raw = gram(kernel, data);
  const double scale = raw.trace() / static_cast<double>(n);
  const PdMatrix<double> pd = ensure_pd(raw, hyper.relative_jitter * (scale > 0 ? scale : 1.0));

  const auto m = kods_manifold(pd.matrix, k);
  const DualVars init = kods_init(m, n, k, seed);
  auto result = minimize(kods_objective_handle(pd.matrix, hyper), m,
                         Point<double>({init.y, init.z}), cfg);

  KodsModel& model = out.model;
  model.duals = DualVars{result.point[0], result.point[1]};
  model.kernel = kernel;
  model.support = std::move(data);
  // Intercepts use the unshifted Gram so that training points scored through
  // the kernel columns meet the margin exactly.
  const Intercepts b = recover_primal(model.duals, raw, hyper.eta);
  model.b1 = b.b1;
  model.b2 = b.b2;
  model.hyper = hyper;
  model.eta_effective = hyper.eta;
  model.jitter = pd.jitter;
  model.normalization = hyper.normalize;

  const Matrix eye = Matrix::Identity(k, k);
  out.feasibility_y = (model.duals.y * pd.matrix * model.duals.y.transpose() - eye).norm();
  out.feasibility_z = (model.duals.z * pd.matrix * model.duals.z.transpose() - eye).norm();
  out.report = std::move(result.report);
  return out;
}

ScorePair kods_scores(const KodsModel& model, const Vector& x) {
  require_shape(x.size() == model.feature_dim(),
                "kods_scores: expected " + std::to_string(model.feature_dim()) +
                    " features, got " + std::to_string(x.size()));
  Vector v = x;
  if (model.normalization) {
    const double nrm = v.norm();
    if (nrm > 0) v /= nrm;
  }
  const Index n = model.support.rows();
  Vector kx(n);
  for (Index j = 0; j < n; ++j) kx(j) = kernel_eval(model.kernel, model.support.row(j), v.transpose());
  const Vector s1 = model.duals.z.cwiseAbs2() * kx + model.b1;
  const Vector s2 = -(model.duals.y.cwiseAbs2() * kx) + model.b2;
  return {s1.minCoeff(), s2.maxCoeff()};
}

}  // namespace gods

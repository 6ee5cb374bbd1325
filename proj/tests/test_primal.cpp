#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "gods/data_io.hpp"
#include "gods/experiments.hpp"
#include "gods/inference.hpp"
#include "gods/primal.hpp"
#include "oracles.hpp"

using namespace gods;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

FramePair k1_frames(const Vector& w1, const Vector& w2, double b1 = 0, double b2 = 0) {
  FramePair f;
  f.w1 = w1;
  f.w2 = w2;
  f.b1 = Vector::Constant(1, b1);
  f.b2 = Vector::Constant(1, b2);
  return f;
}

GodsHyper hyper_for(Variant v, int k) {
  GodsHyper h;
  h.variant = v;
  h.k = k;
  return h;
}

// 100 seeded 2-D points around (3, 3); after l2 normalization they occupy a
// short arc, which two linear frames can enclose.
Matrix gaussian_fixture(std::uint64_t seed, Index n = 100) {
  SynthParams p;
  p.n = n;
  p.d = 2;
  p.mean = vec({3.0, 3.0});
  p.cov = 0.25 * Matrix::Identity(2, 2);
  return synth(p, seed).features;
}

double ortho_residual(const Matrix& w) {
  return (w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).norm();
}

}  // namespace

TEST_SUITE("primal") {
  TEST_CASE("variant names round-trip") {
    for (Variant v : {Variant::Bods, Variant::Gods, Variant::GodsN, Variant::GodsO, Variant::GodsE})
      CHECK(variant_from_string(to_string(v)) == v);
    CHECK(variant_from_string("GODS-N") == Variant::GodsN);
    CHECK_THROWS_AS(variant_from_string("gods_x"), Error);
  }

  TEST_CASE("hyperparameter validation") {
    GodsHyper h;
    CHECK_NOTHROW(h.validate());
    CHECK(h.eta == 0.3);
    CHECK(h.nu == 1.0);
    CHECK(h.lambda == 1.0);
    CHECK(h.k == 3);
    CHECK(h.p_norm == 1.0);
    h.eta = 0;
    CHECK_THROWS_AS(h.validate(), Error);
    h = GodsHyper{};
    h.nu = 0;
    CHECK_THROWS_AS(h.validate(), Error);
    h = GodsHyper{};
    h.lambda = -1;
    CHECK_THROWS_AS(h.validate(), Error);
    h = GodsHyper{};
    h.k = 0;
    CHECK_THROWS_AS(h.validate(), Error);
    h = hyper_for(Variant::Bods, 2);
    CHECK_THROWS_AS(h.validate(), Error);
  }

  TEST_CASE("BODS objective: identical frames leave -1 plus the hinge terms") {
    // With w1 = w2 and b1 = b2, alpha = 0 and -w1^T w2 = -1. Both margins can
    // never be met at once (s >= eta and s <= -eta), so the remainder is the
    // hinge sum, evaluated here by hand.
    const Vector w = vec({0.6, 0.8});
    const FramePair f = k1_frames(w, w, 0.1, 0.1);
    Matrix x(2, 2);
    x << 1, 0, 0, 1;
    const GodsHyper h = hyper_for(Variant::Bods, 1);
    double hinge = 0;
    for (Index i = 0; i < 2; ++i) {
      const double s = w.dot(x.row(i).transpose()) + 0.1;
      hinge += std::pow(std::max(0.3 - s, 0.0), 2) + std::pow(std::max(0.3 + s, 0.0), 2);
    }
    CHECK(bods_objective(f, x, h) == doctest::Approx(-1.0 + hinge / 4.0).epsilon(1e-14));
  }

  TEST_CASE("BODS objective hand evaluation") {
    const FramePair f = k1_frames(vec({1, 0}), vec({0, 1}));
    Matrix x(1, 2);
    x << 1, 0;
    CHECK(bods_objective(f, x, hyper_for(Variant::Bods, 1)) == doctest::Approx(0.045).epsilon(1e-14));
  }

  TEST_CASE("BODS objective is invariant to duplicating every row") {
    Rng rng(4);
    const Matrix x = l2_normalize(rng.gaussian(7, 3)).features;
    Matrix xx(14, 3);
    xx << x, x;
    const auto p = random_point(primal_manifold(Variant::Bods, 3, 1), 2);
    const FramePair f = unpack_frames(p, Variant::Bods);
    const GodsHyper h = hyper_for(Variant::Bods, 1);
    CHECK(bods_objective(f, xx, h) == doctest::Approx(bods_objective(f, x, h)).epsilon(1e-14));
  }

  TEST_CASE("objectives reject empty data") {
    const FramePair f = k1_frames(vec({1, 0}), vec({0, 1}));
    const Matrix empty(0, 2);
    try {
      (void)gods_objective(f, empty, hyper_for(Variant::Gods, 1));
      FAIL("expected empty-data error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyData);
    }
    CHECK_THROWS_AS((void)bods_objective(f, empty, hyper_for(Variant::Bods, 1)), Error);
    CHECK_THROWS_AS((void)gods_egrad(f, empty, hyper_for(Variant::Gods, 1)), Error);
  }

  TEST_CASE("GODS objective hand evaluation") {
    const FramePair f = k1_frames(vec({1, 0}), vec({0, 1}));
    Matrix x(1, 2);
    x << 1, 0;
    CHECK(gods_objective(f, x, hyper_for(Variant::Gods, 1)) == doctest::Approx(0.545).epsilon(1e-14));
  }

  TEST_CASE("GODS objective on data orthogonal to both frames") {
    // At b = 0 the fit term vanishes and both hinges sit at s = 0, so only
    // nu * eta^2 remains; it goes to zero with the margin.
    FramePair f;
    f.w1 = Matrix::Identity(3, 3).leftCols(1);
    f.w2 = Matrix::Identity(3, 3).col(1);
    f.b1 = Vector::Zero(1);
    f.b2 = Vector::Zero(1);
    Matrix x(2, 3);
    x << 0, 0, 1, 0, 0, -2;
    GodsHyper h = hyper_for(Variant::Gods, 1);
    CHECK(gods_objective(f, x, h) == doctest::Approx(0.09).epsilon(1e-14));
    h.eta = 1e-200;
    CHECK(gods_objective(f, x, h) == 0.0);
  }

  TEST_CASE("GODS_E soft orthogonality is inactive on orthonormal frames") {
    Rng rng(5);
    const Matrix x = l2_normalize(rng.gaussian(10, 4)).features;
    const auto p = random_point(primal_manifold(Variant::Gods, 4, 2), 8);
    const FramePair f = unpack_frames(p, Variant::Gods);
    for (double lambda : {0.0, 1.0, 37.0}) {
      GodsHyper he = hyper_for(Variant::GodsE, 2);
      he.lambda = lambda;
      CHECK(gods_objective(f, x, he) ==
            doctest::Approx(gods_objective(f, x, hyper_for(Variant::Gods, 2))).epsilon(1e-13));
    }
  }

  TEST_CASE("GODS gradient hand evaluation") {
    const FramePair f = k1_frames(vec({1, 0}), vec({0, 1}));
    Matrix x(1, 2);
    x << 1, 0;
    const FrameGradient g = gods_egrad(f, x, hyper_for(Variant::Gods, 1));
    CHECK((g.dw1 - vec({1, 0})).norm() <= 1e-15);
  }

  TEST_CASE("zero data: only the hinges at the lowest index survive") {
    FramePair f;
    f.w1 = Matrix::Identity(3, 2);
    f.w2 = Matrix::Identity(3, 3).rightCols(2);
    f.b1 = Vector::Zero(2);
    f.b2 = Vector::Zero(2);
    const Matrix x = Matrix::Zero(4, 3);
    const GodsHyper h = hyper_for(Variant::Gods, 2);
    const FrameGradient g = gods_egrad(f, x, h);
    CHECK(g.dw1.norm() == 0.0);
    CHECK(g.dw2.norm() == 0.0);
    // d/db1 of (nu/2n) sum_i [eta - b1_k*]^2 = -nu eta on the tied argmin k* = 0.
    CHECK(g.db1(0) == doctest::Approx(-0.3));
    CHECK(g.db1(1) == 0.0);
    CHECK(g.db2(0) == doctest::Approx(0.3));
    CHECK(g.db2(1) == 0.0);
  }

  TEST_CASE("gradients of every variant pass finite differences") {
    for (const auto& e : run_gradchecks(17, 20)) {
      CAPTURE(e.name);
      CHECK(e.max_rel_error <= 1e-5);
    }
  }

  TEST_CASE("init_frames: identical points give the point itself") {
    const Vector x = vec({-0.6, 0.0, 0.8});
    const Matrix X = x.transpose().replicate(6, 1);
    const FramePair f = init_frames(X, 1, 0).frames;
    CHECK((f.w1 - (-x)).norm() <= 1e-12);
    CHECK((f.w2 - (-x)).norm() <= 1e-12);
    CHECK(f.b1.isZero(0));
    CHECK(f.b2.isZero(0));
  }

  TEST_CASE("init_frames: near and far subspaces") {
    Rng rng(31);
    Matrix X = rng.gaussian(30, 5);
    for (Index i = 0; i < 30; ++i) X.row(i) *= (0.1 + 0.1 * static_cast<double>(i)) / X.row(i).norm();
    const InitResult r = init_frames(X, 2, 7);
    CHECK_FALSE(r.random_fallback);
    CHECK(ortho_residual(r.frames.w1) <= 1e-12);
    CHECK(ortho_residual(r.frames.w2) <= 1e-12);
    // Row norms grow with the index, so rows 0..5 are nearest and 24..29 farthest.
    auto top2 = [](const Matrix& s) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(s.transpose() * s);
      return Matrix(es.eigenvectors().rightCols(2));
    };
    const Matrix u1 = top2(X.topRows(6)), u2 = top2(X.bottomRows(6));
    CHECK((r.frames.w1 * r.frames.w1.transpose() - u1 * u1.transpose()).norm() <= 1e-10);
    CHECK((r.frames.w2 * r.frames.w2.transpose() - u2 * u2.transpose()).norm() <= 1e-10);
    CHECK(init_frames(X, 2, 7).frames == r.frames);
  }

  TEST_CASE("init_frames falls back to random frames for tiny data") {
    Rng rng(1);
    const Matrix X = rng.gaussian(4, 3);
    const InitResult r = init_frames(X, 2, 5);
    CHECK(r.random_fallback);
    CHECK(ortho_residual(r.frames.w1) <= 1e-12);
    CHECK(init_frames(X, 2, 5).frames == r.frames);
    CHECK_THROWS_AS((void)init_frames(X, 4, 5), Error);
  }

  TEST_CASE("GODS training sandwiches every training point") {
    const Matrix X = gaussian_fixture(1);
    const PrimalTrainResult r = train_primal(X, hyper_for(Variant::Gods, 2), SolverConfig{}, 3);
    oracle::check_trace(r.report);
    int sandwiched = 0;
    for (Index i = 0; i < X.rows(); ++i) {
      const ScorePair s = primal_scores(r.model, X.row(i).transpose());
      sandwiched += s.s1 > s.s2;
    }
    CHECK(sandwiched == 100);
    const PrimalTrainResult again = train_primal(X, hyper_for(Variant::Gods, 2), SolverConfig{}, 3);
    CHECK(again.model.frames == r.model.frames);
    CHECK(again.report.objective_trace == r.report.objective_trace);
  }

  TEST_CASE("default hyperparameters train without override") {
    Rng rng(2);
    const Matrix X = rng.gaussian(40, 6);
    SolverConfig cfg;
    cfg.max_iters = 50;
    const PrimalTrainResult r = train_primal(X, GodsHyper{}, cfg, 0);
    oracle::check_trace(r.report);
    CHECK(r.model.frames.k() == 3);
    CHECK(r.model.eta_effective == 0.3);
  }

  TEST_CASE("trained frames stay feasible for every variant") {
    Rng rng(6);
    const Matrix X = rng.gaussian(40, 5);
    for (Variant v : {Variant::Bods, Variant::Gods, Variant::GodsN, Variant::GodsO, Variant::GodsE}) {
      CAPTURE(to_string(v));
      const int k = v == Variant::Bods ? 1 : 2;
      SolverConfig cfg;
      cfg.max_iters = 200;
      const PrimalTrainResult r = train_primal(X, hyper_for(v, k), cfg, 1);
      oracle::check_trace(r.report);
      const auto m = primal_manifold(v, 5, k);
      CHECK(feasibility_residual(m, pack_frames(r.model.frames, v)) <= 1e-8);
      if (v == Variant::GodsN) {
        CHECK((r.model.frames.r1.array() > 0).all());
        CHECK((r.model.frames.r2.array() > 0).all());
      }
    }
  }

  TEST_CASE("row permutation leaves the objective and the trained model unchanged") {
    const Matrix X = l2_normalize(gaussian_fixture(4, 30)).features;
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(30);
    perm.setIdentity();
    Rng rng(9);
    for (Index i = 29; i > 0; --i)
      std::swap(perm.indices()(i), perm.indices()(static_cast<Index>(rng.below(static_cast<std::uint64_t>(i) + 1))));
    const Matrix Xp = perm * X;
    const GodsHyper h = hyper_for(Variant::Gods, 2);
    const FramePair init = init_frames(X, 2, 0).frames;
    CHECK(gods_objective(init, Xp, h) == doctest::Approx(gods_objective(init, X, h)).epsilon(1e-13));
    // Summation order differs under permutation, and rounding differences grow
    // along the iterates; a short run keeps them below the tolerance.
    SolverConfig cfg;
    cfg.max_iters = 12;
    const auto a = train_primal(X, h, cfg, init);
    const auto b = train_primal(Xp, h, cfg, init);
    oracle::check_trace(a.report);
    oracle::check_trace(b.report);
    CHECK((a.model.frames.w1 - b.model.frames.w1).norm() <= 1e-8);
    CHECK((a.model.frames.w2 - b.model.frames.w2).norm() <= 1e-8);
    CHECK((a.model.frames.b1 - b.model.frames.b1).norm() <= 1e-8);
  }

  TEST_CASE("GODS_E orthogonality residual shrinks as lambda grows") {
    Rng rng(12);
    const Matrix X = rng.gaussian(50, 6);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {1.0, 10.0, 100.0}) {
      GodsHyper h = hyper_for(Variant::GodsE, 3);
      h.lambda = lambda;
      const PrimalTrainResult r = train_primal(X, h, SolverConfig{}, 2);
      oracle::check_trace(r.report);
      const double res = std::max(ortho_residual(r.model.frames.w1), ortho_residual(r.model.frames.w2));
      CAPTURE(lambda);
      CHECK(res <= previous);
      previous = res;
    }
    CHECK(previous < 1e-2);
  }

  TEST_CASE("in-class count never increases with eta on a fixed model") {
    const Matrix X = gaussian_fixture(5);
    const PrimalTrainResult r = train_primal(X, hyper_for(Variant::Gods, 2), SolverConfig{}, 0);
    long previous = std::numeric_limits<long>::max();
    for (double eta : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      long count = 0;
      for (Index i = 0; i < X.rows(); ++i) {
        const ScorePair s = primal_scores(r.model, X.row(i).transpose());
        count += classify(s.s1, s.s2, eta) == Label::InClass;
      }
      CHECK(count <= previous);
      previous = count;
    }
  }

  TEST_CASE("primal_scores") {
    TrainedPrimalModel m;
    m.feature_dim = 2;
    m.normalization = false;
    m.frames = k1_frames(vec({1, 0}), vec({0, 1}));
    ScorePair s = primal_scores(m, vec({1, 0}));
    CHECK(s.s1 == 1.0);
    s = primal_scores(m, vec({0, 0}));
    CHECK(s.s1 == 0.0);
    CHECK(s.s2 == 0.0);
    CHECK_THROWS_AS((void)primal_scores(m, vec({1, 0, 0})), Error);

    TrainedPrimalModel k2;
    k2.feature_dim = 3;
    k2.normalization = false;
    k2.frames.w1 = Matrix::Identity(3, 3).rightCols(2);
    k2.frames.w2 = Matrix::Identity(3, 3).rightCols(2);
    k2.frames.b1 = vec({0.7, 0.4});
    k2.frames.b2 = vec({-0.9, -0.5});
    s = primal_scores(k2, vec({1, 0, 0}));
    CHECK(s.s1 == 0.4);
    CHECK(s.s2 == -0.5);
  }

  TEST_CASE("GODS_N scores apply the column scales") {
    TrainedPrimalModel m;
    m.feature_dim = 2;
    m.normalization = false;
    m.hyper.variant = Variant::GodsN;
    m.frames = k1_frames(vec({1, 0}), vec({0, 1}));
    m.frames.r1 = vec({2.0});
    m.frames.r2 = vec({3.0});
    const ScorePair s = primal_scores(m, vec({0.5, 0.5}));
    CHECK(s.s1 == 1.0);
    CHECK(s.s2 == 1.5);
  }
}

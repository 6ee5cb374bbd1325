#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gods/rcg.hpp"
#include "oracles.hpp"

using namespace gods;

namespace {

Objective<double> rayleigh(const Matrix& a) {
  return {[a](const Point<double>& p) { return (p[0].transpose() * a * p[0])(0, 0); },
          [a](const Point<double>& p) { return AmbientVector<double>({Matrix(2.0 * a * p[0])}); }};
}

// min |X - W B|_F^2 over St(6, 3); minimizer W* = U V^T from svd(X B^T).
Objective<double> procrustes(const Matrix& x, const Matrix& b) {
  return {[x, b](const Point<double>& p) { return (x - p[0] * b).squaredNorm(); },
          [x, b](const Point<double>& p) {
            return AmbientVector<double>({Matrix(-2.0 * (x - p[0] * b) * b.transpose())});
          }};
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("stationary start exits immediately") {
    const Matrix a = Vector::LinSpaced(4, 1, 4).asDiagonal();
    const auto m = Manifold<double>::sphere(4);
    const Point<double> p({Matrix(Vector::Unit(4, 0))});
    const auto r = minimize(rayleigh(a), m, p, SolverConfig{});
    CHECK(r.report.iterations == 0);
    CHECK(r.report.converged);
    CHECK(r.point == p);
  }

  TEST_CASE("Rayleigh quotient on the sphere reaches the smallest eigenvalue") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      const Matrix g = rng.gaussian(5, 5);
      const Matrix a = 0.5 * (g + g.transpose());
      const auto m = Manifold<double>::sphere(5);
      SolverConfig cfg;
      cfg.grad_tol = 1e-9;
      const auto r = minimize(rayleigh(a), m, random_point(m, seed + 10), cfg);
      oracle::check_trace(r.report);
      Eigen::SelfAdjointEigenSolver<Matrix> es(a);
      CHECK(r.report.iterations <= 500);
      CHECK(std::abs(r.report.objective_trace.back() - es.eigenvalues()(0)) <= 1e-6);
      CHECK(feasibility_residual(m, r.point) <= 1e-8);
    }
  }

  TEST_CASE("Procrustes on Stiefel matches the SVD closed form") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed + 100);
      const Matrix x = rng.gaussian(6, 4);
      const Matrix b = rng.gaussian(3, 4);
      const auto m = Manifold<double>::stiefel(6, 3);
      SolverConfig cfg;
      cfg.grad_tol = 1e-10;
      const auto r = minimize(procrustes(x, b), m, random_point(m, seed), cfg);
      oracle::check_trace(r.report);
      Eigen::JacobiSVD<Matrix> svd(x * b.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Matrix w = svd.matrixU() * svd.matrixV().transpose();
      CHECK(r.report.iterations <= 500);
      CHECK((r.point[0] - w).norm() <= 1e-6);
    }
  }

  TEST_CASE("minimize is deterministic") {
    Rng rng(3);
    const Matrix x = rng.gaussian(6, 4), b = rng.gaussian(3, 4);
    const auto m = Manifold<double>::stiefel(6, 3);
    const auto p = random_point(m, 1);
    const auto r1 = minimize(procrustes(x, b), m, p, SolverConfig{});
    const auto r2 = minimize(procrustes(x, b), m, p, SolverConfig{});
    CHECK(r1.report.objective_trace == r2.report.objective_trace);
    CHECK(r1.point == r2.point);
  }

  TEST_CASE("Fletcher-Reeves also converges") {
    Rng rng(4);
    const Matrix g = rng.gaussian(5, 5);
    const Matrix a = 0.5 * (g + g.transpose());
    SolverConfig cfg;
    cfg.beta_rule = BetaRule::FletcherReeves;
    const auto m = Manifold<double>::sphere(5);
    const auto r = minimize(rayleigh(a), m, random_point(m, 2), cfg);
    oracle::check_trace(r.report);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    CHECK(std::abs(r.report.objective_trace.back() - es.eigenvalues()(0)) <= 1e-6);
  }

  TEST_CASE("non-finite cost raises a numeric error") {
    const auto m = Manifold<double>::sphere(3);
    const Objective<double> bad{[](const Point<double>&) { return std::nan(""); },
                                [](const Point<double>& p) { return AmbientVector<double>({p[0]}); }};
    try {
      (void)minimize(bad, m, random_point(m, 1), SolverConfig{});
      FAIL("expected a numeric error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Numeric);
    }
  }

  TEST_CASE("a wrong gradient stalls instead of throwing") {
    const auto m = Manifold<double>::euclidean(2, 1);
    const Objective<double> obj{
        [](const Point<double>& p) { return p[0].squaredNorm(); },
        [](const Point<double>& p) { return AmbientVector<double>({Matrix(-2.0 * p[0])}); }};
    const auto r = minimize(obj, m, random_point(m, 1), SolverConfig{});
    CHECK(r.report.status == SolveStatus::Stalled);
    CHECK_FALSE(r.report.converged);
  }

  TEST_CASE("invalid solver config is rejected") {
    SolverConfig cfg;
    cfg.armijo_c = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = SolverConfig{};
    cfg.backtrack_factor = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }

  TEST_CASE("fd_gradient_check") {
    const auto m = Manifold<double>::euclidean(3, 2);
    const auto p = random_point(m, 1);
    const Objective<double> constant{
        [](const Point<double>&) { return 2.5; },
        [](const Point<double>& q) { return AmbientVector<double>({Matrix::Zero(q[0].rows(), q[0].cols())}); }};
    CHECK(fd_gradient_check(constant, p) == 0.0);
    const Objective<double> quad{
        [](const Point<double>& q) { return q[0].squaredNorm(); },
        [](const Point<double>& q) { return AmbientVector<double>({Matrix(2.0 * q[0])}); }};
    CHECK(fd_gradient_check(quad, p) <= 1e-8);
    CHECK_THROWS_AS((void)fd_gradient_check(quad, p, 0.0), Error);
  }
}

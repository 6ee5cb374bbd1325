#pragma once

// Riemannian conjugate gradient with backtracking Armijo line search.
//
//   x_{k+1} = R_{x_k}(t_k d_k),   d_k = -grad f(x_k) + beta_k T(d_{k-1})
//
// beta is Polak-Ribiere+ (default) or Fletcher-Reeves, computed with Frobenius
// inner products of transported Riemannian gradients. The direction falls back
// to -grad whenever it is not a descent direction or every restart_period
// iterations.

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gods/manifold.hpp"

namespace gods {

enum class BetaRule { PolakRibierePlus, FletcherReeves };

struct SolverConfig {
  int max_iters = 500;
  double grad_tol = 1e-6;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double initial_step = 1.0;
  BetaRule beta_rule = BetaRule::PolakRibierePlus;
  /// 0 selects the ambient dimension of the manifold (d*K for a frame).
  int restart_period = 0;
  int max_backtracks = 60;

  void validate() const {
    auto bad = [](const char* what) { throw Error(ErrorCode::Domain, what); };
    if (max_iters < 0) bad("solver: max_iters must be >= 0");
    if (!(grad_tol >= 0)) bad("solver: grad_tol must be >= 0");
    if (!(armijo_c > 0 && armijo_c < 1)) bad("solver: armijo_c must lie in (0, 1)");
    if (!(backtrack_factor > 0 && backtrack_factor < 1))
      bad("solver: backtrack_factor must lie in (0, 1)");
    if (!(initial_step > 0)) bad("solver: initial_step must be > 0");
    if (restart_period < 0) bad("solver: restart_period must be >= 0");
    if (max_backtracks < 1) bad("solver: max_backtracks must be >= 1");
  }
};

enum class SolveStatus { Converged, MaxIterations, Stalled };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::Stalled: return "stalled";
  }
  return "?";
}

struct SolveReport {
  int iterations = 0;
  std::vector<double> objective_trace;
  std::vector<double> grad_norm_trace;
  bool converged = false;
  SolveStatus status = SolveStatus::MaxIterations;
  double wall_time = 0.0;
};

template <typename Scalar>
struct Objective {
  std::function<Scalar(const Point<Scalar>&)> cost;
  std::function<AmbientVector<Scalar>(const Point<Scalar>&)> egrad;
};

template <typename Scalar>
struct SolveResult {
  Point<Scalar> point;
  SolveReport report;
};

namespace detail {

template <typename Scalar>
void require_finite_iterate(Scalar f, const AmbientVector<Scalar>& g, int iterate) {
  if (!std::isfinite(static_cast<double>(f)))
    throw Error(ErrorCode::Numeric, "minimize: non-finite cost at iterate " + std::to_string(iterate));
  if (!all_finite(g))
    throw Error(ErrorCode::Numeric,
                "minimize: non-finite gradient at iterate " + std::to_string(iterate));
}

}  // namespace detail

/// A stalled line search is reported through SolveReport::status, not thrown;
/// the last accepted iterate is returned.
template <typename Scalar>
SolveResult<Scalar> minimize(const Objective<Scalar>& obj, const Manifold<Scalar>& m,
                             Point<Scalar> init, const SolverConfig& cfg) {
  cfg.validate();
  m.check(init, "minimize(init)");
  const auto t_start = std::chrono::steady_clock::now();
  const int restart = cfg.restart_period > 0 ? cfg.restart_period
                                             : static_cast<int>(m.ambient_dimension());

  SolveResult<Scalar> result;
  SolveReport& rep = result.report;
  Point<Scalar> x = std::move(init);

  Scalar f = obj.cost(x);
  AmbientVector<Scalar> eg = obj.egrad(x);
  detail::require_finite_iterate(f, eg, 0);
  TangentVector<Scalar> g = egrad_to_rgrad(m, x, eg);
  Scalar gnorm = frobenius_norm(g);
  rep.objective_trace.push_back(static_cast<double>(f));
  rep.grad_norm_trace.push_back(static_cast<double>(gnorm));

  TangentVector<Scalar> d = scaled(g, Scalar(-1));
  Scalar prev_f = f;
  bool have_prev = false;

  rep.status = SolveStatus::MaxIterations;
  int k = 0;
  if (gnorm < cfg.grad_tol) {
    rep.status = SolveStatus::Converged;
  } else {
    for (; k < cfg.max_iters; ++k) {
      Scalar slope = frobenius_dot(eg, d);
      bool steepest = false;
      if (!(slope < Scalar(0))) {
        d = scaled(g, Scalar(-1));
        slope = frobenius_dot(eg, d);
        steepest = true;
      }

      Scalar step = static_cast<Scalar>(cfg.initial_step);
      if (have_prev) {
        const Scalar guess = Scalar(2) * (prev_f - f) / -slope;
        if (std::isfinite(static_cast<double>(guess)) && guess > Scalar(0)) step = guess;
      }

      Point<Scalar> x_new;
      Scalar f_new(0);
      auto line_search = [&](Scalar step) {
        for (int bt = 0; bt < cfg.max_backtracks;
             ++bt, step *= static_cast<Scalar>(cfg.backtrack_factor)) {
          try {
            x_new = retract(m, x, scaled(d, step));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateStep) throw;
            continue;
          }
          // Below floating-point resolution every smaller step is a no-op too.
          if (x_new == x) return false;
          f_new = obj.cost(x_new);
          if (std::isfinite(static_cast<double>(f_new)) &&
              f_new <= f + static_cast<Scalar>(cfg.armijo_c) * step * slope)
            return true;
        }
        return false;
      };
      bool accepted = line_search(step);
      if (!accepted && !steepest) {
        // A conjugate direction that fails gets one steepest-descent retry.
        d = scaled(g, Scalar(-1));
        slope = frobenius_dot(eg, d);
        accepted = line_search(static_cast<Scalar>(cfg.initial_step));
      }
      if (!accepted) {
        rep.status = SolveStatus::Stalled;
        break;
      }

      AmbientVector<Scalar> eg_new = obj.egrad(x_new);
      detail::require_finite_iterate(f_new, eg_new, k + 1);
      TangentVector<Scalar> g_new = egrad_to_rgrad(m, x_new, eg_new);
      const Scalar gnorm_new = frobenius_norm(g_new);

      const TangentVector<Scalar> g_old_t = transport(m, x, x_new, g);
      const TangentVector<Scalar> d_old_t = transport(m, x, x_new, d);
      const Scalar gg_old = gnorm * gnorm;
      Scalar beta(0);
      if (cfg.beta_rule == BetaRule::PolakRibierePlus) {
        beta = (frobenius_dot(g_new, g_new) - frobenius_dot(g_new, g_old_t)) / gg_old;
        beta = std::max(beta, Scalar(0));
      } else {
        beta = gnorm_new * gnorm_new / gg_old;
      }
      if (!std::isfinite(static_cast<double>(beta))) beta = Scalar(0);
      if ((k + 1) % restart == 0) beta = Scalar(0);

      d = axpy(scaled(g_new, Scalar(-1)), beta, d_old_t);
      prev_f = f;
      have_prev = true;
      x = std::move(x_new);
      f = f_new;
      eg = std::move(eg_new);
      g = std::move(g_new);
      gnorm = gnorm_new;
      rep.objective_trace.push_back(static_cast<double>(f));
      rep.grad_norm_trace.push_back(static_cast<double>(gnorm));

      if (gnorm < cfg.grad_tol) {
        rep.status = SolveStatus::Converged;
        ++k;
        break;
      }
    }
  }

  rep.iterations = k;
  rep.converged = rep.status == SolveStatus::Converged;
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  result.point = std::move(x);
  return result;
}

/// Relative error ||egrad - fd|| / max(1, ||egrad||) of the analytic Euclidean
/// gradient against central differences taken in the ambient space.
template <typename Scalar>
Scalar fd_gradient_check(const Objective<Scalar>& obj, const Point<Scalar>& p,
                         Scalar h = Scalar(1e-6)) {
  if (!(h > Scalar(0))) throw Error(ErrorCode::Domain, "fd_gradient_check: h must be > 0");
  const AmbientVector<Scalar> eg = obj.egrad(p);
  require_shape(eg.size() == p.size(), "fd_gradient_check: gradient block count mismatch");
  Scalar err2(0), ref2(0);
  Point<Scalar> q = p;
  for (std::size_t b = 0; b < p.size(); ++b) {
    require_shape(eg[b].rows() == p[b].rows() && eg[b].cols() == p[b].cols(),
                  "fd_gradient_check: gradient block shape mismatch");
    for (Index j = 0; j < p[b].cols(); ++j) {
      for (Index i = 0; i < p[b].rows(); ++i) {
        const Scalar x0 = p[b](i, j);
        q[b](i, j) = x0 + h;
        const Scalar fp = obj.cost(q);
        q[b](i, j) = x0 - h;
        const Scalar fm = obj.cost(q);
        q[b](i, j) = x0;
        const Scalar fd = (fp - fm) / (Scalar(2) * h);
        const Scalar diff = eg[b](i, j) - fd;
        err2 += diff * diff;
        ref2 += eg[b](i, j) * eg[b](i, j);
      }
    }
  }
  return std::sqrt(err2) / std::max(Scalar(1), std::sqrt(ref2));
}

}  // namespace gods

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "splitstep/error.hpp"
#include "splitstep/pair_sums.hpp"
#include "splitstep/schemes.hpp"

namespace splitstep {
namespace {

double norm(const double* v, std::size_t d) {
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) s += v[c] * v[c];
  return std::sqrt(s);
}

// Solves (I - h (A + grad u(y))) delta = -g for one particle; d == 1 avoids Eigen.
class LocalSolver {
 public:
  explicit LocalSolver(std::size_t d) : d_(d), J_(d, d), rhs_(d), lu_(d) {}

  void solve(const double* A, const double* grad_u, double h, const double* g, double* delta) {
    if (d_ == 1) {
      delta[0] = -g[0] / (1.0 - h * (A[0] + grad_u[0]));
      return;
    }
    for (std::size_t a = 0; a < d_; ++a) {
      rhs_(static_cast<Eigen::Index>(a)) = -g[a];
      for (std::size_t b = 0; b < d_; ++b)
        J_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            (a == b ? 1.0 : 0.0) - h * (A[a * d_ + b] + grad_u[a * d_ + b]);
    }
    lu_.compute(J_);
    Eigen::VectorXd x = lu_.solve(rhs_);
    for (std::size_t a = 0; a < d_; ++a) delta[a] = x(static_cast<Eigen::Index>(a));
  }

 private:
  std::size_t d_;
  Eigen::MatrixXd J_;
  Eigen::VectorXd rhs_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigInvalid("solver.tol", "tolerance must be positive");
  if (max_outer < 1) throw ConfigInvalid("solver.max_outer", "must be >= 1");
  if (max_newton < 1) throw ConfigInvalid("solver.max_newton", "must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigInvalid("solver.damping", "must lie in (0,1]");
}

StageState solve_implicit_stage(const Model& model, const ParticleState& X, double h, const SolverConfig& solver,
                                double t, const ParticleState* initial_guess) {
  solver.validate();
  if (X.d != model.d) throw DimensionMismatch("state dimension differs from the model");
  const std::size_t n = X.n, d = X.d;
  StageState st;
  st.Y = initial_guess ? *initial_guess : X;
  if (st.Y.n != n || st.Y.d != d) throw SizeMismatch("initial guess shape differs from the state");
  st.Y.time = X.time;
  st.Y.step = X.step;

  const bool has_f = !model.f.is_zero(), has_u = !model.u.is_zero();
  if (!has_f && !has_u) {
    st.Y = X;
    st.iterations = 1;
    return st;
  }

  double xmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) xmax = std::max(xmax, norm(X.positions.data() + i * d, d));
  const double target = solver.tol * (1.0 + xmax);
  const bool shift_correction = has_f && model.f.declared_odd() && n > 1;

  PairSums conv;
  PairSumOptions popt;
  std::vector<double> R(n * d), delta(n * d), uy(d), gu(d * d), g(d), step(d), y(d), trial(d), g_trial(d);
  std::vector<double> zero_jac(d * d, 0.0);
  std::vector<double> history;
  LocalSolver local(d);
  bool fallback = false;

  auto v_at = [&](const double* C, const double* A, const double* Yi, const double* yy, const MeasureSummary& mu,
                  const double* Xi, double* out) {
    // out = yy - X_i - h (C_i + A_i (yy - Y_i) + u(yy))
    if (has_u) model.u.evaluate(t, {yy, d}, mu, uy);
    for (std::size_t a = 0; a < d; ++a) {
      double lin = C ? C[a] : 0.0;
      if (A)
        for (std::size_t b = 0; b < d; ++b) lin += A[a * d + b] * (yy[b] - Yi[b]);
      out[a] = yy[a] - Xi[a] - h * (lin + (has_u ? uy[a] : 0.0));
    }
  };

  for (int k = 1; k <= solver.max_outer; ++k) {
    const MeasureSummary mu = MeasureSummary::of(st.Y);
    if (has_f) {
      popt.jacobian = !fallback;
      pair_sums(model.f, st.Y, popt, conv);
    }
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* Yi = st.Y.positions.data() + i * d;
      v_at(has_f ? conv.values.data() + i * d : nullptr, nullptr, Yi, Yi, mu, X.positions.data() + i * d,
           R.data() + i * d);
      res = std::max(res, norm(R.data() + i * d, d));
    }
    if (!std::isfinite(res)) throw NonFinite("implicit stage iterate became non-finite");
    st.iterations = k;
    st.residual_norm = res;
    if (res <= target) return st;

    history.push_back(res);
    if (!fallback && history.size() > 5 && res > 0.9 * history[history.size() - 6]) {
      fallback = true;
      st.used_fallback = true;
    }
    if (fallback) {
      for (std::size_t e = 0; e < n * d; ++e) st.Y.positions[e] -= 0.5 * R[e];
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) {
      const double* Xi = X.positions.data() + i * d;
      const double* Yi = st.Y.positions.data() + i * d;
      const double* C = has_f ? conv.values.data() + i * d : nullptr;
      const double* A = has_f ? conv.jacobian.data() + i * d * d : zero_jac.data();
      std::copy(Yi, Yi + d, y.begin());
      std::copy(R.begin() + i * d, R.begin() + (i + 1) * d, g.begin());
      double gnorm = norm(g.data(), d);
      for (int it = 0; it < solver.max_newton && gnorm > 0.01 * target; ++it) {
        if (has_u) model.u.jacobian(t, y, mu, gu);
        else std::fill(gu.begin(), gu.end(), 0.0);
        local.solve(A, gu.data(), h, g.data(), step.data());
        double lambda = solver.damping, tnorm = INFINITY;
        for (int halving = 0; halving < 40; ++halving) {
          for (std::size_t a = 0; a < d; ++a) trial[a] = y[a] + lambda * step[a];
          v_at(C, A, Yi, trial.data(), mu, Xi, g_trial.data());
          tnorm = norm(g_trial.data(), d);
          if (tnorm < gnorm) break;
          lambda *= 0.5;
        }
        if (!(tnorm < gnorm)) break;
        y = trial;
        g = g_trial;
        gnorm = tnorm;
      }
      for (std::size_t a = 0; a < d; ++a) delta[i * d + a] = y[a] - Yi[a];
    }

    if (shift_correction) {
      // Summed over particles the convolution Jacobians cancel for odd f, so the exact
      // update satisfies sum_i (I - h grad u_i) delta_i = -sum_i R_i; restore it with a common shift.
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < n; ++i) {
        const double* Yi = st.Y.positions.data() + i * d;
        const double* A = conv.jacobian.data() + i * d * d;
        for (std::size_t a = 0; a < d; ++a) y[a] = Yi[a] + delta[i * d + a];
        if (has_u) model.u.jacobian(t, y, mu, gu);
        else std::fill(gu.begin(), gu.end(), 0.0);
        for (std::size_t a = 0; a < d; ++a) {
          double ad = 0.0;
          for (std::size_t b = 0; b < d; ++b) {
            S(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += (a == b ? 1.0 : 0.0) - h * gu[a * d + b];
            ad += A[a * d + b] * delta[i * d + b];
          }
          rhs(static_cast<Eigen::Index>(a)) -= h * ad;
        }
      }
      Eigen::VectorXd s = S.partialPivLu().solve(rhs);
      if (s.allFinite())
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t a = 0; a < d; ++a) delta[i * d + a] += s(static_cast<Eigen::Index>(a));
    }
    for (std::size_t e = 0; e < n * d; ++e) st.Y.positions[e] += delta[e];
  }
  throw NonConvergence(st.residual_norm, st.iterations);
}

}  // namespace splitstep

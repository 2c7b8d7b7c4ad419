#pragma once

// Symplectic evolution of the Bogoliubov blocks.
//
// The interpolated generator acting on stacked (z, zbar) is
//   H_lambda(t) = i [[A(t), lambda conj(B(t))], [-lambda B(t), -conj(A(t))]]
// and S_lambda solves dS/dt = -H_lambda S, S(0) = id.  Only the top block row
// (alpha, beta) is stored and integrated: the bottom row is (conj(beta),
// conj(alpha)) by construction, which eliminates a class of consistency bugs.
//
// Alongside the blocks two phases are tracked continuously in t:
//   d(logdet abar)/dt  = i tr A + i lambda tr(abar^{-1} B beta)
//   d(logdet abar0)/dt = i tr A            (free reference, lambda = 0)
// The unwrapped imaginary part of logdet_abar is the branch data of the
// determinant factor; it is never recovered from a point determinant.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cspi/common.hpp"
#include "cspi/core.hpp"

namespace cspi {

// Central-difference probes of d/dlambda need to step slightly outside [0,1].
inline constexpr double kLambdaSlack = 0.1;

inline void check_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < -kLambdaSlack || lambda > 1.0 + kLambdaSlack) {
    throw domain_error("lambda = " + std::to_string(lambda) +
                       " outside admissible range [0,1] (plus finite-difference slack)");
  }
}

struct SymplecticPropagator {
  Matrix alpha;
  Matrix beta;
  double t = 0.0;
  double lambda = 1.0;
  Complex logdet_abar = 0.0;   // tracked log det conj(alpha), Im part unwrapped
  Complex logdet_abar0 = 0.0;  // i * integral of tr A

  static SymplecticPropagator identity(int n, double lambda = 1.0) {
    SymplecticPropagator s;
    s.alpha = Matrix::Identity(n, n);
    s.beta = Matrix::Zero(n, n);
    s.lambda = lambda;
    return s;
  }

  int modes() const { return static_cast<int>(alpha.rows()); }
  Matrix abar() const { return alpha.conjugate(); }
  Matrix bbar() const { return beta.conjugate(); }

  // Full 2n x 2n matrix [[alpha, beta], [conj(beta), conj(alpha)]].
  Matrix full() const {
    const int n = modes();
    Matrix s(2 * n, 2 * n);
    s.topLeftCorner(n, n) = alpha;
    s.topRightCorner(n, n) = beta;
    s.bottomLeftCorner(n, n) = beta.conjugate();
    s.bottomRightCorner(n, n) = alpha.conjugate();
    return s;
  }
};

// Max operator-norm residual of the two block identities
//   alpha alpha^dag - beta beta^dag = id,   alpha beta^T = beta alpha^T.
inline double symplectic_defect(const SymplecticPropagator& s) {
  const int n = s.modes();
  const Matrix r1 = s.alpha * s.alpha.adjoint() - s.beta * s.beta.adjoint() -
                    Matrix::Identity(n, n);
  const Matrix r2 = s.alpha * s.beta.transpose() - s.beta * s.alpha.transpose();
  return std::max(operator_norm(r1), operator_norm(r2));
}

inline Matrix hamiltonian_generator(const QuadraticHamiltonian& h, double t, double lambda) {
  check_lambda(lambda);
  const int n = h.modes();
  const Matrix a = h.A(t);
  const Matrix b = h.B(t);
  Matrix g(2 * n, 2 * n);
  g.topLeftCorner(n, n) = kI * a;
  g.topRightCorner(n, n) = (kI * lambda) * b.conjugate();
  g.bottomLeftCorner(n, n) = (-kI * lambda) * b;
  g.bottomRightCorner(n, n) = -kI * a.conjugate();
  return g;
}

// First-order symmetrized defect correction, iterated to tolerance.  Writing
// K = diag(1, -1) blockwise, the update S' = (1 - 1/2 (S K S^dag - K) K) S
// restores both identities to second order in the defect and preserves the
// conjugate-row structure; in blocks:
//   d1 = alpha alpha^dag - beta beta^dag - 1   (hermitized)
//   d2 = alpha beta^T - beta alpha^T           (antisymmetrized)
//   alpha' = alpha - 1/2 d1 alpha + 1/2 d2 conj(beta)
//   beta'  = beta  - 1/2 d1 beta  + 1/2 d2 conj(alpha)
// logdet_abar is shifted by conj(log det(alpha' alpha^{-1})) so the tracked
// value stays consistent with the corrected blocks.
inline SymplecticPropagator reproject(const SymplecticPropagator& s,
                                      double target = kConstructionTol,
                                      double recover_bound = 0.25, int max_iter = 12) {
  const double initial = symplectic_defect(s);
  if (!(initial < recover_bound)) {
    throw integration_error("reproject: defect " + std::to_string(initial) +
                            " exceeds recoverability bound " + std::to_string(recover_bound));
  }
  SymplecticPropagator out = s;
  const int n = out.modes();
  const Matrix id = Matrix::Identity(n, n);
  for (int iter = 0; iter < max_iter; ++iter) {
    if (symplectic_defect(out) <= 0.1 * target) return out;
    Matrix d1 = out.alpha * out.alpha.adjoint() - out.beta * out.beta.adjoint() - id;
    d1 = 0.5 * (d1 + d1.adjoint()).eval();
    Matrix d2 = out.alpha * out.beta.transpose() - out.beta * out.alpha.transpose();
    d2 = 0.5 * (d2 - d2.transpose()).eval();
    const Matrix na = out.alpha - 0.5 * d1 * out.alpha + 0.5 * d2 * out.beta.conjugate();
    const Matrix nb = out.beta - 0.5 * d1 * out.beta + 0.5 * d2 * out.alpha.conjugate();
    const Matrix ratio =
        solve_checked(out.alpha.transpose(), na.transpose(), "reproject: alpha").transpose();
    out.logdet_abar += std::conj(log_det_near_identity(ratio));
    out.alpha = na;
    out.beta = nb;
  }
  if (symplectic_defect(out) > target) {
    throw integration_error("reproject: failed to reach defect " + std::to_string(target) +
                            " (stuck at " + std::to_string(symplectic_defect(out)) + ")");
  }
  return out;
}

// Blocks (alpha^dag, -beta^T; -beta^dag, alpha^T), again of conjugate-row
// form, so it is representable by its top row.  The tracked phases conjugate:
// det(conj(alpha^dag)) = det(alpha^T) = conj(det(abar)).
inline SymplecticPropagator propagator_inverse(const SymplecticPropagator& s) {
  SymplecticPropagator inv;
  inv.alpha = s.alpha.adjoint();
  inv.beta = -s.beta.transpose();
  inv.t = s.t;
  inv.lambda = s.lambda;
  inv.logdet_abar = std::conj(s.logdet_abar);
  inv.logdet_abar0 = std::conj(s.logdet_abar0);
  return inv;
}

struct PropagatorHistory {
  double lambda = 1.0;
  std::vector<double> grid;  // uniform over [0, T], steps + 1 nodes
  std::vector<SymplecticPropagator> snapshots;

  std::size_t size() const { return grid.size(); }

  // Snapshots are valid only at grid nodes; interpolation is deliberately
  // unsupported.
  std::size_t index_of(double t) const {
    if (grid.empty()) throw validation_error("PropagatorHistory: empty history");
    const double span = std::max(1.0, grid.back());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::abs(grid[i] - t) <= 1e-9 * span) return i;
    }
    throw domain_error("time " + std::to_string(t) +
                       " is not a history grid node (interpolation disabled)");
  }
};

struct EvolveOptions {
  std::int64_t steps = 1024;
  int reproject_every = 16;     // 0 disables
  double defect_bound = 1e-8;   // checked after each reprojection and at the end
  bool record = false;
};

struct EvolveResult {
  SymplecticPropagator propagator;
  std::optional<PropagatorHistory> history;
};

namespace detail {

struct BlockDeriv {
  Matrix da, db;
  Complex dl = 0.0, dl0 = 0.0;
};

inline BlockDeriv propagation_rhs(const QuadraticHamiltonian& h, double lambda, double t,
                                  const Matrix& alpha, const Matrix& beta) {
  const Matrix a = h.A(t);
  const Matrix b = h.B(t);
  const Matrix bbar = b.conjugate();
  const Matrix abar = alpha.conjugate();
  Eigen::FullPivLU<Matrix> lu(abar);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    throw singularity_error("evolve: conj(alpha) numerically singular at t = " +
                            std::to_string(t) + " (lambda = " + std::to_string(lambda) + ")");
  }
  BlockDeriv d;
  d.da = -kI * (a * alpha + lambda * (bbar * beta.conjugate()));
  d.db = -kI * (a * beta + lambda * (bbar * abar));
  const Complex tr_a = a.trace();
  d.dl = kI * tr_a + kI * lambda * lu.solve(Matrix(b * beta)).trace();
  d.dl0 = kI * tr_a;
  return d;
}

}  // namespace detail

inline EvolveResult evolve(const QuadraticHamiltonian& h, double lambda,
                           const EvolveOptions& options = {}) {
  check_lambda(lambda);
  if (options.steps < 1) throw validation_error("evolve: steps must be >= 1");
  const int n = h.modes();
  const double horizon = h.horizon();

  SymplecticPropagator s = SymplecticPropagator::identity(n, lambda);
  EvolveResult result;
  PropagatorHistory history;
  history.lambda = lambda;
  if (options.record) {
    history.grid.push_back(0.0);
    history.snapshots.push_back(s);
  }
  if (horizon == 0.0) {
    result.propagator = s;
    if (options.record) result.history = std::move(history);
    return result;
  }

  const double dt = horizon / static_cast<double>(options.steps);
  for (std::int64_t step = 1; step <= options.steps; ++step) {
    const double t0 = dt * static_cast<double>(step - 1);
    const auto k1 = detail::propagation_rhs(h, lambda, t0, s.alpha, s.beta);
    const auto k2 = detail::propagation_rhs(h, lambda, t0 + 0.5 * dt,
                                            s.alpha + 0.5 * dt * k1.da, s.beta + 0.5 * dt * k1.db);
    const auto k3 = detail::propagation_rhs(h, lambda, t0 + 0.5 * dt,
                                            s.alpha + 0.5 * dt * k2.da, s.beta + 0.5 * dt * k2.db);
    const double t1 = (step == options.steps) ? horizon : t0 + dt;
    const auto k4 =
        detail::propagation_rhs(h, lambda, t1, s.alpha + dt * k3.da, s.beta + dt * k3.db);

    s.alpha += (dt / 6.0) * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
    s.beta += (dt / 6.0) * (k1.db + 2.0 * k2.db + 2.0 * k3.db + k4.db);
    s.logdet_abar += (dt / 6.0) * (k1.dl + 2.0 * k2.dl + 2.0 * k3.dl + k4.dl);
    s.logdet_abar0 += (dt / 6.0) * (k1.dl0 + 2.0 * k2.dl0 + 2.0 * k3.dl0 + k4.dl0);
    s.t = t1;

    if (options.reproject_every > 0 && step % options.reproject_every == 0) {
      s = reproject(s);
      if (symplectic_defect(s) > options.defect_bound) {
        throw integration_error("evolve: defect above bound after reprojection at t = " +
                                std::to_string(s.t));
      }
    }
    if (options.record) {
      history.grid.push_back(s.t);
      history.snapshots.push_back(s);
    }
  }
  if (!is_finite(s.alpha) || !is_finite(s.beta)) {
    throw integration_error("evolve: propagator blocks became non-finite");
  }
  result.propagator = s;
  if (options.record) result.history = std::move(history);
  return result;
}

inline SymplecticPropagator evolve_final(const QuadraticHamiltonian& h, double lambda,
                                         std::int64_t steps = EvolveOptions{}.steps) {
  EvolveOptions options;
  options.steps = steps;
  return evolve(h, lambda, options).propagator;
}

}  // namespace cspi

#pragma once

// Green function of the interpolated boundary-value operator D_lambda on the
// space X = { (zeta, zetabar) : zeta(0) = 0, zetabar(T) = 0 }, built from
// recorded propagator history, plus the trace identities connecting it to the
// lambda-derivative of the Bogoliubov blocks.
//
// D acts componentwise as
//   (D zeta)_z    =  i d(zeta)/dt    - A zeta    - lambda conj(B) zetabar
//   (D zeta)_zbar = -i d(zetabar)/dt - conj(A) zetabar - lambda B zeta
// and G is assembled from alpha, beta at two times plus gamma(T).

#include <cstdint>

#include "cspi/bogoliubov.hpp"
#include "cspi/common.hpp"
#include "cspi/core.hpp"
#include "cspi/propagator.hpp"

namespace cspi {

struct GreenKernel {
  PropagatorHistory history;
  Matrix gamma_final;  // gamma_lambda(T) from the last snapshot
  double theta0 = 0.5;  // value assigned to theta(0); equal-time off-diagonal
                        // blocks are theta-independent, asserted by tests
};

inline GreenKernel make_green_kernel(PropagatorHistory history, double theta0 = 0.5) {
  if (history.snapshots.empty()) throw validation_error("GreenKernel: empty history");
  const SymplecticPropagator& first = history.snapshots.front();
  const int n = first.modes();
  if ((first.alpha - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > kConstructionTol ||
      first.beta.cwiseAbs().maxCoeff() > kConstructionTol) {
    throw validation_error("GreenKernel: history must start at the identity propagator");
  }
  GreenKernel k;
  k.gamma_final = derive(history.snapshots.back()).gamma;
  k.history = std::move(history);
  k.theta0 = theta0;
  return k;
}

namespace detail {

// All four blocks for given snapshots and an explicit theta(t-u) value.
inline Matrix assemble_green(const SymplecticPropagator& st, const SymplecticPropagator& su,
                             const Matrix& gamma, double theta) {
  const int n = st.modes();
  const Matrix au_dag = su.alpha.adjoint();
  const Matrix bu_dag = su.beta.adjoint();
  const Matrix au_t = su.alpha.transpose();
  const Matrix bu_t = su.beta.transpose();
  const Matrix at = st.alpha;
  const Matrix bt = st.beta;
  const Matrix abar_t = st.abar();
  const Matrix bbar_t = st.bbar();

  Matrix g(2 * n, 2 * n);
  g.topLeftCorner(n, n) =
      -kI * theta * (at * au_dag - bt * bu_dag) + kI * bt * (gamma * au_dag - bu_dag);
  g.topRightCorner(n, n) =
      -kI * theta * (at * bu_t - bt * au_t) + kI * bt * (gamma * bu_t - au_t);
  g.bottomLeftCorner(n, n) =
      -kI * theta * (bbar_t * au_dag - abar_t * bu_dag) + kI * abar_t * (gamma * au_dag - bu_dag);
  g.bottomRightCorner(n, n) =
      -kI * theta * (bbar_t * bu_t - abar_t * au_t) + kI * abar_t * (gamma * bu_t - au_t);
  return g;
}

}  // namespace detail

// G(t, u) for t, u on the history grid; theta(t-u) is 1 / 0 / theta0 for
// t greater / less / equal to u.
inline Matrix green_block(const GreenKernel& k, double t, double u) {
  const std::size_t i = k.history.index_of(t);
  const std::size_t j = k.history.index_of(u);
  const double theta = (i > j) ? 1.0 : (i < j ? 0.0 : k.theta0);
  return detail::assemble_green(k.history.snapshots[i], k.history.snapshots[j], k.gamma_final,
                                theta);
}

// zeta = integral G F du, computed segmentwise: the integrand has a theta kink
// at u = t, so [0, t] and [t, T] are integrated separately with the smooth
// branch of theta on each.  Equivalent to the four-block form with the
// t-dependent matrices factored out of the u-integral.
inline DiscretizedPath green_solve(const GreenKernel& k, const DiscretizedPath& forcing) {
  const PropagatorHistory& hist = k.history;
  const std::size_t nodes = hist.size();
  if (forcing.grid.size() != nodes) {
    throw validation_error("green_solve: forcing must be sampled on the history grid");
  }
  const int n = hist.snapshots.front().modes();
  const double dt = nodes > 1 ? hist.grid[1] - hist.grid[0] : 0.0;

  // g(u) = [S^{-1} Sigma F]_z, h(u) = [S^{-1} Sigma F]_zbar with
  // Sigma = diag(-i, +i).
  std::vector<Vector> g(nodes), hcomp(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    const SymplecticPropagator& s = hist.snapshots[j];
    const Vector& fz = forcing.z[j];
    const Vector& fzb = forcing.zbar[j];
    g[j] = -kI * (s.alpha.adjoint() * fz) - kI * (s.beta.transpose() * fzb);
    hcomp[j] = kI * (s.beta.adjoint() * fz) + kI * (s.alpha.transpose() * fzb);
  }

  const std::vector<Vector> g_prefix = cumulative_integral(g, dt);
  const std::vector<Vector> h_prefix = cumulative_integral(hcomp, dt);
  const Vector g_total = g_prefix.back();
  const Vector h_total = h_prefix.back();
  std::vector<Vector> z(nodes), zbar(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const Vector& gp = g_prefix[i];
    const Vector hs = h_total - h_prefix[i];  // suffix by telescoping: zbar(T) = 0 exactly
    const SymplecticPropagator& s = hist.snapshots[i];
    z[i] = s.alpha * gp - s.beta * (k.gamma_final * g_total) - s.beta * hs;
    zbar[i] = s.bbar() * gp - s.abar() * (k.gamma_final * g_total) - s.abar() * hs;
  }
  return DiscretizedPath(hist.grid, std::move(z), std::move(zbar));
}

// Discrete D_lambda via central differences at interior nodes.  Returns the
// two component sequences; entries 0 and N are unused (zero).
struct OperatorDValues {
  std::vector<Vector> z_row, zbar_row;
};

inline OperatorDValues apply_d_central(const QuadraticHamiltonian& h, double lambda,
                                       const DiscretizedPath& path) {
  const std::size_t nodes = path.grid.size();
  const int n = static_cast<int>(path.z.front().size());
  OperatorDValues out;
  out.z_row.assign(nodes, Vector::Zero(n));
  out.zbar_row.assign(nodes, Vector::Zero(n));
  for (std::size_t i = 1; i + 1 < nodes; ++i) {
    const double two_dt = path.grid[i + 1] - path.grid[i - 1];
    const Vector dz = (path.z[i + 1] - path.z[i - 1]) / two_dt;
    const Vector dzbar = (path.zbar[i + 1] - path.zbar[i - 1]) / two_dt;
    const Matrix a = h.A(path.grid[i]);
    const Matrix b = h.B(path.grid[i]);
    out.z_row[i] = kI * dz - a * path.z[i] - lambda * (b.conjugate() * path.zbar[i]);
    out.zbar_row[i] = -kI * dzbar - a.conjugate() * path.zbar[i] - lambda * (b * path.z[i]);
  }
  return out;
}

// Residual max-norm of (D_lambda zeta - F) at interior nodes plus the
// boundary-condition residuals |zeta(0)| and |zetabar(T)|.
inline double verify_green(const GreenKernel& k, const QuadraticHamiltonian& h,
                           const DiscretizedPath& forcing) {
  const DiscretizedPath zeta = green_solve(k, forcing);
  const OperatorDValues d = apply_d_central(h, k.history.lambda, zeta);
  double residual = 0.0;
  for (std::size_t i = 1; i + 1 < zeta.grid.size(); ++i) {
    residual = std::max(residual, (d.z_row[i] - forcing.z[i]).cwiseAbs().maxCoeff());
    residual = std::max(residual, (d.zbar_row[i] - forcing.zbar[i]).cwiseAbs().maxCoeff());
  }
  residual += zeta.z.front().cwiseAbs().maxCoeff();
  residual += zeta.zbar.back().cwiseAbs().maxCoeff();
  return residual;
}

// -(integral over t) tr{ G_{z zbar}(t,t) B(t) + G_{zbar z}(t,t) conj(B(t)) },
// composite quadrature on the history grid.  Uses the full equal-time block
// assembly so the theta(0) convention genuinely enters (and provably cancels).
inline Complex trace_gn(const GreenKernel& k, const QuadraticHamiltonian& h) {
  const PropagatorHistory& hist = k.history;
  const int n = hist.snapshots.front().modes();
  const double dt = hist.size() > 1 ? hist.grid[1] - hist.grid[0] : 0.0;
  std::vector<Complex> samples(hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const Matrix g = detail::assemble_green(hist.snapshots[i], hist.snapshots[i], k.gamma_final,
                                            k.theta0);
    const Matrix b = h.B(hist.grid[i]);
    samples[i] = (g.topRightCorner(n, n) * b).trace() +
                 (g.bottomLeftCorner(n, n) * b.conjugate()).trace();
  }
  return -integrate_uniform(samples, dt);
}

// dS_lambda(t_final)/dlambda = -(integral over u) S(t_final) S^{-1}(u) dH/dlambda S(u)
// with dH/dlambda = i [[0, conj(B)], [-B, 0]], quadrature over the recorded
// history.
inline Matrix ds_dlambda_from_history(const QuadraticHamiltonian& h,
                                      const PropagatorHistory& hist, double t_final) {
  const std::size_t end = hist.index_of(t_final);
  const int n = hist.snapshots.front().modes();
  const double dt = hist.size() > 1 ? hist.grid[1] - hist.grid[0] : 0.0;
  const Matrix s_final = hist.snapshots[end].full();
  std::vector<Matrix> samples(end + 1);
  for (std::size_t j = 0; j <= end; ++j) {
    const Matrix b = h.B(hist.grid[j]);
    Matrix dh(2 * n, 2 * n);
    dh.setZero();
    dh.topRightCorner(n, n) = kI * b.conjugate();
    dh.bottomLeftCorner(n, n) = -kI * b;
    const Matrix s_inv_u = propagator_inverse(hist.snapshots[j]).full();
    samples[j] = s_final * s_inv_u * dh * hist.snapshots[j].full();
  }
  return -integrate_uniform(samples, dt);
}

inline Matrix ds_dlambda(const QuadraticHamiltonian& h, double lambda, double t_final,
                         std::int64_t steps) {
  EvolveOptions options;
  options.steps = steps;
  options.record = true;
  const EvolveResult r = evolve(h, lambda, options);
  return ds_dlambda_from_history(h, *r.history, t_final);
}

}  // namespace cspi

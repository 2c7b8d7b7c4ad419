#pragma once

// Derived algebra on Bogoliubov blocks: the saddle-point matrices
// (alpha^{-1 dag}, gamma, sigma), Hilbert-Schmidt norms, and composition.
// All inverse applications are factorization + solve; alpha is never inverted
// explicitly (conditioning under strong squeezing).

#include "cspi/common.hpp"
#include "cspi/propagator.hpp"

namespace cspi {

struct DerivedBogoliubov {
  Matrix alpha_inv_dag;  // (alpha^{-1})^dag at final time
  Matrix gamma;          // conj(alpha)^{-1} conj(beta); symmetric
  Matrix sigma;          // beta conj(alpha)^{-1}; symmetric, operator norm < 1
};

inline DerivedBogoliubov derive(const SymplecticPropagator& s) {
  const int n = s.modes();
  DerivedBogoliubov d;
  d.gamma = solve_checked(s.abar(), s.bbar(), "derive: conj(alpha)");
  // sigma^T = (conj(alpha)^T)^{-1} beta^T and conj(alpha)^T = alpha^dag
  d.sigma =
      solve_checked(s.alpha.adjoint(), s.beta.transpose(), "derive: conj(alpha)").transpose();
  d.alpha_inv_dag = solve_checked(s.alpha.adjoint(), Matrix(Matrix::Identity(n, n)),
                                  "derive: alpha");
  return d;
}

inline double hs_norm_beta(const SymplecticPropagator& s) { return s.beta.norm(); }

// Block product S2 * S1.  The tracked phase composes additively plus the
// correction logdet(1 + gamma_2 sigma_1); its branch is fixed by per-eigenvalue
// principal logs, which equals continuous tracking along the straight-line
// homotopy s -> det(1 + s gamma_2 sigma_1) (each eigenvalue factor traces a
// straight segment from 1, and a straight segment's continuous argument change
// is always below pi).
inline SymplecticPropagator compose(const SymplecticPropagator& s2,
                                    const SymplecticPropagator& s1) {
  if (s1.modes() != s2.modes()) throw validation_error("compose: mode counts differ");
  const double worst = std::max(symplectic_defect(s1), symplectic_defect(s2));
  if (worst > 1e-6) {
    throw validation_error("compose: inputs violate the symplectic identities (defect " +
                           std::to_string(worst) + ")");
  }
  const DerivedBogoliubov d2 = derive(s2);
  const DerivedBogoliubov d1 = derive(s1);
  const int n = s1.modes();

  SymplecticPropagator out;
  out.alpha = s2.alpha * s1.alpha + s2.beta * s1.beta.conjugate();
  out.beta = s2.alpha * s1.beta + s2.beta * s1.alpha.conjugate();
  out.t = s1.t + s2.t;
  out.lambda = s1.lambda;
  out.logdet_abar = s1.logdet_abar + s2.logdet_abar +
                    log_det_near_identity(Matrix::Identity(n, n) + d2.gamma * d1.sigma);
  out.logdet_abar0 = s1.logdet_abar0 + s2.logdet_abar0;
  return out;
}

}  // namespace cspi

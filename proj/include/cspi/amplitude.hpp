#pragma once

// Coherent-state transition amplitude in log form:
//   log I = v.(alpha^{-1 dag} w) + 1/2 v.(sigma v) - 1/2 w.(gamma w)
//           - 1/2 (logdet_abar - logdet_abar0)
// The determinant branch is the continuously tracked one; a square root of a
// point determinant value is never taken.  The independent lambda-continuation
// route reproduces the same branch from I_0 = 1 and is compared in tests.

#include <cstdint>
#include <limits>
#include <vector>

#include "cspi/bogoliubov.hpp"
#include "cspi/common.hpp"
#include "cspi/core.hpp"
#include "cspi/green.hpp"
#include "cspi/propagator.hpp"

namespace cspi {

struct Amplitude {
  Complex log_value = 0.0;  // Re = log magnitude, Im = unwrapped phase
  Complex value = 1.0;      // exp(log_value) when representable
  bool overflow = false;    // |Re log_value| too large for a finite double
};

inline Amplitude make_amplitude(Complex log_value) {
  Amplitude a;
  a.log_value = log_value;
  if (std::abs(log_value.real()) < 700.0) {
    a.value = std::exp(log_value);
  } else {
    a.overflow = true;
    a.value = log_value.real() > 0
                  ? Complex(std::numeric_limits<double>::infinity(), 0.0)
                  : Complex(0.0, 0.0);
  }
  return a;
}

inline Amplitude transition_amplitude(const SymplecticPropagator& s, const CoherentLabel& v,
                                      const CoherentLabel& w) {
  if (v.size() != s.modes() || w.size() != s.modes()) {
    throw validation_error("transition_amplitude: label dimension must equal mode count");
  }
  const DerivedBogoliubov d = derive(s);
  const Complex exponent = bilinear(v.components, d.alpha_inv_dag, w.components) +
                           0.5 * bilinear(v.components, d.sigma, v.components) -
                           0.5 * bilinear(w.components, d.gamma, w.components);
  return make_amplitude(exponent - 0.5 * (s.logdet_abar - s.logdet_abar0));
}

// Boundary data of the critical path:
//   z(T) = alpha^{-1 dag} w + sigma v,   zbar(0) = conj(alpha)^{-1} v - gamma w.
// The exponent above equals 1/2 [v.z(T) + zbar(0).w] on these values.
struct SaddlePoint {
  Vector z_final;
  Vector zbar_initial;
};

inline SaddlePoint classical_saddle(const SymplecticPropagator& s, const CoherentLabel& v,
                                    const CoherentLabel& w) {
  if (v.size() != s.modes() || w.size() != s.modes()) {
    throw validation_error("classical_saddle: label dimension must equal mode count");
  }
  const DerivedBogoliubov d = derive(s);
  SaddlePoint p;
  p.z_final = d.alpha_inv_dag * w.components + d.sigma * v.components;
  p.zbar_initial =
      solve_checked_vec(s.abar(), v.components, "classical_saddle: conj(alpha)") -
      d.gamma * w.components;
  return p;
}

inline std::vector<double> uniform_lambda_grid(int nodes = 33) {
  if (nodes < 2) throw validation_error("lambda grid needs at least 2 nodes");
  std::vector<double> grid(nodes);
  for (int i = 0; i < nodes; ++i) grid[i] = static_cast<double>(i) / (nodes - 1);
  return grid;
}

// Branch-fixing continuation: integrates
//   d(log I_lambda)/dlambda = -1/2 tr(abar_lambda^{-1}(T) d abar_lambda(T)/dlambda)
// from log I_0 = 0 over a uniform lambda grid, the derivative coming from the
// quadrature representation of dS/dlambda.  Returns the log of the determinant
// factor; agrees with -1/2 (logdet_abar - logdet_abar0) of the time-tracked
// route.
inline Complex lambda_continuation_phase(const QuadraticHamiltonian& h,
                                         const std::vector<double>& lambda_grid,
                                         std::int64_t steps = 512) {
  if (lambda_grid.size() < 2 || lambda_grid.front() != 0.0 || lambda_grid.back() != 1.0) {
    throw validation_error("lambda_continuation_phase: grid must run from 0 to 1");
  }
  const double dl = lambda_grid[1] - lambda_grid[0];
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (std::abs((lambda_grid[i] - lambda_grid[i - 1]) - dl) > 1e-12) {
      throw validation_error("lambda_continuation_phase: grid must be uniform");
    }
  }
  const int n = h.modes();
  std::vector<Complex> integrand(lambda_grid.size());
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    const double lambda = lambda_grid[i];
    try {
      EvolveOptions options;
      options.steps = steps;
      options.record = true;
      const EvolveResult r = evolve(h, lambda, options);
      const Matrix ds = ds_dlambda_from_history(h, *r.history, h.horizon());
      const Matrix dabar = ds.bottomRightCorner(n, n);
      const Matrix ratio = solve_checked(r.propagator.abar(), dabar,
                                         "lambda_continuation_phase: conj(alpha)");
      integrand[i] = -0.5 * ratio.trace();
    } catch (const singularity_error& e) {
      throw singularity_error("kernel crossing at lambda = " + std::to_string(lambda) + ": " +
                              e.what());
    }
  }
  return integrate_uniform(integrand, dl);
}

}  // namespace cspi

#pragma once

// Mode spaces, time-dependent quadratic Hamiltonians, coherent labels, and the
// classical action functional with coherent boundary terms.
//
// Conventions (fixed throughout the library):
//   - energy density  E(t, z, zbar) = zbar.A z + 1/2 z.B z + 1/2 zbar.conj(B) zbar
//     with A(t) self-adjoint and B(t) symmetric; all dots are plain bilinear
//     contractions (no conjugation).
//   - hbar = 1; all quantities dimensionless after scaling by a reference
//     frequency.
//   - coherent labels are Bargmann (unnormalized): overlap(v, w) = exp(v.w).

#include <algorithm>
#include <functional>
#include <utility>
#include <vector>

#include "cspi/common.hpp"

namespace cspi {

struct ModeSpace {
  int n = 0;

  explicit ModeSpace(int modes) : n(modes) {
    if (n < 1) throw validation_error("ModeSpace: mode count must be >= 1, got " + std::to_string(n));
  }
};

inline void validate_hermitian(const Matrix& a, double tol, const std::string& context) {
  if (a.rows() != a.cols()) throw validation_error(context + ": A must be square");
  if (!is_finite(a)) throw validation_error(context + ": A has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (hermiticity_defect(a) > tol * scale) {
    throw validation_error(context + ": A(t) must be Hermitian (defect " +
                           std::to_string(hermiticity_defect(a)) + ")");
  }
}

inline void validate_symmetric(const Matrix& b, double tol, const std::string& context) {
  if (b.rows() != b.cols()) throw validation_error(context + ": B must be square");
  if (!is_finite(b)) throw validation_error(context + ": B has non-finite entries");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (symmetry_defect(b) > tol * scale) {
    throw validation_error(context + ": B(t) must be symmetric (defect " +
                           std::to_string(symmetry_defect(b)) + ")");
  }
}

// Time-dependent pair (A(t), B(t)) over a horizon [0, T].  Time dependence is
// supplied as callables (sampled by integrators) or tabulated matrices with
// linear interpolation; both are validated at load time on a sample grid.
// T = 0 is allowed and means a trivial horizon.
class QuadraticHamiltonian {
 public:
  using MatrixFn = std::function<Matrix(double)>;

  static QuadraticHamiltonian constant(const Matrix& a, const Matrix& b, double horizon) {
    check_shapes(a, b);
    validate_hermitian(a, kConstructionTol, "QuadraticHamiltonian");
    validate_symmetric(b, kConstructionTol, "QuadraticHamiltonian");
    QuadraticHamiltonian h(static_cast<int>(a.rows()), horizon);
    h.a_fn_ = [a](double) { return a; };
    h.b_fn_ = [b](double) { return b; };
    h.constant_ = true;
    return h;
  }

  static QuadraticHamiltonian from_callables(int modes, MatrixFn a_fn, MatrixFn b_fn,
                                             double horizon, int validation_samples = 17) {
    QuadraticHamiltonian h(modes, horizon);
    h.a_fn_ = std::move(a_fn);
    h.b_fn_ = std::move(b_fn);
    for (int i = 0; i < validation_samples; ++i) {
      const double t = (validation_samples == 1 || horizon == 0.0)
                           ? 0.0
                           : horizon * i / (validation_samples - 1);
      const Matrix at = h.a_fn_(t);
      const Matrix bt = h.b_fn_(t);
      if (at.rows() != modes || bt.rows() != modes) {
        throw validation_error("QuadraticHamiltonian: callable returned wrong dimension");
      }
      check_shapes(at, bt);
      validate_hermitian(at, kConstructionTol, "QuadraticHamiltonian");
      validate_symmetric(bt, kConstructionTol, "QuadraticHamiltonian");
    }
    return h;
  }

  static QuadraticHamiltonian tabulated(const std::vector<double>& times,
                                        const std::vector<Matrix>& a_samples,
                                        const std::vector<Matrix>& b_samples) {
    if (times.size() < 2) throw validation_error("QuadraticHamiltonian: need at least 2 samples");
    if (a_samples.size() != times.size() || b_samples.size() != times.size()) {
      throw validation_error("QuadraticHamiltonian: sample counts must match time grid");
    }
    if (times.front() != 0.0) throw validation_error("QuadraticHamiltonian: time grid must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) {
        throw validation_error("QuadraticHamiltonian: time grid must be strictly increasing");
      }
    }
    const int modes = static_cast<int>(a_samples.front().rows());
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (a_samples[i].rows() != modes || b_samples[i].rows() != modes) {
        throw validation_error("QuadraticHamiltonian: inconsistent sample dimensions");
      }
      check_shapes(a_samples[i], b_samples[i]);
      validate_hermitian(a_samples[i], kConstructionTol, "QuadraticHamiltonian");
      validate_symmetric(b_samples[i], kConstructionTol, "QuadraticHamiltonian");
    }
    QuadraticHamiltonian h(modes, times.back());
    h.a_fn_ = make_interpolant(times, a_samples);
    h.b_fn_ = make_interpolant(times, b_samples);
    return h;
  }

  int modes() const { return modes_.n; }
  double horizon() const { return horizon_; }
  bool is_constant() const { return constant_; }

  Matrix A(double t) const {
    check_time(t);
    return a_fn_(t);
  }
  Matrix B(double t) const {
    check_time(t);
    return b_fn_(t);
  }

 private:
  QuadraticHamiltonian(int modes, double horizon) : modes_(modes), horizon_(horizon) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
      throw validation_error("QuadraticHamiltonian: horizon must be finite and >= 0");
    }
  }

  static void check_shapes(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw validation_error("QuadraticHamiltonian: A and B must have equal shapes");
    }
  }

  void check_time(double t) const {
    const double slack = 1e-9 * std::max(1.0, horizon_);
    if (t < -slack || t > horizon_ + slack) {
      throw domain_error("time " + std::to_string(t) + " outside horizon [0, " +
                         std::to_string(horizon_) + "]");
    }
  }

  static MatrixFn make_interpolant(std::vector<double> times, std::vector<Matrix> samples) {
    return [times = std::move(times), samples = std::move(samples)](double t) -> Matrix {
      auto it = std::upper_bound(times.begin(), times.end(), t);
      std::size_t hi = std::min<std::size_t>(times.size() - 1,
                                             std::max<std::ptrdiff_t>(1, it - times.begin()));
      std::size_t lo = hi - 1;
      const double span = times[hi] - times[lo];
      const double s = std::clamp((t - times[lo]) / span, 0.0, 1.0);
      return samples[lo] * (1.0 - s) + samples[hi] * s;
    };
  }

  ModeSpace modes_;
  double horizon_ = 0.0;
  bool constant_ = false;
  MatrixFn a_fn_, b_fn_;
};

struct CoherentLabel {
  Vector components;

  explicit CoherentLabel(Vector c) : components(std::move(c)) {
    if (!is_finite(components)) throw validation_error("CoherentLabel: non-finite components");
  }
  static CoherentLabel zero(int n) { return CoherentLabel(Vector::Zero(n)); }
  int size() const { return static_cast<int>(components.size()); }
};

// Paths over [0, T] with z and zbar treated as independent complex sequences.
// A path lies in the vacuum boundary-condition space X iff z.front() = 0 and
// zbar.back() = 0.
struct DiscretizedPath {
  std::vector<double> grid;
  std::vector<Vector> z;
  std::vector<Vector> zbar;

  DiscretizedPath(std::vector<double> g, std::vector<Vector> zs, std::vector<Vector> zbs)
      : grid(std::move(g)), z(std::move(zs)), zbar(std::move(zbs)) {
    if (grid.size() < 2) throw validation_error("DiscretizedPath: need at least 2 grid nodes");
    if (z.size() != grid.size() || zbar.size() != grid.size()) {
      throw validation_error("DiscretizedPath: z/zbar length must equal grid length");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) {
        throw validation_error("DiscretizedPath: grid must be strictly increasing");
      }
    }
    const auto dim = z.front().size();
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i].size() != dim || zbar[i].size() != dim) {
        throw validation_error("DiscretizedPath: inconsistent vector dimensions");
      }
    }
  }

  bool in_x_space(double tol = kConstructionTol) const {
    return z.front().cwiseAbs().maxCoeff() <= tol && zbar.back().cwiseAbs().maxCoeff() <= tol;
  }
};

// E(t, z, zbar) = zbar.A(t) z + 1/2 z.B(t) z + 1/2 zbar.conj(B(t)) zbar.
// Real whenever zbar = conj(z).
inline Complex classical_energy(const QuadraticHamiltonian& h, double t, const Vector& z,
                                const Vector& zbar) {
  if (z.size() != h.modes() || zbar.size() != h.modes()) {
    throw validation_error("classical_energy: vector dimension must equal mode count");
  }
  const Matrix a = h.A(t);
  const Matrix b = h.B(t);
  return bilinear(zbar, a, z) + 0.5 * bilinear(z, b, z) +
         0.5 * bilinear(zbar, Matrix(b.conjugate()), zbar);
}

// Discrete action.  Fixed quadrature rule (documented):
//   Q = sum_k { (1/2i)[dzbar_k.z_k - zbar_{k+1}.dz_k] - dt_k E(t_mid, z_k, zbar_{k+1}) }
//       + (1/2i)[zbar_N.z_N + zbar_0.z_0]
// with forward differences dz_k = z_{k+1}-z_k and A, B sampled at interval
// midpoints.  The mixed (zbar_{k+1}, z_k) ordering matches the normal-ordered
// short-time kernel of the discrete path-integral oracle, so exp(iQ) of a
// discrete path equals the integrand weight the oracle assigns to it.
inline Complex evaluate_action(const QuadraticHamiltonian& h, const DiscretizedPath& path) {
  const double t0 = path.grid.front();
  const double tN = path.grid.back();
  const double slack = 1e-9 * std::max(1.0, h.horizon());
  if (std::abs(t0) > slack || std::abs(tN - h.horizon()) > slack) {
    throw domain_error("evaluate_action: path grid must span [0, T]");
  }
  const Complex half_over_i = 1.0 / (2.0 * kI);
  Complex q = 0.0;
  const std::size_t segments = path.grid.size() - 1;
  for (std::size_t k = 0; k < segments; ++k) {
    const double dt = path.grid[k + 1] - path.grid[k];
    const double t_mid = 0.5 * (path.grid[k + 1] + path.grid[k]);
    const Vector dz = path.z[k + 1] - path.z[k];
    const Vector dzbar = path.zbar[k + 1] - path.zbar[k];
    const Complex kinetic = bilinear(dzbar, path.z[k]) - bilinear(path.zbar[k + 1], dz);
    q += half_over_i * kinetic - dt * classical_energy(h, t_mid, path.z[k], path.zbar[k + 1]);
  }
  const Complex boundary = bilinear(path.zbar.back(), path.z.back()) +
                           bilinear(path.zbar.front(), path.z.front());
  return q + half_over_i * boundary;
}

}  // namespace cspi

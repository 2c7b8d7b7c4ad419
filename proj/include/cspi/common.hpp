#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "cspi/errors.hpp"

namespace cspi {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// Tolerance hierarchy used throughout: structural invariants checked at
// construction, algebraic identities derived from them, and agreement between
// independent numerical routes.
inline constexpr double kConstructionTol = 1e-12;
inline constexpr double kDerivedTol = 1e-10;
inline constexpr double kOracleTol = 1e-6;

inline bool is_finite(const Matrix& m) { return m.allFinite(); }
inline bool is_finite(const Vector& v) { return v.allFinite(); }

// Plain bilinear contraction a.b (no conjugation); Bargmann-label pairings use
// this, never Eigen's conjugating dot().
inline Complex bilinear(const Vector& a, const Vector& b) {
  return (a.array() * b.array()).sum();
}

inline Complex bilinear(const Vector& a, const Matrix& m, const Vector& b) {
  return bilinear(a, Vector(m * b));
}

inline double hermiticity_defect(const Matrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline double symmetry_defect(const Matrix& b) {
  return (b - b.transpose()).cwiseAbs().maxCoeff();
}

// Largest singular value; matrices here are small so full SVD is fine.
inline double operator_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

// LU solve with an explicit singularity check. `what` names the matrix in the
// error message.
inline Matrix solve_checked(const Matrix& a, const Matrix& rhs, const std::string& what) {
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    throw singularity_error(what + " is numerically singular (rank " +
                            std::to_string(lu.rank()) + " of " +
                            std::to_string(a.rows()) + ")");
  }
  return lu.solve(rhs);
}

inline Vector solve_checked_vec(const Matrix& a, const Vector& rhs, const std::string& what) {
  return Vector(solve_checked(a, Matrix(rhs), what));
}

// log det M for M close to the identity, on the branch continuous along the
// straight-line homotopy s -> det(1 + s(M-1)). Each eigenvalue factor traces a
// straight segment from 1, whose continuous argument change is below pi, so the
// per-eigenvalue principal log is exact for that homotopy.
inline Complex log_det_near_identity(const Matrix& m) {
  Eigen::ComplexEigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) acc += std::log(es.eigenvalues()(i));
  return acc;
}

// Plain principal-branch log det via LU.
inline Complex log_det_principal(const Matrix& m) {
  Eigen::PartialPivLU<Matrix> lu(m);
  Complex det = 1.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) det *= lu.matrixLU()(i, i);
  det *= Complex(lu.permutationP().determinant(), 0.0);
  return std::log(det);
}

// Composite quadrature over equally spaced samples (m = values.size()-1
// intervals of width h). Simpson where the interval count allows, 3/8 rule on
// an odd tail, trapezoid for a single interval.
template <typename T>
T integrate_uniform(const std::vector<T>& values, double h) {
  const std::size_t m = values.empty() ? 0 : values.size() - 1;
  if (m == 0) return values.empty() ? T{} : T(values[0] * 0.0);
  if (m == 1) return (values[0] + values[1]) * (h / 2.0);
  T acc = values[0] * 0.0;  // zero with the shape of the samples
  std::size_t simpson_end = m;  // interval index (exclusive) covered by Simpson
  bool tail38 = false;
  if (m % 2 != 0) {
    simpson_end = m - 3;
    tail38 = true;
  }
  for (std::size_t k = 0; k + 2 <= simpson_end; k += 2) {
    acc += (values[k] + values[k + 1] * 4.0 + values[k + 2]) * (h / 3.0);
  }
  if (tail38) {
    const std::size_t s = m - 3;
    acc += (values[s] + values[s + 1] * 3.0 + values[s + 2] * 3.0 + values[s + 3]) *
           (3.0 * h / 8.0);
  }
  return acc;
}

// Prefix integrals over equally spaced samples, O(1) per node at Simpson-level
// accuracy: even prefixes extend pairwise, odd prefixes close their last
// interval with the quadratic through the three nearest samples.
template <typename T>
std::vector<T> cumulative_integral(const std::vector<T>& values, double h) {
  const std::size_t nodes = values.size();
  std::vector<T> out(nodes);
  if (nodes == 0) return out;
  out[0] = T(values[0] * 0.0);
  if (nodes == 1) return out;
  if (nodes == 2) {
    out[1] = (values[0] + values[1]) * (h / 2.0);
    return out;
  }
  for (std::size_t i = 2; i < nodes; i += 2) {
    out[i] = out[i - 2] + (values[i - 2] + values[i - 1] * 4.0 + values[i]) * (h / 3.0);
  }
  for (std::size_t i = 1; i < nodes; i += 2) {
    if (i + 1 < nodes) {
      out[i] = out[i - 1] + (values[i - 1] * 5.0 + values[i] * 8.0 - values[i + 1]) * (h / 12.0);
    } else {
      out[i] = out[i - 1] + (values[i - 2] * -1.0 + values[i - 1] * 8.0 + values[i] * 5.0) *
                                (h / 12.0);
    }
  }
  return out;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace cspi

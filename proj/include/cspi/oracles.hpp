#pragma once

// Two independent ground-truth routes for the transition amplitude.
//
// 1. Truncated-Fock evolution: the normal-ordered operator
//      H = sum A_ab adag_a a_b + 1/2 sum B_ab a_a a_b + 1/2 sum conj(B)_ab adag_a adag_b
//    acts matrix-free on the occupation basis (cutoff+1)^n; the state is
//    evolved by midpoint-sampled substep exponentials (scaled Taylor applies),
//    and the matrix element is taken against unnormalized Bargmann coherent
//    vectors, so overlap(v, w) = exp(v.w) at T = 0.
//
// 2. Discrete path integral: the slice-N Gaussian integral with normal-ordered
//    short-time kernels exp{zbar_{k+1}.z_k - i dt E(zbar_{k+1}, z_k)} is
//    evaluated exactly by eliminating one slice at a time, which is
//    block-tridiagonal elimination in disguise; the log-determinant accumulates
//    per-pivot principal logs (each increment is O(dt), so the concatenated
//    phase is continuous).  H = 0 reproduces exp(v.w) exactly at any N.

#include <cstdint>
#include <vector>

#include "cspi/common.hpp"
#include "cspi/core.hpp"

namespace cspi {

struct FockConfig {
  int cutoff = 40;    // max occupation per mode
  int substeps = 256;
  double leak_threshold = 1e-8;
};

struct FockResult {
  Complex value = 0.0;
  double truncation_leak = 0.0;  // max of norm drift and cutoff-boundary mass fraction
  bool leak_warning = false;
};

namespace detail {

// Occupation-basis bookkeeping for n modes with per-mode cutoff.
class FockBasis {
 public:
  FockBasis(int n, int cutoff) : n_(n), cutoff_(cutoff) {
    if (cutoff < 1) throw validation_error("FockConfig: cutoff must be >= 1");
    if (n < 1 || n > 16) throw validation_error("FockBasis: mode count must be in [1, 16]");
    dim_ = 1;
    strides_.assign(n_, 0);
    for (int a = 0; a < n_; ++a) {
      strides_[a] = dim_;
      const std::int64_t next = dim_ * (cutoff_ + 1);
      if (next > (std::int64_t{1} << 22)) {
        throw validation_error("fock_matrix_element: basis dimension too large (desk scale)");
      }
      dim_ = next;
    }
    sqrt_.resize(cutoff_ + 2);
    for (int m = 0; m <= cutoff_ + 1; ++m) sqrt_[m] = std::sqrt(static_cast<double>(m));
  }

  std::int64_t dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  int modes() const { return n_; }

  void decode(std::int64_t idx, int* occ) const {
    for (int a = 0; a < n_; ++a) {
      occ[a] = static_cast<int>(idx % (cutoff_ + 1));
      idx /= (cutoff_ + 1);
    }
  }

  // out += H psi.
  void apply_hamiltonian(const Matrix& a_mat, const Matrix& b_mat, const Vector& psi,
                         Vector& out) const {
    const Matrix bbar = b_mat.conjugate();
    int occ[16];
    for (std::int64_t idx = 0; idx < dim_; ++idx) {
      const Complex c = psi(idx);
      if (c == Complex(0.0, 0.0)) continue;
      decode(idx, occ);
      for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) {
          // A_ab adag_a a_b
          if (occ[b] >= 1) {
            const int after_a = occ[a] - (a == b ? 1 : 0);
            if (after_a + 1 <= cutoff_) {
              const double coef = sqrt_[occ[b]] * sqrt_[after_a + 1];
              out(idx - strides_[b] + strides_[a]) += a_mat(a, b) * coef * c;
            }
          }
          // 1/2 B_ab a_a a_b
          if (occ[b] >= 1) {
            const int rem_a = occ[a] - (a == b ? 1 : 0);
            if (rem_a >= 1) {
              const double coef = sqrt_[occ[b]] * sqrt_[rem_a];
              out(idx - strides_[b] - strides_[a]) += 0.5 * b_mat(a, b) * coef * c;
            }
          }
          // 1/2 conj(B)_ab adag_a adag_b
          if (occ[b] + 1 <= cutoff_) {
            const int add_a = occ[a] + (a == b ? 1 : 0);
            if (add_a + 1 <= cutoff_) {
              const double coef = sqrt_[occ[b] + 1] * sqrt_[add_a + 1];
              out(idx + strides_[b] + strides_[a]) += 0.5 * bbar(a, b) * coef * c;
            }
          }
        }
      }
    }
  }

  // Coefficients of the unnormalized coherent vector: prod_a w_a^{m_a}/sqrt(m_a!).
  Vector coherent_vector(const Vector& w) const {
    std::vector<std::vector<Complex>> per_mode(n_);
    for (int a = 0; a < n_; ++a) {
      per_mode[a].resize(cutoff_ + 1);
      per_mode[a][0] = 1.0;
      for (int m = 0; m < cutoff_; ++m) {
        per_mode[a][m + 1] = per_mode[a][m] * w(a) / sqrt_[m + 1];
      }
    }
    Vector psi(dim_);
    int occ[16];
    for (std::int64_t idx = 0; idx < dim_; ++idx) {
      decode(idx, occ);
      Complex c = 1.0;
      for (int a = 0; a < n_; ++a) c *= per_mode[a][occ[a]];
      psi(idx) = c;
    }
    return psi;
  }

  // Fraction of |psi|^2 sitting at the cutoff boundary of any mode.
  double boundary_mass(const Vector& psi) const {
    double boundary = 0.0, total = 0.0;
    int occ[16];
    for (std::int64_t idx = 0; idx < dim_; ++idx) {
      const double p = std::norm(psi(idx));
      total += p;
      decode(idx, occ);
      for (int a = 0; a < n_; ++a) {
        if (occ[a] == cutoff_) {
          boundary += p;
          break;
        }
      }
    }
    return total > 0.0 ? boundary / total : 0.0;
  }

 private:
  int n_, cutoff_;
  std::int64_t dim_;
  std::vector<std::int64_t> strides_;
  std::vector<double> sqrt_;
};

// psi <- exp(-i dt H) psi via Taylor series with micro-step scaling; the crude
// norm bound (cutoff+1)(sum|A| + sum|B|) keeps each micro-step's series short.
inline void apply_substep_exponential(const FockBasis& basis, const Matrix& a_mat,
                                      const Matrix& b_mat, double dt, Vector& psi) {
  if (dt == 0.0) return;
  const double bound = (basis.cutoff() + 1) *
                       (a_mat.cwiseAbs().sum() + b_mat.cwiseAbs().sum());
  const int micro = std::max(1, static_cast<int>(std::ceil(std::abs(dt) * bound / 0.9)));
  const double h = dt / micro;
  Vector term(psi.size()), next(psi.size());
  for (int step = 0; step < micro; ++step) {
    term = psi;
    for (int k = 1; k <= 80; ++k) {
      next.setZero();
      basis.apply_hamiltonian(a_mat, b_mat, term, next);
      term = (-kI * h / static_cast<double>(k)) * next;
      psi += term;
      if (term.norm() <= 1e-18 * psi.norm()) break;
    }
  }
}

}  // namespace detail

inline FockResult fock_matrix_element(const QuadraticHamiltonian& h, double horizon,
                                      const CoherentLabel& v, const CoherentLabel& w,
                                      const FockConfig& cfg) {
  if (cfg.substeps < 1) throw validation_error("FockConfig: substeps must be >= 1");
  if (h.modes() > 16) throw validation_error("fock_matrix_element: mode count too large");
  if (v.size() != h.modes() || w.size() != h.modes()) {
    throw validation_error("fock_matrix_element: label dimension must equal mode count");
  }
  const detail::FockBasis basis(h.modes(), cfg.cutoff);
  Vector psi = basis.coherent_vector(w.components);
  const double norm0 = psi.squaredNorm();
  const double dt = horizon / cfg.substeps;
  for (int k = 0; k < cfg.substeps; ++k) {
    const double t_mid = (k + 0.5) * dt;
    detail::apply_substep_exponential(basis, h.A(t_mid), h.B(t_mid), dt, psi);
  }
  FockResult result;
  const Vector bra = basis.coherent_vector(v.components);
  result.value = bilinear(bra, psi);
  const double drift = norm0 > 0.0 ? std::abs(psi.squaredNorm() - norm0) / norm0 : 0.0;
  result.truncation_leak = std::max(drift, basis.boundary_mass(psi));
  result.leak_warning = result.truncation_leak > cfg.leak_threshold;
  return result;
}

// |norm(U w)^2 - exp(|w|^2)| / exp(|w|^2): norm preservation of the
// unnormalized coherent vector under the truncated evolution.
inline double unitarity_check(const QuadraticHamiltonian& h, double horizon,
                              const CoherentLabel& w, const FockConfig& cfg) {
  const detail::FockBasis basis(h.modes(), cfg.cutoff);
  Vector psi = basis.coherent_vector(w.components);
  const double dt = horizon / cfg.substeps;
  for (int k = 0; k < cfg.substeps; ++k) {
    const double t_mid = (k + 0.5) * dt;
    detail::apply_substep_exponential(basis, h.A(t_mid), h.B(t_mid), dt, psi);
  }
  const double expected = std::exp(w.components.squaredNorm());
  return std::abs(psi.squaredNorm() - expected) / expected;
}

struct DiscretePIConfig {
  std::int64_t slices = 256;
};

struct DiscretePIResult {
  Complex log_value = 0.0;
  Complex value = 0.0;
};

// Slice weight k: exp{ zbar_{k+1}.E_k z_k - (i dt/2) z_k.B_k z_k
//                      - (i dt/2) zbar_{k+1}.conj(B_k) zbar_{k+1} }
// with E_k = 1 - i dt A_k and A, B sampled at the slice midpoint.  The running
// state after eliminating z_1..z_k is a Gaussian in zbar_k:
//   exp{ 1/2 zbar.P zbar + zbar.r + c },
// updated per slice by the standard complex-pair Gaussian integral; M = 1 - P S
// with S = -i dt B_k is the pivot block whose log det joins c.
inline DiscretePIResult discrete_path_integral(const QuadraticHamiltonian& h, double horizon,
                                               const CoherentLabel& v, const CoherentLabel& w,
                                               const DiscretePIConfig& cfg) {
  if (cfg.slices < 2) throw validation_error("DiscretePIConfig: slices must be >= 2");
  if (v.size() != h.modes() || w.size() != h.modes()) {
    throw validation_error("discrete_path_integral: label dimension must equal mode count");
  }
  const int n = h.modes();
  const std::int64_t nslices = cfg.slices;
  const double dt = horizon / static_cast<double>(nslices);
  const Matrix id = Matrix::Identity(n, n);

  auto slice_a = [&](std::int64_t k) { return h.A((k + 0.5) * dt); };
  auto slice_b = [&](std::int64_t k) { return h.B((k + 0.5) * dt); };

  Matrix b0 = slice_b(0);
  Matrix p = -kI * dt * b0.conjugate();
  Vector r = (id - kI * dt * slice_a(0)) * w.components;
  Complex c = -0.5 * kI * dt * bilinear(w.components, b0, w.components);

  for (std::int64_t k = 1; k < nslices; ++k) {
    const Matrix bk = slice_b(k);
    const Matrix s = -kI * dt * bk;
    const Matrix m = id - p * s;
    Eigen::PartialPivLU<Matrix> lu(m);
    Complex det = 1.0;
    for (int i = 0; i < n; ++i) det *= lu.matrixLU()(i, i);
    det *= Complex(lu.permutationP().determinant(), 0.0);
    if (std::abs(det) < 1e-10) {
      throw singularity_error("discrete_path_integral: singular pivot at slice " +
                              std::to_string(k) + " (kernel crossing at this discretization)");
    }
    const Matrix minv_p = lu.solve(p);
    const Vector minv_r = lu.solve(r);
    const Matrix e = id - kI * dt * slice_a(k);
    c += 0.5 * bilinear(r, s, minv_r) - 0.5 * std::log(det);
    p = (e * minv_p * e.transpose() - kI * dt * bk.conjugate()).eval();
    r = e * minv_r;
  }

  DiscretePIResult result;
  result.log_value =
      0.5 * bilinear(v.components, p, v.components) + bilinear(v.components, r) + c;
  result.value = std::exp(result.log_value);
  return result;
}

// First-order Richardson step from values at N and 2N slices.
inline Complex richardson_extrapolate(Complex value_n, Complex value_2n) {
  return 2.0 * value_2n - value_n;
}

}  // namespace cspi

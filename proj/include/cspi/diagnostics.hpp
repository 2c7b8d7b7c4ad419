#pragma once

// Hilbert-Schmidt implementability scans.  Infinite mode ranges are
// operationalized as cutoff scans over families of independent single modes
// (A_k = omega_k real, B_k = b_k), using the constant-coefficient closed form
// of the 2x2 propagator per mode; verdicts are Cauchy/slope statements about
// partial sums, honestly labeled as verdicts rather than proofs.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cspi/common.hpp"
#include "cspi/core.hpp"

namespace cspi {

struct SingleModeSpec {
  double omega = 0.0;
  Complex b = 0.0;
};

struct ModeFamily {
  std::string name;
  std::function<SingleModeSpec(std::int64_t)> generator;  // 1-based mode index
  std::vector<std::int64_t> cutoffs;                      // increasing K values
};

struct SingleModeBlocks {
  Complex alpha = 1.0;
  Complex beta = 0.0;
};

// exp(-i T W) with W = [[omega, conj(b)], [-b, -omega]] has W^2 = mu^2 id,
// mu^2 = omega^2 - |b|^2, so alpha = cos(mu T) - i omega sin(mu T)/mu and
// beta = -i conj(b) sin(mu T)/mu (complex mu handled by the entire functions
// cos and sinc).
inline SingleModeBlocks single_mode_blocks(double omega, Complex b, double t) {
  const Complex mu2 = Complex(omega * omega, 0.0) - Complex(std::norm(b), 0.0);
  const Complex mu = std::sqrt(mu2);
  const Complex arg = mu * t;
  Complex sinc;  // sin(mu t)/mu, regular at mu = 0
  if (std::abs(arg) < 1e-6) {
    sinc = t * (1.0 - arg * arg / 6.0);
  } else {
    sinc = std::sin(arg) / mu;
  }
  SingleModeBlocks blocks;
  blocks.alpha = std::cos(arg) - kI * omega * sinc;
  blocks.beta = -kI * std::conj(b) * sinc;
  return blocks;
}

// log det(abar0^{-1}(T) abar(T)) for one mode, with the phase tracked
// continuously in t: [0, T] is subdivided until each increment of
// arg(abar0^{-1} abar) is safely below pi and principal increments are summed.
inline Complex single_mode_log_factor(double omega, Complex b, double t) {
  const int nsub =
      std::max(4, static_cast<int>(std::ceil(4.0 * (std::abs(omega) + std::abs(b)) * t)));
  Complex acc = 0.0;
  Complex prev = 1.0;
  for (int j = 1; j <= nsub; ++j) {
    const double tj = t * j / nsub;
    const SingleModeBlocks blocks = single_mode_blocks(omega, b, tj);
    const Complex ratio = std::conj(blocks.alpha) * std::exp(-kI * omega * tj);
    acc += std::log(ratio / prev);
    prev = ratio;
  }
  return acc;
}

struct ScanRow {
  std::int64_t cutoff = 0;
  double hs_norm_sq = 0.0;          // sum |beta_k|^2 up to this cutoff
  double abs_det = 1.0;             // |det(abar0^{-1} abar)| over these modes
  double abs_vacuum_amplitude = 1.0;  // |I_K(0,0)| = abs_det^{-1/2}
  double phase_increment = 0.0;     // change of the tracked -1/2 Im log det vs previous row
  std::string verdict;              // "convergent" / "divergent" at this row
};

struct ScanTable {
  std::string family;
  std::vector<ScanRow> rows;
  double hs_slope_vs_log_k = 0.0;  // tail fit of hs_norm_sq against ln K
  std::string family_verdict;
};

// Per-row verdict: both the HS partial sum and |I_K(0,0)| moved by less than
// `tol` since the previous row.  Summation order is fixed (ascending k) for
// bit-reproducibility.
inline ScanTable implementability_scan(const ModeFamily& fam, double horizon,
                                       double tol = 1e-6) {
  if (fam.cutoffs.empty()) throw validation_error("implementability_scan: empty cutoff list");
  for (std::size_t i = 1; i < fam.cutoffs.size(); ++i) {
    if (fam.cutoffs[i] <= fam.cutoffs[i - 1]) {
      throw validation_error("implementability_scan: cutoffs must be strictly increasing");
    }
  }
  ScanTable table;
  table.family = fam.name;
  double hs = 0.0;
  Complex logdet = 0.0;
  double prev_hs = 0.0, prev_amp = 1.0, prev_phase = 0.0;
  bool have_prev = false;
  std::int64_t k = 1;
  for (const std::int64_t cutoff : fam.cutoffs) {
    for (; k <= cutoff; ++k) {
      const SingleModeSpec spec = fam.generator(k);
      if (!std::isfinite(spec.omega) || !std::isfinite(spec.b.real()) ||
          !std::isfinite(spec.b.imag())) {
        throw validation_error("implementability_scan: non-finite mode data at k = " +
                               std::to_string(k));
      }
      const SingleModeBlocks blocks = single_mode_blocks(spec.omega, spec.b, horizon);
      hs += std::norm(blocks.beta);
      logdet += single_mode_log_factor(spec.omega, spec.b, horizon);
    }
    ScanRow row;
    row.cutoff = cutoff;
    row.hs_norm_sq = hs;
    row.abs_det = std::exp(logdet.real());
    row.abs_vacuum_amplitude = std::exp(-0.5 * logdet.real());
    const double phase = -0.5 * logdet.imag();
    row.phase_increment = have_prev ? phase - prev_phase : phase;
    const bool stable = have_prev && std::abs(hs - prev_hs) < tol &&
                        std::abs(row.abs_vacuum_amplitude - prev_amp) < tol;
    row.verdict = stable ? "convergent" : "divergent";
    prev_hs = hs;
    prev_amp = row.abs_vacuum_amplitude;
    prev_phase = phase;
    have_prev = true;
    table.rows.push_back(row);
  }
  const std::size_t half = table.rows.size() / 2;
  std::vector<double> lnk, hsv;
  for (std::size_t i = half; i < table.rows.size(); ++i) {
    lnk.push_back(std::log(static_cast<double>(table.rows[i].cutoff)));
    hsv.push_back(table.rows[i].hs_norm_sq);
  }
  table.hs_slope_vs_log_k = lnk.size() >= 2 ? fit_slope(lnk, hsv) : 0.0;
  table.family_verdict = table.rows.back().verdict;
  return table;
}

struct HsRow {
  std::int64_t cutoff = 0;
  double partial_sum = 0.0;
  std::string verdict;
};

struct HsTable {
  std::vector<HsRow> rows;
  double slope_vs_log_k = 0.0;
  std::string verdict;
};

// Finite matrix case of the sufficient condition: sum_ab B_ab conj(B_ab),
// a single always-finite value.  Stated for time-independent Hamiltonians only.
inline HsTable b_hs_check(const QuadraticHamiltonian& h) {
  if (!h.is_constant()) {
    throw validation_error("b_hs_check: time-dependent Hamiltonians are unsupported");
  }
  HsTable table;
  HsRow row;
  row.cutoff = h.modes();
  row.partial_sum = h.B(0.0).squaredNorm();
  row.verdict = "convergent";
  table.rows.push_back(row);
  table.verdict = "convergent";
  return table;
}

// Family case: partial sums of |b_k|^2 at each cutoff.  Divergence is decided
// by the normalized tail slope against ln K; otherwise convergent.
inline HsTable b_hs_check(const ModeFamily& fam) {
  if (fam.cutoffs.empty()) throw validation_error("b_hs_check: empty cutoff list");
  HsTable table;
  double sum = 0.0;
  std::int64_t k = 1;
  double prev = 0.0;
  bool have_prev = false;
  for (const std::int64_t cutoff : fam.cutoffs) {
    for (; k <= cutoff; ++k) sum += std::norm(fam.generator(k).b);
    HsRow row;
    row.cutoff = cutoff;
    row.partial_sum = sum;
    row.verdict = (have_prev && std::abs(sum - prev) < 1e-6) ? "convergent" : "divergent";
    prev = sum;
    have_prev = true;
    table.rows.push_back(row);
  }
  const std::size_t half = table.rows.size() / 2;
  std::vector<double> lnk, sums;
  for (std::size_t i = half; i < table.rows.size(); ++i) {
    lnk.push_back(std::log(static_cast<double>(table.rows[i].cutoff)));
    sums.push_back(table.rows[i].partial_sum);
  }
  table.slope_vs_log_k = lnk.size() >= 2 ? fit_slope(lnk, sums) : 0.0;
  const double scale = std::max(1.0, std::abs(table.rows.back().partial_sum));
  table.verdict = (table.slope_vs_log_k > 1e-3 * scale) ? "divergent" : "convergent";
  return table;
}

// Geometric cutoff ladder from k_min to k_max inclusive.
inline std::vector<std::int64_t> geometric_cutoffs(std::int64_t k_min, std::int64_t k_max,
                                                   int points) {
  if (points < 2 || k_min < 1 || k_max <= k_min) {
    throw validation_error("geometric_cutoffs: need points >= 2 and 1 <= k_min < k_max");
  }
  std::vector<std::int64_t> cutoffs;
  const double ratio = std::log(static_cast<double>(k_max) / k_min) / (points - 1);
  std::int64_t prev = 0;
  for (int i = 0; i < points; ++i) {
    auto k = static_cast<std::int64_t>(std::llround(k_min * std::exp(ratio * i)));
    if (k <= prev) k = prev + 1;
    if (k >= k_max) {
      cutoffs.push_back(k_max);
      break;
    }
    cutoffs.push_back(k);
    prev = k;
  }
  if (cutoffs.back() != k_max) cutoffs.push_back(k_max);
  return cutoffs;
}

}  // namespace cspi

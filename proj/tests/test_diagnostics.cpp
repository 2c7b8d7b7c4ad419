#include <catch2/catch_amalgamated.hpp>

#include "cspi/diagnostics.hpp"
#include "cspi/propagator.hpp"
#include "cspi/scenario.hpp"

using namespace cspi;

TEST_CASE("single-mode blocks cover oscillatory, hyperbolic, and critical cases") {
  // omega > |b|: trigonometric.
  auto blocks = single_mode_blocks(1.0, 0.3, 1.0);
  const double mu = std::sqrt(1.0 - 0.09);
  REQUIRE(std::abs(blocks.alpha - (std::cos(mu) - kI * std::sin(mu) / mu)) < 1e-14);
  // omega < |b|: hyperbolic growth, |alpha|^2 - |beta|^2 = 1 still.
  blocks = single_mode_blocks(0.2, Complex(0.0, 0.8), 2.0);
  REQUIRE(std::abs(std::norm(blocks.alpha) - std::norm(blocks.beta) - 1.0) < 1e-12);
  // omega = |b|: the sinc limit.
  blocks = single_mode_blocks(0.5, 0.5, 1.7);
  REQUIRE(std::abs(blocks.alpha - (1.0 - kI * 0.5 * 1.7)) < 1e-9);
  REQUIRE(std::abs(blocks.beta - (-kI) * 0.5 * 1.7) < 1e-9);
}

TEST_CASE("single-mode blocks agree with the integrator") {
  const double omega = 0.7;
  const Complex b(0.3, 0.2);
  Matrix am(1, 1), bm(1, 1);
  am << omega;
  bm << b;
  const auto h = QuadraticHamiltonian::constant(am, bm, 1.3);
  const auto s = evolve_final(h, 1.0, 2048);
  const auto blocks = single_mode_blocks(omega, b, 1.3);
  REQUIRE(std::abs(blocks.alpha - s.alpha(0, 0)) < 1e-11);
  REQUIRE(std::abs(blocks.beta - s.beta(0, 0)) < 1e-11);
}

TEST_CASE("single-mode log factor tracks the integrator determinant") {
  const double omega = 0.7;
  const Complex b(0.3, 0.2);
  Matrix am(1, 1), bm(1, 1);
  am << omega;
  bm << b;
  const auto h = QuadraticHamiltonian::constant(am, bm, 1.3);
  const auto s = evolve_final(h, 1.0, 2048);
  const Complex tracked = single_mode_log_factor(omega, b, 1.3);
  REQUIRE(std::abs(tracked - (s.logdet_abar - s.logdet_abar0)) < 1e-9);
}

TEST_CASE("inverse-square family stabilizes") {
  ModeFamily fam;
  fam.name = "inverse_square";
  fam.generator = [](std::int64_t k) {
    SingleModeSpec spec;
    spec.b = 0.5 / static_cast<double>(k * k);
    return spec;
  };
  fam.cutoffs = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1000};
  const auto scan = implementability_scan(fam, 4.0);
  REQUIRE(scan.family_verdict == "convergent");
  REQUIRE(scan.rows.back().verdict == "convergent");
  // Frozen partial value of |I(0,0)| at K = 1000, T = 4.
  REQUIRE(std::abs(scan.rows.back().abs_vacuum_amplitude - 0.4760324981963886) < 1e-10);
  REQUIRE(scan.rows.back().abs_vacuum_amplitude > 0.0);
  // hs partial sums approach sum 0.25 sinh^2-corrected values; monotone rise.
  REQUIRE(scan.rows.back().hs_norm_sq > scan.rows.front().hs_norm_sq);
}

TEST_CASE("inverse-sqrt family diverges with logarithmic hs growth") {
  ModeFamily fam;
  fam.name = "inverse_sqrt";
  fam.generator = [](std::int64_t k) {
    SingleModeSpec spec;
    spec.b = 0.5 / std::sqrt(static_cast<double>(k));
    return spec;
  };
  fam.cutoffs = geometric_cutoffs(10, 100000, 9);
  const auto scan = implementability_scan(fam, 4.0);
  REQUIRE(scan.family_verdict == "divergent");
  REQUIRE(scan.rows.back().abs_vacuum_amplitude < 1e-3);
  // sum sinh^2(|b_k| T) ~ (0.5 T)^2 ln K for the tail: slope vs ln K near 4.
  REQUIRE(std::abs(scan.hs_slope_vs_log_k - 4.0) < 0.5);
}

TEST_CASE("hs check flags constant-matrix and family inputs consistently") {
  Matrix a(2, 2), b(2, 2);
  a.setZero();
  b << 0.3, 0.1, 0.1, 0.2;
  const auto h = QuadraticHamiltonian::constant(a, b, 1.0);
  const auto table = b_hs_check(h);
  REQUIRE(table.verdict == "convergent");
  REQUIRE(std::abs(table.rows.back().partial_sum - b.squaredNorm()) < 1e-14);

  ModeFamily fam;
  fam.generator = [](std::int64_t k) {
    SingleModeSpec spec;
    spec.b = 1.0 / std::sqrt(static_cast<double>(k));
    return spec;
  };
  fam.cutoffs = geometric_cutoffs(10, 100000, 8);
  REQUIRE(b_hs_check(fam).verdict == "divergent");

  ModeFamily decaying = fam;
  decaying.generator = [](std::int64_t k) {
    SingleModeSpec spec;
    spec.b = 1.0 / static_cast<double>(k * k);
    return spec;
  };
  REQUIRE(b_hs_check(decaying).verdict == "convergent");
}

TEST_CASE("geometric cutoff ladders are strictly increasing and span the range") {
  const auto ladder = geometric_cutoffs(1, 1000, 12);
  REQUIRE(ladder.front() == 1);
  REQUIRE(ladder.back() == 1000);
  for (std::size_t i = 1; i < ladder.size(); ++i) REQUIRE(ladder[i] > ladder[i - 1]);
  const auto tight = geometric_cutoffs(5, 6, 10);
  REQUIRE(tight.front() == 5);
  REQUIRE(tight.back() == 6);
  for (std::size_t i = 1; i < tight.size(); ++i) REQUIRE(tight[i] > tight[i - 1]);
}

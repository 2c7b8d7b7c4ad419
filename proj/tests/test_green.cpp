#include <catch2/catch_amalgamated.hpp>

#include "cspi/green.hpp"
#include "cspi/scenario.hpp"

using namespace cspi;

namespace {

Matrix m1(Complex x) {
  Matrix m(1, 1);
  m(0, 0) = x;
  return m;
}

PropagatorHistory record(const QuadraticHamiltonian& h, double lambda, std::int64_t steps) {
  EvolveOptions opt;
  opt.steps = steps;
  opt.record = true;
  return *evolve(h, lambda, opt).history;
}

}  // namespace

TEST_CASE("free-mode blocks reduce to the rotating step kernel") {
  const double omega = 1.1;
  const auto h = QuadraticHamiltonian::constant(m1(omega), m1(0.0), 1.0);
  const auto kernel = make_green_kernel(record(h, 0.0, 1024));
  const double t = 0.75, u = 0.25;
  const Matrix late = green_block(kernel, t, u);
  REQUIRE(std::abs(late(0, 0) - (-kI) * std::exp(-kI * omega * (t - u))) < 1e-12);
  REQUIRE(std::abs(late(0, 1)) < 1e-13);
  REQUIRE(std::abs(late(1, 0)) < 1e-13);
  REQUIRE(std::abs(late(1, 1)) < 1e-13);

  const Matrix early = green_block(kernel, u, t);
  REQUIRE(std::abs(early(0, 0)) < 1e-13);
  REQUIRE(std::abs(early(1, 1) - (-kI) * std::exp(kI * omega * (u - t))) < 1e-12);

  // Equal time splits the step by theta(0) = 1/2 on the diagonal blocks.
  const Matrix equal = green_block(kernel, t, t);
  REQUIRE(std::abs(equal(0, 0) - Complex(0.0, -0.5)) < 1e-12);
  REQUIRE(std::abs(equal(1, 1) - Complex(0.0, -0.5)) < 1e-12);
}

TEST_CASE("green solve reproduces the constant-source closed form") {
  const double omega = 1.1, horizon = 1.0;
  const auto h = QuadraticHamiltonian::constant(m1(omega), m1(0.0), horizon);
  const auto hist = record(h, 0.0, 512);
  const auto kernel = make_green_kernel(hist);
  const Complex f1(0.4, -0.1), f2(-0.2, 0.3);
  std::vector<Vector> fz(hist.size(), Vector::Constant(1, f1));
  std::vector<Vector> fzbar(hist.size(), Vector::Constant(1, f2));
  const DiscretizedPath forcing(hist.grid, fz, fzbar);
  const DiscretizedPath zeta = green_solve(kernel, forcing);
  REQUIRE(zeta.in_x_space(1e-12));
  double worst = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double t = hist.grid[i];
    const Complex z_exact = (f1 / omega) * (std::exp(-kI * omega * t) - 1.0);
    const Complex zb_exact = (f2 / omega) * (std::exp(kI * omega * (t - horizon)) - 1.0);
    worst = std::max(worst, std::abs(zeta.z[i](0) - z_exact));
    worst = std::max(worst, std::abs(zeta.zbar[i](0) - zb_exact));
  }
  REQUIRE(worst < 5e-10);
}

TEST_CASE("green residual is small and second order in the grid") {
  const auto h = make_random_constant(2, 606, 0.7, 0.4, 1.0);
  auto forcing_on = [&](const PropagatorHistory& hist) {
    std::vector<Vector> fz(hist.size()), fzbar(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const double t = hist.grid[i];
      Vector a(2), b(2);
      a << Complex(0.3 * std::cos(1.7 * t), 0.1), Complex(0.0, 0.2 * std::sin(2.1 * t));
      b << Complex(0.15, -0.25 * std::sin(1.3 * t)), Complex(0.2 * std::cos(0.9 * t), 0.0);
      fz[i] = a;
      fzbar[i] = b;
    }
    return DiscretizedPath(hist.grid, std::move(fz), std::move(fzbar));
  };
  const auto hist_coarse = record(h, 1.0, 500);
  const auto hist_fine = record(h, 1.0, 1000);
  const double res_coarse =
      verify_green(make_green_kernel(hist_coarse), h, forcing_on(hist_coarse));
  const double res_fine = verify_green(make_green_kernel(hist_fine), h, forcing_on(hist_fine));
  REQUIRE(res_fine < 1e-5);
  const double ratio = res_coarse / res_fine;
  REQUIRE(ratio > 3.0);
  REQUIRE(ratio < 5.0);
}

TEST_CASE("trace identity links the kernel diagonal to the determinant flow") {
  const auto h = make_random_constant(2, 707, 0.7, 0.4, 1.0);
  for (double lambda : {0.0, 0.5, 1.0}) {
    const auto hist = record(h, lambda, 1024);
    const auto kernel = make_green_kernel(hist);
    const Complex lhs = trace_gn(kernel, h);
    const Matrix ds = ds_dlambda_from_history(h, hist, h.horizon());
    const Matrix dabar = ds.bottomRightCorner(2, 2);
    const Complex rhs =
        solve_checked(hist.snapshots.back().abar(), dabar, "test: conj(alpha)").trace();
    REQUIRE(std::abs(lhs - rhs) / (1.0 + std::abs(rhs)) < 1e-7);
  }
}

TEST_CASE("equal-time convention cannot leak into the trace") {
  const auto h = make_random_constant(2, 808, 0.7, 0.4, 1.0);
  const auto hist = record(h, 1.0, 256);
  const Complex with_zero = trace_gn(make_green_kernel(hist, 0.0), h);
  const Complex with_one = trace_gn(make_green_kernel(hist, 1.0), h);
  REQUIRE(std::abs(with_zero - with_one) < 1e-12);
}

TEST_CASE("lambda derivative at zero coupling is the bare squeeze insertion") {
  const Complex b(0.3, 0.2);
  const double horizon = 1.2;
  const auto h = QuadraticHamiltonian::constant(m1(0.0), m1(b), horizon);
  const Matrix ds = ds_dlambda(h, 0.0, horizon, 256);
  // S is the identity at lambda = 0, so dS = -T dH with dH = i [[0, conj(b)], [-b, 0]].
  REQUIRE(std::abs(ds(0, 0)) < 1e-12);
  REQUIRE(std::abs(ds(0, 1) - (-kI) * horizon * std::conj(b)) < 1e-10);
  REQUIRE(std::abs(ds(1, 0) - kI * horizon * b) < 1e-10);
  REQUIRE(std::abs(ds(1, 1)) < 1e-12);
}

TEST_CASE("lambda derivative matches central finite differences") {
  const auto h = make_random_constant(2, 909, 0.7, 0.4, 1.0);
  const double lambda = 0.5, eps = 1e-5;
  const Matrix ds = ds_dlambda(h, lambda, h.horizon(), 512);
  const Matrix fd = (evolve_final(h, lambda + eps, 512).full() -
                     evolve_final(h, lambda - eps, 512).full()) /
                    (2.0 * eps);
  REQUIRE((ds - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("the operator is symmetric under the path pairing") {
  // Linear-in-t paths in the vacuum boundary space with constant A, B: central
  // differences are exact and Simpson integrates the quadratic integrand
  // exactly, so the pairing identity holds to rounding.
  const auto h = make_random_constant(2, 111, 0.7, 0.4, 1.0);
  const double lambda = 1.0, horizon = 1.0;
  const std::size_t nodes = 129;
  std::vector<double> grid(nodes);
  for (std::size_t i = 0; i < nodes; ++i) grid[i] = horizon * i / (nodes - 1.0);
  auto linear_path = [&](const Vector& p, const Vector& q) {
    std::vector<Vector> z(nodes), zbar(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      z[i] = grid[i] * p;
      zbar[i] = (horizon - grid[i]) * q;
    }
    return DiscretizedPath(grid, std::move(z), std::move(zbar));
  };
  Vector p1(2), q1(2), p2(2), q2(2);
  p1 << Complex(0.4, 0.1), Complex(-0.2, 0.3);
  q1 << Complex(0.1, -0.3), Complex(0.25, 0.0);
  p2 << Complex(-0.15, 0.2), Complex(0.3, 0.1);
  q2 << Complex(0.2, 0.2), Complex(-0.1, -0.25);
  const auto zeta1 = linear_path(p1, q1);
  const auto zeta2 = linear_path(p2, q2);
  REQUIRE(zeta1.in_x_space());

  const Matrix a = h.A(0.0), bconj = h.B(0.0).conjugate(), bmat = h.B(0.0);
  auto d_rows = [&](const DiscretizedPath& path, const Vector& p, const Vector& q) {
    OperatorDValues d = apply_d_central(h, lambda, path);
    // Central differences only exist on interior nodes; endpoints are filled
    // from the same formula with the exact slope of the linear path.
    d.z_row.front() = kI * p - a * path.z.front() - lambda * bconj * path.zbar.front();
    d.z_row.back() = kI * p - a * path.z.back() - lambda * bconj * path.zbar.back();
    d.zbar_row.front() =
        kI * q - a.conjugate() * path.zbar.front() - lambda * bmat * path.z.front();
    d.zbar_row.back() = kI * q - a.conjugate() * path.zbar.back() - lambda * bmat * path.z.back();
    return d;
  };
  const OperatorDValues d1 = d_rows(zeta1, p1, q1);
  const OperatorDValues d2 = d_rows(zeta2, p2, q2);

  const double dt = grid[1] - grid[0];
  auto pairing = [&](const OperatorDValues& d, const DiscretizedPath& other) {
    std::vector<Complex> samples(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      samples[i] = 0.5 * (bilinear(d.zbar_row[i], other.z[i]) +
                          bilinear(d.z_row[i], other.zbar[i]));
    }
    return integrate_uniform(samples, dt);
  };
  const Complex lhs = pairing(d1, zeta2);
  const Complex rhs = pairing(d2, zeta1);
  REQUIRE(std::abs(lhs - rhs) < 1e-13);
}

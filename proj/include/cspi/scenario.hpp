#pragma once

// Versioned JSON scenario schema (documented in README.md).  Complex numbers
// are [re, im] pairs; matrices are row-major nested arrays of such pairs.
// Hamiltonians come as an inline constant matrix pair, a tabulated time
// series, or a named builtin family.  All randomness used by builtin random
// families flows from the scenario's single seed field.

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cspi/common.hpp"
#include "cspi/core.hpp"
#include "cspi/diagnostics.hpp"
#include "cspi/oracles.hpp"
#include "cspi/propagator.hpp"

namespace cspi {

using Json = nlohmann::json;

inline Complex parse_complex(const Json& j, const std::string& where) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return Complex(j[0].get<double>(), j[1].get<double>());
  }
  throw validation_error(where + ": complex values must be numbers or [re, im] pairs");
}

inline Matrix parse_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw validation_error(where + ": expected a matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw validation_error(where + ": expected nested rows");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw validation_error(where + ": ragged matrix rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(r, c) = parse_complex(j[r][c], where);
    }
  }
  return m;
}

inline Vector parse_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw validation_error(where + ": expected an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = parse_complex(j[i], where);
  return v;
}

// Seeded random matrix families.
inline Matrix random_hermitian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m(r, c) = Complex(dist(rng), dist(rng));
  }
  return (0.5 * scale / std::sqrt(double(n))) * (m + m.adjoint()).eval();
}

inline Matrix random_symmetric(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m(r, c) = Complex(dist(rng), dist(rng));
  }
  return (0.5 * scale / std::sqrt(double(n))) * (m + m.transpose()).eval();
}

inline Vector random_label(std::mt19937_64& rng, int n, double max_norm) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(dist(rng), dist(rng));
  const double norm = v.norm();
  if (norm > 0.0) v *= (max_norm * std::uniform_real_distribution<double>(0.3, 1.0)(rng) / norm);
  return v;
}

inline QuadraticHamiltonian make_random_constant(int n, std::uint64_t seed, double a_scale,
                                                 double b_scale, double horizon) {
  std::mt19937_64 rng(seed);
  const Matrix a = random_hermitian(rng, n, a_scale);
  const Matrix b = random_symmetric(rng, n, b_scale);
  return QuadraticHamiltonian::constant(a, b, horizon);
}

// Smooth time dependence: a constant part plus `harmonics` cosine/sine pairs
// with O(1) frequencies; every coefficient matrix keeps the required symmetry.
inline QuadraticHamiltonian make_random_smooth(int n, std::uint64_t seed, int harmonics,
                                               double a_scale, double b_scale, double horizon) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(0.5, 3.0);
  std::vector<Matrix> ac, as, bc, bs;
  std::vector<double> wa, wb;
  const Matrix a0 = random_hermitian(rng, n, a_scale);
  const Matrix b0 = random_symmetric(rng, n, b_scale);
  for (int j = 0; j < harmonics; ++j) {
    const double damp = 1.0 / (1.0 + j);
    ac.push_back(random_hermitian(rng, n, a_scale * damp));
    as.push_back(random_hermitian(rng, n, a_scale * damp));
    bc.push_back(random_symmetric(rng, n, b_scale * damp));
    bs.push_back(random_symmetric(rng, n, b_scale * damp));
    wa.push_back(freq(rng));
    wb.push_back(freq(rng));
  }
  auto a_fn = [a0, ac, as, wa](double t) {
    Matrix m = a0;
    for (std::size_t j = 0; j < ac.size(); ++j) {
      m += ac[j] * std::cos(wa[j] * t) + as[j] * std::sin(wa[j] * t);
    }
    return m;
  };
  auto b_fn = [b0, bc, bs, wb](double t) {
    Matrix m = b0;
    for (std::size_t j = 0; j < bc.size(); ++j) {
      m += bc[j] * std::cos(wb[j] * t) + bs[j] * std::sin(wb[j] * t);
    }
    return m;
  };
  return QuadraticHamiltonian::from_callables(n, a_fn, b_fn, horizon);
}

struct Scenario {
  int version = 1;
  std::string name;
  int modes = 1;
  double horizon = 1.0;
  double lambda = 1.0;
  std::uint64_t seed = 1;
  std::optional<QuadraticHamiltonian> hamiltonian;
  Vector v, w;
  EvolveOptions integrator;
  FockConfig fock;
  std::vector<std::int64_t> pi_slices = {64, 128, 256, 512, 1024};

  const QuadraticHamiltonian& ham() const {
    if (!hamiltonian) throw validation_error("Scenario: hamiltonian not resolved");
    return *hamiltonian;
  }
};

inline QuadraticHamiltonian build_builtin_hamiltonian(const std::string& family,
                                                      const Json& params, int modes,
                                                      double horizon, std::uint64_t seed) {
  auto get = [&](const std::string& key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
  };
  if (family == "single_mode_squeeze") {
    const Complex b(get("b_re", 0.6), get("b_im", 0.0));
    Matrix bm(1, 1);
    bm(0, 0) = b;
    return QuadraticHamiltonian::constant(Matrix::Zero(1, 1), bm, horizon);
  }
  if (family == "free_mode") {
    Matrix a(1, 1);
    a(0, 0) = get("omega", 1.0);
    return QuadraticHamiltonian::constant(a, Matrix::Zero(1, 1), horizon);
  }
  if (family == "frequency_sweep") {
    const double omega0 = get("omega0", 1.0);
    const double omega1 = get("omega1", 2.0);
    auto a_fn = [omega0, omega1, horizon](double t) {
      Matrix a(1, 1);
      const double s = horizon > 0.0 ? t / horizon : 0.0;
      a(0, 0) = omega0 + (omega1 - omega0) * s;
      return a;
    };
    auto b_fn = [](double) { return Matrix::Zero(1, 1).eval(); };
    return QuadraticHamiltonian::from_callables(1, a_fn, b_fn, horizon);
  }
  if (family == "random_constant") {
    return make_random_constant(modes, seed, get("a_scale", 0.8), get("b_scale", 0.4), horizon);
  }
  if (family == "random_smooth") {
    return make_random_smooth(modes, seed, static_cast<int>(get("harmonics", 2)),
                              get("a_scale", 0.8), get("b_scale", 0.4), horizon);
  }
  throw validation_error("Scenario: unknown builtin hamiltonian family '" + family + "'");
}

inline Scenario parse_scenario(const Json& j) {
  Scenario sc;
  if (!j.contains("version") || j.at("version").get<int>() != 1) {
    throw validation_error("Scenario: missing or unsupported version (expected 1)");
  }
  sc.name = j.value("name", std::string("unnamed"));
  sc.modes = j.value("modes", 1);
  sc.horizon = j.value("horizon", 1.0);
  sc.lambda = j.value("lambda", 1.0);
  sc.seed = j.value("seed", std::uint64_t{1});
  if (!std::isfinite(sc.horizon) || !std::isfinite(sc.lambda)) {
    throw validation_error("Scenario: horizon and lambda must be finite");
  }

  if (!j.contains("hamiltonian")) throw validation_error("Scenario: missing hamiltonian");
  const Json& hj = j.at("hamiltonian");
  const std::string type = hj.value("type", std::string());
  if (type == "constant") {
    const Matrix a = parse_matrix(hj.at("A"), "hamiltonian.A");
    const Matrix b = parse_matrix(hj.at("B"), "hamiltonian.B");
    sc.hamiltonian = QuadraticHamiltonian::constant(a, b, sc.horizon);
  } else if (type == "tabulated") {
    const std::vector<double> times = hj.at("times").get<std::vector<double>>();
    std::vector<Matrix> as, bs;
    for (const auto& m : hj.at("A_samples")) as.push_back(parse_matrix(m, "hamiltonian.A_samples"));
    for (const auto& m : hj.at("B_samples")) bs.push_back(parse_matrix(m, "hamiltonian.B_samples"));
    sc.hamiltonian = QuadraticHamiltonian::tabulated(times, as, bs);
    if (std::abs(sc.hamiltonian->horizon() - sc.horizon) > 1e-12 * std::max(1.0, sc.horizon)) {
      throw validation_error("Scenario: tabulated grid must end at the declared horizon");
    }
  } else if (type == "builtin") {
    sc.hamiltonian = build_builtin_hamiltonian(hj.value("family", std::string()),
                                               hj.value("params", Json::object()), sc.modes,
                                               sc.horizon, sc.seed);
  } else {
    throw validation_error("Scenario: hamiltonian.type must be constant/tabulated/builtin");
  }
  if (sc.hamiltonian->modes() != sc.modes) {
    throw validation_error("Scenario: hamiltonian dimension disagrees with 'modes'");
  }

  if (j.contains("labels")) {
    const Json& lj = j.at("labels");
    sc.v = lj.contains("v") ? parse_vector(lj.at("v"), "labels.v") : Vector::Zero(sc.modes);
    sc.w = lj.contains("w") ? parse_vector(lj.at("w"), "labels.w") : Vector::Zero(sc.modes);
  } else {
    sc.v = Vector::Zero(sc.modes);
    sc.w = Vector::Zero(sc.modes);
  }
  if (sc.v.size() != sc.modes || sc.w.size() != sc.modes) {
    throw validation_error("Scenario: label length must equal mode count");
  }
  if (!is_finite(sc.v) || !is_finite(sc.w)) {
    throw validation_error("Scenario: labels must be finite");
  }

  if (j.contains("integrator")) {
    const Json& ij = j.at("integrator");
    sc.integrator.steps = ij.value("steps", sc.integrator.steps);
    sc.integrator.reproject_every = ij.value("reproject_every", sc.integrator.reproject_every);
    sc.integrator.defect_bound = ij.value("defect_bound", sc.integrator.defect_bound);
  }
  if (j.contains("oracles")) {
    const Json& oj = j.at("oracles");
    if (oj.contains("fock")) {
      sc.fock.cutoff = oj.at("fock").value("cutoff", sc.fock.cutoff);
      sc.fock.substeps = oj.at("fock").value("substeps", sc.fock.substeps);
    }
    if (oj.contains("discrete_pi") && oj.at("discrete_pi").contains("slices")) {
      sc.pi_slices = oj.at("discrete_pi").at("slices").get<std::vector<std::int64_t>>();
      if (sc.pi_slices.empty()) throw validation_error("Scenario: empty discrete_pi.slices");
    }
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open scenario file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw validation_error("scenario parse failure in " + path + ": " + e.what());
  }
  return parse_scenario(j);
}

// Family file for implementability scans: b_k = coefficient / k^exponent with
// constant omega, plus an explicit or geometric cutoff ladder.
struct FamilyFile {
  std::string name;
  double horizon = 1.0;
  ModeFamily family;
};

inline FamilyFile parse_family_file(const Json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1) {
    throw validation_error("family file: missing or unsupported version (expected 1)");
  }
  if (!j.contains("family")) throw validation_error("family file: missing 'family'");
  FamilyFile f;
  f.name = j.value("name", std::string("family"));
  f.horizon = j.value("horizon", 1.0);
  const Json& fj = j.at("family");
  const std::string type = fj.value("type", std::string());
  if (type != "power") throw validation_error("family file: family.type must be 'power'");
  const double coefficient = fj.value("coefficient", 0.5);
  const double exponent = fj.value("exponent", 2.0);
  const double omega = fj.value("omega", 0.0);
  f.family.name = f.name;
  f.family.generator = [coefficient, exponent, omega](std::int64_t k) {
    SingleModeSpec spec;
    spec.omega = omega;
    spec.b = coefficient / std::pow(static_cast<double>(k), exponent);
    return spec;
  };
  if (j.contains("cutoffs")) {
    f.family.cutoffs = j.at("cutoffs").get<std::vector<std::int64_t>>();
  } else if (j.contains("cutoff_ladder")) {
    const Json& cj = j.at("cutoff_ladder");
    f.family.cutoffs = geometric_cutoffs(cj.value("k_min", std::int64_t{1}),
                                         cj.value("k_max", std::int64_t{1000}),
                                         cj.value("points", 12));
  }
  if (f.family.cutoffs.empty()) {
    throw usage_error("family file: no cutoffs given (empty family)");
  }
  return f;
}

inline FamilyFile load_family_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open family file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw validation_error("family file parse failure in " + path + ": " + e.what());
  }
  return parse_family_file(j);
}

}  // namespace cspi

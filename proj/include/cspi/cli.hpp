#pragma once

// In-process command runners behind the command-line tool: each takes a parsed
// scenario (or family file), writes reports under an output directory, mirrors
// a summary to the given stream, and returns a process exit code.  Keeping
// them header-level functions lets the test suite drive them without spawning
// processes.

#include <atomic>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cspi/amplitude.hpp"
#include "cspi/bogoliubov.hpp"
#include "cspi/common.hpp"
#include "cspi/core.hpp"
#include "cspi/diagnostics.hpp"
#include "cspi/errors.hpp"
#include "cspi/green.hpp"
#include "cspi/oracles.hpp"
#include "cspi/propagator.hpp"
#include "cspi/report.hpp"
#include "cspi/scenario.hpp"

namespace cspi {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;

// Fixed gate tolerances for `verify`; residual columns report the measured
// values, which for structured scenarios sit far below these gates.
inline constexpr double kVerifyDefectTol = 1e-8;
inline constexpr double kVerifyGreenTol = 1e-3;
inline constexpr double kVerifyTraceTol = 1e-6;
inline constexpr double kVerifyDsymTol = 1e-6;
inline constexpr double kVerifyReversalTol = 1e-8;
inline constexpr double kVerifyVacuumTol = 1e-10;

struct Overrides {
  std::optional<std::int64_t> steps;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
};

// Overrides are spliced into the JSON before construction so seeded builtin
// Hamiltonians see the overridden seed.
inline Scenario load_scenario_with_overrides(const std::string& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open scenario file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw validation_error("scenario parse failure in " + path + ": " + e.what());
  }
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.lambda) j["lambda"] = *ov.lambda;
  if (ov.steps) j["integrator"]["steps"] = *ov.steps;
  return parse_scenario(j);
}

inline int run_amplitude(const Scenario& sc, const std::string& out_dir, std::ostream& log) {
  const EvolveResult res = evolve(sc.ham(), sc.lambda, sc.integrator);
  const SymplecticPropagator& s = res.propagator;
  const double defect = symplectic_defect(s);
  const CoherentLabel v(sc.v), w(sc.w);
  const Amplitude amp = transition_amplitude(s, v, w);
  const SaddlePoint saddle = classical_saddle(s, v, w);
  const Complex log_det_factor = -0.5 * (s.logdet_abar - s.logdet_abar0);

  std::ostringstream out;
  out << "scenario " << sc.name << "\n";
  out << "modes " << sc.modes << "\n";
  out << "horizon " << format_double(sc.horizon) << "\n";
  out << "lambda " << format_double(sc.lambda) << "\n";
  out << "steps " << sc.integrator.steps << "\n";
  out << "seed " << sc.seed << "\n";
  out << "symplectic_defect " << format_double(defect) << "\n";
  out << "log_amplitude " << format_complex_pair(amp.log_value) << "\n";
  out << "amplitude " << format_complex_pair(amp.value) << "\n";
  out << "overflow " << (amp.overflow ? 1 : 0) << "\n";
  out << "log_det_factor " << format_complex_pair(log_det_factor) << "\n";
  for (int i = 0; i < sc.modes; ++i) {
    out << "saddle_z_final_" << i << " " << format_complex_pair(saddle.z_final(i)) << "\n";
  }
  for (int i = 0; i < sc.modes; ++i) {
    out << "saddle_zbar_initial_" << i << " " << format_complex_pair(saddle.zbar_initial(i))
        << "\n";
  }
  write_file_atomic(out_dir + "/" + sc.name + ".amplitude.txt", out.str());
  log << out.str();
  return kExitOk;
}

namespace detail {

struct CheckRow {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

// Smooth seeded forcing sampled on the history grid; amplitude kept small so
// the finite-difference residual floor stays well inside the report range.
inline DiscretizedPath make_verify_forcing(const PropagatorHistory& hist, int n,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> coeff(0.0, 1.0);
  std::uniform_real_distribution<double> freq(0.5, 1.5);
  struct Harmonic {
    Complex c0, cc, cs;
    double w;
  };
  std::vector<std::vector<Harmonic>> hz(n), hzbar(n);
  for (int comp = 0; comp < n; ++comp) {
    for (int j = 0; j < 3; ++j) {
      const double damp = 0.1 / (1.0 + j);
      hz[comp].push_back({Complex(coeff(rng), coeff(rng)) * damp,
                          Complex(coeff(rng), coeff(rng)) * damp,
                          Complex(coeff(rng), coeff(rng)) * damp, freq(rng)});
      hzbar[comp].push_back({Complex(coeff(rng), coeff(rng)) * damp,
                             Complex(coeff(rng), coeff(rng)) * damp,
                             Complex(coeff(rng), coeff(rng)) * damp, freq(rng)});
    }
  }
  auto eval = [](const std::vector<Harmonic>& hs, double t) {
    Complex acc = 0.0;
    for (const Harmonic& h : hs) acc += h.c0 + h.cc * std::cos(h.w * t) + h.cs * std::sin(h.w * t);
    return acc;
  };
  std::vector<Vector> fz(hist.size()), fzbar(hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i) {
    Vector a(n), b(n);
    for (int comp = 0; comp < n; ++comp) {
      a(comp) = eval(hz[comp], hist.grid[i]);
      b(comp) = eval(hzbar[comp], hist.grid[i]);
    }
    fz[i] = a;
    fzbar[i] = b;
  }
  return DiscretizedPath(hist.grid, std::move(fz), std::move(fzbar));
}

}  // namespace detail

// Re-derives the structural identities on the scenario: canonical-pair defect,
// Green-function residual, trace identity across a lambda ladder, the
// lambda-derivative of the propagator against finite differences, the
// conjugation-reversal identity, and the vacuum amplitude bound.
inline int run_verify(const Scenario& sc, const std::string& out_dir, std::ostream& log) {
  std::vector<detail::CheckRow> rows;
  auto add = [&rows](const std::string& name, double residual, double tol) {
    rows.push_back({name, residual, tol, residual <= tol, ""});
  };
  auto add_error = [&rows](const std::string& name, double tol, const std::string& what) {
    rows.push_back({name, std::numeric_limits<double>::infinity(), tol, false, what});
  };
  const QuadraticHamiltonian& h = sc.ham();

  std::optional<PropagatorHistory> base_hist;
  try {
    EvolveOptions opt = sc.integrator;
    opt.record = true;
    EvolveResult res = evolve(h, sc.lambda, opt);
    add("canonical_pair_defect", symplectic_defect(res.propagator), kVerifyDefectTol);
    base_hist = std::move(res.history);
  } catch (const std::exception& e) {
    add_error("canonical_pair_defect", kVerifyDefectTol, e.what());
  }

  if (base_hist) {
    try {
      const GreenKernel kernel = make_green_kernel(*base_hist);
      const DiscretizedPath forcing = detail::make_verify_forcing(*base_hist, sc.modes, sc.seed);
      add("green_residual", verify_green(kernel, h, forcing), kVerifyGreenTol);
    } catch (const std::exception& e) {
      add_error("green_residual", kVerifyGreenTol, e.what());
    }
  } else {
    add_error("green_residual", kVerifyGreenTol, "no history (evolution failed)");
  }

  try {
    double worst = 0.0;
    for (double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      EvolveOptions opt = sc.integrator;
      opt.record = true;
      const EvolveResult res = evolve(h, lam, opt);
      const GreenKernel kernel = make_green_kernel(*res.history);
      const Complex lhs = trace_gn(kernel, h);
      const Matrix ds = ds_dlambda_from_history(h, *res.history, h.horizon());
      const int n = sc.modes;
      const Matrix dabar = ds.bottomRightCorner(n, n);
      const Complex rhs = solve_checked(res.propagator.abar(), dabar, "verify: conj(alpha)")
                              .trace();
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
    add("trace_identity", worst, kVerifyTraceTol);
  } catch (const std::exception& e) {
    add_error("trace_identity", kVerifyTraceTol, e.what());
  }

  try {
    const double eps = 1e-5;
    const Matrix ds = ds_dlambda(h, sc.lambda, h.horizon(), sc.integrator.steps);
    const Matrix s_plus = evolve_final(h, sc.lambda + eps, sc.integrator.steps).full();
    const Matrix s_minus = evolve_final(h, sc.lambda - eps, sc.integrator.steps).full();
    const Matrix fd = (s_plus - s_minus) / (2.0 * eps);
    add("lambda_derivative", (ds - fd).cwiseAbs().maxCoeff(), kVerifyDsymTol);
  } catch (const std::exception& e) {
    add_error("lambda_derivative", kVerifyDsymTol, e.what());
  }

  try {
    const CoherentLabel v(sc.v), w(sc.w);
    const SymplecticPropagator fwd = evolve_final(h, sc.lambda, sc.integrator.steps);
    const Amplitude a_fwd = transition_amplitude(fwd, v, w);
    const double horizon = h.horizon();
    auto a_rev = [&h, horizon](double t) { return (-h.A(horizon - t)).eval(); };
    auto b_rev = [&h, horizon](double t) { return (-h.B(horizon - t)).eval(); };
    const QuadraticHamiltonian h_rev =
        QuadraticHamiltonian::from_callables(h.modes(), a_rev, b_rev, horizon);
    const SymplecticPropagator bwd = evolve_final(h_rev, sc.lambda, sc.integrator.steps);
    const Amplitude a_bwd = transition_amplitude(bwd, CoherentLabel(sc.w.conjugate()),
                                                 CoherentLabel(sc.v.conjugate()));
    const double scale = 1.0 + std::abs(a_fwd.log_value);
    add("conjugation_reversal",
        std::abs(std::conj(a_fwd.log_value) - a_bwd.log_value) / scale, kVerifyReversalTol);
  } catch (const std::exception& e) {
    add_error("conjugation_reversal", kVerifyReversalTol, e.what());
  }

  try {
    const SymplecticPropagator s = evolve_final(h, sc.lambda, sc.integrator.steps);
    const CoherentLabel zero = CoherentLabel::zero(sc.modes);
    const Amplitude vac = transition_amplitude(s, zero, zero);
    const double excess = std::max(0.0, std::abs(vac.value) - 1.0);
    add("vacuum_bound", excess, kVerifyVacuumTol);
  } catch (const std::exception& e) {
    add_error("vacuum_bound", kVerifyVacuumTol, e.what());
  }

  std::ostringstream out;
  out << "scenario " << sc.name << "\n";
  out << "steps " << sc.integrator.steps << "\n";
  out << "seed " << sc.seed << "\n";
  bool all_pass = true;
  for (const auto& row : rows) {
    out << row.name << " residual=" << format_double(row.residual)
        << " tolerance=" << format_double(row.tolerance) << " "
        << (row.pass ? "pass" : "FAIL");
    if (!row.note.empty()) out << " (" << row.note << ")";
    out << "\n";
    all_pass = all_pass && row.pass;
  }
  out << "verdict " << (all_pass ? "pass" : "FAIL") << "\n";
  write_file_atomic(out_dir + "/" + sc.name + ".verify.txt", out.str());
  log << out.str();
  return all_pass ? kExitOk : kExitFailure;
}

namespace detail {

inline std::vector<std::string> compare_row(const Scenario& sc) {
  if (std::abs(sc.lambda - 1.0) > 1e-12) {
    throw validation_error("compare requires lambda = 1 (oracles integrate the full coupling)");
  }
  const QuadraticHamiltonian& h = sc.ham();
  const CoherentLabel v(sc.v), w(sc.w);
  const SymplecticPropagator s = evolve_final(h, sc.lambda, sc.integrator.steps);
  const Amplitude closed = transition_amplitude(s, v, w);
  const FockResult fock = fock_matrix_element(h, h.horizon(), v, w, sc.fock);

  std::vector<std::int64_t> slices = sc.pi_slices;
  std::sort(slices.begin(), slices.end());
  Complex pi_last = 0.0, pi_prev = 0.0;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    DiscretePIConfig cfg;
    cfg.slices = slices[i];
    const DiscretePIResult r = discrete_path_integral(h, h.horizon(), v, w, cfg);
    pi_prev = pi_last;
    pi_last = r.value;
  }
  const Complex extrapolated =
      slices.size() >= 2 && slices.back() == 2 * slices[slices.size() - 2]
          ? richardson_extrapolate(pi_prev, pi_last)
          : pi_last;

  return {sc.name,
          format_double(closed.value.real()),
          format_double(closed.value.imag()),
          format_double(fock.value.real()),
          format_double(fock.value.imag()),
          format_double(fock.truncation_leak),
          format_double(pi_last.real()),
          format_double(pi_last.imag()),
          format_double(extrapolated.real()),
          format_double(extrapolated.imag()),
          format_double(std::abs(closed.value - fock.value)),
          format_double(std::abs(closed.value - extrapolated))};
}

// Runs fn(i) for i in [0, count) across `jobs` threads; results land by index
// so output order never depends on scheduling.  The first exception wins.
template <typename Fn>
inline void run_indexed(std::size_t count, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int wk = 0; wk < workers; ++wk) {
    pool.emplace_back([&, wk]() {
      try {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[wk] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace detail

inline int run_compare(const std::vector<Scenario>& scenarios, const std::string& out_dir,
                       std::ostream& log, int jobs = 1) {
  CsvTable table;
  table.header = {"scenario",  "closed_re", "closed_im", "fock_re",
                  "fock_im",   "fock_leak", "pi_re",     "pi_im",
                  "extrap_re", "extrap_im", "abs_err_fock", "abs_err_extrap"};
  std::vector<std::vector<std::string>> rows(scenarios.size());
  detail::run_indexed(scenarios.size(), jobs,
                      [&](std::size_t i) { rows[i] = detail::compare_row(scenarios[i]); });
  for (auto& row : rows) table.add_row(std::move(row));
  const std::string csv = table.serialize();
  write_file_atomic(out_dir + "/compare.csv", csv);
  log << csv;
  return kExitOk;
}

inline int run_scan(const FamilyFile& family, const std::string& out_dir, std::ostream& log) {
  const ScanTable scan = implementability_scan(family.family, family.horizon);
  CsvTable table;
  table.header = {"K", "hs_norm_sq", "abs_det", "abs_vacuum_amplitude", "phase_increment",
                  "verdict"};
  for (const ScanRow& row : scan.rows) {
    table.add_row({std::to_string(row.cutoff), format_double(row.hs_norm_sq),
                   format_double(row.abs_det), format_double(row.abs_vacuum_amplitude),
                   format_double(row.phase_increment), row.verdict});
  }
  write_file_atomic(out_dir + "/" + family.name + ".scan.csv", table.serialize());
  log << "family " << family.name << " verdict " << scan.family_verdict
      << " hs_slope_vs_log_k " << format_double(scan.hs_slope_vs_log_k) << "\n";
  return kExitOk;
}

inline int run_evolve_dump(const Scenario& sc, const std::string& out_dir, std::ostream& log) {
  EvolveOptions opt = sc.integrator;
  opt.record = true;
  const EvolveResult res = evolve(sc.ham(), sc.lambda, opt);
  const PropagatorHistory& hist = *res.history;
  const int n = sc.modes;

  CsvTable table;
  table.header = {"t"};
  auto block_headers = [&table, n](const std::string& prefix) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const std::string base = prefix + "_" + std::to_string(r) + "_" + std::to_string(c);
        table.header.push_back(base + "_re");
        table.header.push_back(base + "_im");
      }
    }
  };
  block_headers("alpha");
  block_headers("beta");
  for (const char* name : {"logdet_abar_re", "logdet_abar_im", "logdet_abar0_re",
                           "logdet_abar0_im", "defect"}) {
    table.header.push_back(name);
  }

  for (std::size_t i = 0; i < hist.size(); ++i) {
    const SymplecticPropagator& s = hist.snapshots[i];
    std::vector<std::string> row;
    row.push_back(format_double(hist.grid[i]));
    auto push_block = [&row, n](const Matrix& m) {
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          row.push_back(format_double(m(r, c).real()));
          row.push_back(format_double(m(r, c).imag()));
        }
      }
    };
    push_block(s.alpha);
    push_block(s.beta);
    row.push_back(format_double(s.logdet_abar.real()));
    row.push_back(format_double(s.logdet_abar.imag()));
    row.push_back(format_double(s.logdet_abar0.real()));
    row.push_back(format_double(s.logdet_abar0.imag()));
    row.push_back(format_double(symplectic_defect(s)));
    table.add_row(std::move(row));
  }
  write_file_atomic(out_dir + "/" + sc.name + ".evolve.csv", table.serialize());
  log << "scenario " << sc.name << " nodes " << hist.size() << " final_defect "
      << format_double(symplectic_defect(hist.snapshots.back())) << "\n";
  return kExitOk;
}

}  // namespace cspi

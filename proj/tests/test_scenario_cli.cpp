#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cspi/cli.hpp"

using namespace cspi;

namespace {

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cspi_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir.string();
}

Json squeeze_json() {
  return Json::parse(R"({
    "version": 1,
    "name": "squeeze_small",
    "modes": 1,
    "horizon": 1.0,
    "lambda": 1.0,
    "seed": 42,
    "hamiltonian": {"type": "builtin", "family": "single_mode_squeeze",
                    "params": {"b_re": 0.6, "b_im": 0.0}},
    "labels": {"v": [[0.0, 0.0]], "w": [[0.0, 0.0]]},
    "integrator": {"steps": 512},
    "oracles": {"fock": {"cutoff": 40, "substeps": 256},
                "discrete_pi": {"slices": [256, 512]}}
  })");
}

}  // namespace

TEST_CASE("complex and matrix parsing accepts pairs and rejects junk") {
  REQUIRE(parse_complex(Json::parse("[1.5, -2.0]"), "x") == Complex(1.5, -2.0));
  REQUIRE(parse_complex(Json::parse("3.25"), "x") == Complex(3.25, 0.0));
  REQUIRE_THROWS_AS(parse_complex(Json::parse(R"("one")"), "x"), validation_error);
  REQUIRE_THROWS_AS(parse_complex(Json::parse("[1, 2, 3]"), "x"), validation_error);

  const Matrix m = parse_matrix(Json::parse("[[[0,1],[2,0]],[[2,0],[0,-1]]]"), "m");
  REQUIRE(m(0, 0) == Complex(0.0, 1.0));
  REQUIRE(m(1, 1) == Complex(0.0, -1.0));
  REQUIRE_THROWS_AS(parse_matrix(Json::parse("[[[0,0]],[[0,0],[0,0]]]"), "m"), validation_error);
}

TEST_CASE("scenario parsing enforces version, structure, and finiteness") {
  Json good = squeeze_json();
  REQUIRE_NOTHROW(parse_scenario(good));

  Json no_version = good;
  no_version.erase("version");
  REQUIRE_THROWS_AS(parse_scenario(no_version), validation_error);

  Json bad_version = good;
  bad_version["version"] = 7;
  REQUIRE_THROWS_AS(parse_scenario(bad_version), validation_error);

  Json no_ham = good;
  no_ham.erase("hamiltonian");
  REQUIRE_THROWS_AS(parse_scenario(no_ham), validation_error);

  Json bad_family = good;
  bad_family["hamiltonian"]["family"] = "nonexistent";
  REQUIRE_THROWS_AS(parse_scenario(bad_family), validation_error);

  Json bad_labels = good;
  bad_labels["labels"]["v"] = Json::parse("[[0,0],[0,0]]");
  REQUIRE_THROWS_AS(parse_scenario(bad_labels), validation_error);
}

TEST_CASE("non-symmetric squeezing matrix fails validation by name") {
  const Json j = Json::parse(R"({
    "version": 1, "name": "bad", "modes": 2, "horizon": 1.0,
    "hamiltonian": {"type": "constant",
                    "A": [[[1,0],[0,0]],[[0,0],[1,0]]],
                    "B": [[[0.3,0],[0.1,0]],[[0.4,0],[0.2,0]]]}
  })");
  try {
    parse_scenario(j);
    FAIL("expected validation_error");
  } catch (const validation_error& e) {
    REQUIRE(std::string(e.what()).find("symmetric") != std::string::npos);
  }
}

TEST_CASE("builtin families produce the advertised hamiltonians") {
  Json sweep = Json::parse(R"({
    "version": 1, "name": "sweep", "modes": 1, "horizon": 2.0,
    "hamiltonian": {"type": "builtin", "family": "frequency_sweep",
                    "params": {"omega0": 1.0, "omega1": 3.0}}
  })");
  const Scenario sc = parse_scenario(sweep);
  REQUIRE(std::abs(sc.ham().A(0.0)(0, 0) - 1.0) < 1e-15);
  REQUIRE(std::abs(sc.ham().A(2.0)(0, 0) - 3.0) < 1e-15);
  REQUIRE(std::abs(sc.ham().A(1.0)(0, 0) - 2.0) < 1e-15);

  Json rnd = Json::parse(R"({
    "version": 1, "name": "rnd", "modes": 3, "horizon": 1.0, "seed": 99,
    "hamiltonian": {"type": "builtin", "family": "random_constant", "params": {}}
  })");
  const Scenario r1 = parse_scenario(rnd);
  const Scenario r2 = parse_scenario(rnd);
  REQUIRE((r1.ham().A(0.0) - r2.ham().A(0.0)).norm() == 0.0);
  rnd["seed"] = 100;
  const Scenario r3 = parse_scenario(rnd);
  REQUIRE((r1.ham().A(0.0) - r3.ham().A(0.0)).norm() > 1e-3);
}

TEST_CASE("tabulated scenario must end at the declared horizon") {
  const Json j = Json::parse(R"({
    "version": 1, "name": "tab", "modes": 1, "horizon": 2.0,
    "hamiltonian": {"type": "tabulated", "times": [0.0, 1.0],
                    "A_samples": [[[[1,0]]], [[[2,0]]]],
                    "B_samples": [[[[0,0]]], [[[0,0]]]]}
  })");
  REQUIRE_THROWS_AS(parse_scenario(j), validation_error);
}

TEST_CASE("doubles survive the fixed csv formatting exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 2.718281828459045, -0.9184501552190009, 1e17}) {
    const std::string s = format_double(x);
    REQUIRE(std::strtod(s.c_str(), nullptr) == x);
  }
}

TEST_CASE("csv tables round-trip through the schema parser") {
  CsvTable t;
  t.header = {"a", "b", "c"};
  t.add_row({"1", format_double(0.1), "text"});
  t.add_row({format_double(-2.5e-7), "x", ""});
  const std::string wire = t.serialize();
  const CsvTable back = parse_csv(wire);
  REQUIRE(back.header == t.header);
  REQUIRE(back.rows == t.rows);
  REQUIRE(back.serialize() == wire);
  REQUIRE_THROWS_AS(t.add_row({"only", "two"}), validation_error);
}

TEST_CASE("atomic writes land complete files in fresh directories") {
  const std::string dir = temp_dir("atomic");
  const std::string path = dir + "/sub/report.txt";
  write_file_atomic(path, "payload\n");
  REQUIRE(read_file(path) == "payload\n");
  REQUIRE_FALSE(std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("family files load and reject empty ladders") {
  Json fam = Json::parse(R"({
    "version": 1, "name": "f", "horizon": 4.0,
    "family": {"type": "power", "coefficient": 0.5, "exponent": 2.0},
    "cutoffs": [1, 10, 100]
  })");
  const FamilyFile f = parse_family_file(fam);
  REQUIRE(f.family.cutoffs.size() == 3);
  REQUIRE(std::abs(f.family.generator(2).b.real() - 0.125) < 1e-15);

  fam["cutoffs"] = Json::array();
  REQUIRE_THROWS_AS(parse_family_file(fam), usage_error);
  fam.erase("cutoffs");
  REQUIRE_THROWS_AS(parse_family_file(fam), usage_error);
  fam["cutoffs"] = Json::parse("[1, 10]");
  fam["family"]["type"] = "exotic";
  REQUIRE_THROWS_AS(parse_family_file(fam), validation_error);
}

TEST_CASE("overrides are applied before hamiltonian construction") {
  const std::string dir = temp_dir("overrides");
  const std::string path = dir + "/rnd.json";
  write_file_atomic(path, Json::parse(R"({
    "version": 1, "name": "rnd", "modes": 2, "horizon": 1.0, "seed": 5,
    "hamiltonian": {"type": "builtin", "family": "random_constant", "params": {}}
  })").dump());
  Overrides ov;
  const Scenario base = load_scenario_with_overrides(path, ov);
  ov.seed = 6;
  ov.steps = 128;
  ov.lambda = 0.5;
  const Scenario changed = load_scenario_with_overrides(path, ov);
  REQUIRE(changed.integrator.steps == 128);
  REQUIRE(changed.lambda == 0.5);
  REQUIRE((base.ham().A(0.0) - changed.ham().A(0.0)).norm() > 1e-3);
}

TEST_CASE("amplitude command reports the free-mode overlap") {
  const Json j = Json::parse(R"({
    "version": 1, "name": "free_small", "modes": 1, "horizon": 1.0,
    "hamiltonian": {"type": "builtin", "family": "free_mode", "params": {"omega": 1.0}},
    "labels": {"v": [[1.0, 0.0]], "w": [[1.0, 0.0]]},
    "integrator": {"steps": 1024}
  })");
  const Scenario sc = parse_scenario(j);
  const std::string dir = temp_dir("amplitude");
  std::ostringstream log;
  REQUIRE(run_amplitude(sc, dir, log) == kExitOk);
  const std::string report = read_file(dir + "/free_small.amplitude.txt");
  REQUIRE(report.find("scenario free_small") != std::string::npos);

  // Pull the amplitude line and compare to exp(exp(-i)).
  std::istringstream in(report);
  std::string line;
  Complex value(0.0, 0.0);
  while (std::getline(in, line)) {
    if (line.rfind("amplitude ", 0) == 0) {
      const std::string payload = line.substr(10);
      const auto comma = payload.find(',');
      value = Complex(std::strtod(payload.substr(0, comma).c_str(), nullptr),
                      std::strtod(payload.substr(comma + 1).c_str(), nullptr));
    }
  }
  REQUIRE(std::abs(value - Complex(1.1438356437916404, -1.2798830013730225)) < 1e-10);
}

TEST_CASE("verify passes at production resolution and fails when coarse") {
  Json j = squeeze_json();
  j["integrator"]["steps"] = 1024;
  const Scenario fine = parse_scenario(j);
  const std::string dir = temp_dir("verify");
  std::ostringstream log_fine;
  REQUIRE(run_verify(fine, dir, log_fine) == kExitOk);
  REQUIRE(log_fine.str().find("verdict pass") != std::string::npos);

  j["integrator"]["steps"] = 8;
  const Scenario coarse = parse_scenario(j);
  std::ostringstream log_coarse;
  REQUIRE(run_verify(coarse, dir, log_coarse) == kExitFailure);
  REQUIRE(log_coarse.str().find("FAIL") != std::string::npos);
}

TEST_CASE("compare agrees across routes and emits deterministic csv") {
  // Same oracle resolution as the shipped squeeze scenario, so the mutual
  // 1e-5 agreement below is the documented behavior of that configuration.
  Json j = squeeze_json();
  j["oracles"]["fock"] = Json::parse(R"({"cutoff": 60, "substeps": 512})");
  j["oracles"]["discrete_pi"]["slices"] = Json::parse("[2048, 4096]");
  const Scenario sc = parse_scenario(j);
  const std::string dir = temp_dir("compare");
  std::ostringstream log1, log2;
  REQUIRE(run_compare({sc, sc}, dir, log1, 1) == kExitOk);
  REQUIRE(run_compare({sc, sc}, dir, log2, 2) == kExitOk);
  REQUIRE(log1.str() == log2.str());

  const CsvTable table = parse_csv(read_file(dir + "/compare.csv"));
  REQUIRE(table.header.front() == "scenario");
  REQUIRE(table.rows.size() == 2);
  const auto& row = table.rows.front();
  auto cell = [&](std::size_t i) { return std::strtod(row[i].c_str(), nullptr); };
  const Complex closed(cell(1), cell(2));
  const Complex fock(cell(3), cell(4));
  const Complex extrap(cell(8), cell(9));
  REQUIRE(std::abs(closed - fock) < 1e-5);
  REQUIRE(std::abs(closed - extrap) < 1e-5);
  REQUIRE(std::abs(fock - extrap) < 1e-5);
  const double abs_err_fock = std::strtod(row[row.size() - 2].c_str(), nullptr);
  const double abs_err_extrap = std::strtod(row.back().c_str(), nullptr);
  REQUIRE(abs_err_fock < 1e-6);
  REQUIRE(abs_err_extrap < 1e-4);
}

TEST_CASE("compare refuses partial coupling") {
  Json j = squeeze_json();
  j["lambda"] = 0.5;
  const Scenario sc = parse_scenario(j);
  std::ostringstream log;
  REQUIRE_THROWS_AS(run_compare({sc}, temp_dir("compare_bad"), log, 1), validation_error);
}

TEST_CASE("scan emits the documented csv schema") {
  Json fam = Json::parse(R"({
    "version": 1, "name": "inverse_square_small", "horizon": 4.0,
    "family": {"type": "power", "coefficient": 0.5, "exponent": 2.0},
    "cutoffs": [1, 4, 16, 64, 256, 1000]
  })");
  const FamilyFile f = parse_family_file(fam);
  const std::string dir = temp_dir("scan");
  std::ostringstream log;
  REQUIRE(run_scan(f, dir, log) == kExitOk);
  REQUIRE(log.str().find("verdict convergent") != std::string::npos);
  const CsvTable table = parse_csv(read_file(dir + "/inverse_square_small.scan.csv"));
  const std::vector<std::string> expected{"K", "hs_norm_sq", "abs_det",
                                          "abs_vacuum_amplitude", "phase_increment", "verdict"};
  REQUIRE(table.header == expected);
  REQUIRE(table.rows.back().back() == "convergent");
}

TEST_CASE("evolve dump writes one row per grid node") {
  Json j = squeeze_json();
  j["integrator"]["steps"] = 64;
  const Scenario sc = parse_scenario(j);
  const std::string dir = temp_dir("dump");
  std::ostringstream log;
  REQUIRE(run_evolve_dump(sc, dir, log) == kExitOk);
  const CsvTable table = parse_csv(read_file(dir + "/squeeze_small.evolve.csv"));
  REQUIRE(table.rows.size() == 65);
  // t + re/im for each alpha and beta entry + two tracked logs + defect.
  REQUIRE(table.header.size() == 1 + 2 * 2 * 1 + 4 + 1);
  REQUIRE(table.header.front() == "t");
  REQUIRE(table.header.back() == "defect");
}

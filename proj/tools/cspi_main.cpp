// Command-line front end.  Subcommands mirror the in-process runners in
// cspi/cli.hpp; this file only handles argument plumbing and exit-code
// mapping.  Exit codes: 0 success, 1 runtime/check failure, 2 usage error,
// 3 input validation error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cspi/cli.hpp"

namespace {

struct CommonArgs {
  std::vector<std::string> scenarios;
  std::string out_dir = "out";
  int jobs = 1;
  std::int64_t steps = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  CLI::Option* steps_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  cspi::Overrides overrides() const {
    cspi::Overrides ov;
    if (steps_opt->count()) ov.steps = steps;
    if (lambda_opt->count()) ov.lambda = lambda;
    if (seed_opt->count()) ov.seed = seed;
    return ov;
  }
};

void attach_common(CLI::App* cmd, CommonArgs& args, const char* input_help) {
  cmd->add_option("--scenario", args.scenarios, input_help)->required()->expected(-1);
  cmd->add_option("--out", args.out_dir, "output directory (default: out)");
  cmd->add_option("--jobs", args.jobs, "worker threads for multi-scenario runs")
      ->check(CLI::PositiveNumber);
  args.steps_opt = cmd->add_option("--steps", args.steps, "override integrator step count")
                       ->check(CLI::PositiveNumber);
  args.lambda_opt = cmd->add_option("--lambda", args.lambda, "override coupling strength");
  args.seed_opt = cmd->add_option("--seed", args.seed, "override scenario seed");
}

// Runs one scenario-level action per input path, in parallel when asked, with
// per-path log buffers flushed in input order.
template <typename Fn>
int for_each_scenario(const CommonArgs& args, Fn&& fn) {
  std::vector<std::ostringstream> logs(args.scenarios.size());
  std::vector<int> codes(args.scenarios.size(), 0);
  cspi::detail::run_indexed(args.scenarios.size(), args.jobs, [&](std::size_t i) {
    const cspi::Scenario sc = cspi::load_scenario_with_overrides(args.scenarios[i],
                                                                 args.overrides());
    codes[i] = fn(sc, logs[i]);
  });
  int worst = cspi::kExitOk;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    std::cout << logs[i].str();
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coherent-state quadratic propagator toolkit"};
  app.require_subcommand(1);

  CommonArgs amp_args, verify_args, compare_args, scan_args, dump_args;
  CLI::App* cmd_amplitude =
      app.add_subcommand("amplitude", "evolve a scenario and report the transition amplitude");
  attach_common(cmd_amplitude, amp_args, "scenario JSON file (repeatable)");
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "re-derive structural identities; nonzero exit on failure");
  attach_common(cmd_verify, verify_args, "scenario JSON file (repeatable)");
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "closed form vs Fock and discrete sum cross-checks");
  attach_common(cmd_compare, compare_args, "scenario JSON file (repeatable)");
  CLI::App* cmd_scan =
      app.add_subcommand("scan", "mode-family implementability scan over cutoff ladder");
  attach_common(cmd_scan, scan_args, "family JSON file (repeatable)");
  CLI::App* cmd_dump =
      app.add_subcommand("evolve-dump", "write the full propagator trajectory as CSV");
  attach_common(cmd_dump, dump_args, "scenario JSON file (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cspi::kExitUsage;
  }

  try {
    if (app.got_subcommand(cmd_amplitude)) {
      return for_each_scenario(amp_args, [&](const cspi::Scenario& sc, std::ostream& log) {
        return cspi::run_amplitude(sc, amp_args.out_dir, log);
      });
    }
    if (app.got_subcommand(cmd_verify)) {
      return for_each_scenario(verify_args, [&](const cspi::Scenario& sc, std::ostream& log) {
        return cspi::run_verify(sc, verify_args.out_dir, log);
      });
    }
    if (app.got_subcommand(cmd_compare)) {
      std::vector<cspi::Scenario> scenarios;
      for (const auto& path : compare_args.scenarios) {
        scenarios.push_back(cspi::load_scenario_with_overrides(path, compare_args.overrides()));
      }
      return cspi::run_compare(scenarios, compare_args.out_dir, std::cout, compare_args.jobs);
    }
    if (app.got_subcommand(cmd_scan)) {
      int worst = cspi::kExitOk;
      for (const auto& path : scan_args.scenarios) {
        const cspi::FamilyFile fam = cspi::load_family_file(path);
        worst = std::max(worst, cspi::run_scan(fam, scan_args.out_dir, std::cout));
      }
      return worst;
    }
    if (app.got_subcommand(cmd_dump)) {
      return for_each_scenario(dump_args, [&](const cspi::Scenario& sc, std::ostream& log) {
        return cspi::run_evolve_dump(sc, dump_args.out_dir, log);
      });
    }
  } catch (const cspi::usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cspi::kExitUsage;
  } catch (const cspi::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return cspi::kExitValidation;
  } catch (const cspi::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return cspi::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cspi::kExitFailure;
  }
  return cspi::kExitUsage;
}

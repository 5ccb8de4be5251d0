// Command-line front end: run an experiment spec, or the acceptance suite.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hypbbm/acceptance.hpp"
#include "hypbbm/error.hpp"
#include "hypbbm/experiment.hpp"

namespace {

int run_command(const std::string& spec_file, const std::optional<std::string>& out,
                const std::optional<std::uint64_t>& seed, std::size_t workers, bool dump) {
  hypbbm::ExperimentSpec spec = hypbbm::load_spec(spec_file);
  if (seed) spec.config.seed = *seed;
  if (out) spec.output_dir = *out;
  const hypbbm::RunRecord record = hypbbm::execute(spec, {workers, dump});
  hypbbm::emit_report(record, spec.output_dir);

  // Verdicts are informational here; small runs routinely miss asymptotic
  // tolerances. `verify` is the gate.
  for (const auto& [name, report] : record.reports) {
    std::cout << (report.pass ? "pass " : "FAIL ") << name << " = " << report.statistic
              << (report.exploratory ? " (exploratory)" : "") << '\n';
  }
  std::cout << "wrote " << spec.output_dir << '\n';
  return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo for branching Brownian motion on the hyperbolic plane"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hypbbm::kVersion);

  auto* run = app.add_subcommand("run", "Execute an experiment spec and write its report");
  std::string spec_file;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  bool dump = false;
  run->add_option("spec", spec_file, "Spec file (key = value lines)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides output_dir)");
  run->add_option("--seed", seed, "Base seed (overrides seed)");
  run->add_option("--workers", workers, "Worker threads, 0 for all cores");
  run->add_flag("--dump-particles", dump, "Also write particles.jsonl");

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  std::size_t verify_workers = 0;
  std::vector<int> only;
  verify->add_option("--workers", verify_workers, "Worker threads, 0 for all cores");
  verify->add_option("--only", only, "Run only these criterion ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(spec_file, out, seed, workers, dump);
    hypbbm::AcceptanceOptions options;
    options.workers = verify_workers;
    options.only.insert(only.begin(), only.end());
    const auto results = hypbbm::run_acceptance(options, std::cout);
    const bool ok = hypbbm::all_required_pass(results);
    std::cout << (ok ? "verify: all required criteria pass" : "verify: FAILED") << '\n';
    return ok ? EXIT_SUCCESS : EXIT_FAILURE;
  } catch (const hypbbm::PopulationCapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

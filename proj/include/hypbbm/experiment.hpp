#pragma once

// Experiment specs, orchestration over replicas, and report emission.
//
// A spec is a flat text document with one `key = value` per line and `#`
// comments. Each kind runs its replicas in parallel, then aggregates in
// replica order, so outputs do not depend on the worker count.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypbbm/branching.hpp"
#include "hypbbm/estimators.hpp"

namespace hypbbm {

enum class ExperimentKind {
  PopulationLaw,
  SingleBm,
  ManyToOne,
  Rates,
  LogCorrection,
  Clt,
  Escape,
  Boundary,
  Dimension,
  RegimeProbe,
};

std::string_view kind_name(ExperimentKind kind) noexcept;

enum class Functional { One, Ball, PathMax };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::PopulationLaw;
  RunConfig config;  // horizon is the key t
  std::size_t replicas = 1;
  std::string output_dir = "out";

  // many_to_one
  std::size_t single_replicas = 10000;
  Functional functional = Functional::Ball;
  double functional_radius = 1.0;
  // boundary
  std::size_t bins = 16;
  // regime_probe
  double radius = 2.0;
  // dimension
  int scale_first = 4;
  int scale_last = 9;
  // rates
  double window = 0.5;

  /// Canonical `key = value` listing of every field; the spec hash is taken
  /// over it.
  std::string canonical() const;
  /// Throws ValidationError naming the key, or WrongRegime.
  void validate() const;
};

/// Parses and validates. Unset keys take kind-specific defaults.
ExperimentSpec parse_spec(std::string_view text);
ExperimentSpec load_spec(const std::filesystem::path& path);

struct NamedReport {
  std::string name;
  TestReport report;
};

struct RunRecord {
  ExperimentSpec spec;
  std::uint64_t spec_hash = 0;
  std::string version;
  std::string summary_csv;  // with header
  std::string kind_csv;     // with header; file name is <kind>.csv
  std::string particles_jsonl;
  std::vector<NamedReport> reports;
  nlohmann::json estimates = nlohmann::json::object();

  const TestReport& report(std::string_view name) const;
  nlohmann::json to_json() const;
};

struct ExecuteOptions {
  std::size_t workers = 1;
  bool dump_particles = false;
};

RunRecord execute(const ExperimentSpec& spec, const ExecuteOptions& options = {});

/// Writes summary.csv, <kind>.csv, report.json, plot.gp and, when dumped,
/// particles.jsonl into dir (created if missing).
void emit_report(const RunRecord& record, const std::filesystem::path& dir);

/// gnuplot commands plotting the kind CSV.
std::string plot_script(const RunRecord& record);

inline constexpr const char* kVersion = "0.1.0";

/// Headers of the per-kind CSV files.
std::string_view kind_csv_header(ExperimentKind kind) noexcept;

}  // namespace hypbbm

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocontact/dsl/params.hpp"
#include "cocontact/dynamics/dynamics.hpp"
#include "cocontact/systems/systems.hpp"

namespace cocontact::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  /// Bad configuration or a failed verification.
  kConfigOrVerify = 1,
  kIncompatible = 2,
  kMaxIterations = 3,
  /// Integration or projection failed.
  kNumerical = 4,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Either a preset name with parameter overrides or an inline Lagrangian.
struct SystemSpec {
  std::string preset;
  std::string lagrangian;
  int n = 0;
  std::string label;
  dsl::ParamTable params;

  bool is_preset() const { return !preset.empty(); }
  /// `extra` overrides parameters of the same name.
  systems::SystemPreset build(const dsl::ParamTable& extra = {}) const;
};

struct InitialSpec {
  bool given = false;
  double t0 = 0.0;
  std::vector<double> q;
  std::vector<double> v;
  double s = 0.0;
};

struct OutputSpec {
  std::string csv;
  std::string json;
  std::vector<std::string> channels{"holonomy", "sdot", "herglotz", "constraint"};
};

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
};

struct RunConfig {
  SystemSpec system;
  InitialSpec initial;
  dynamics::IntegratorConfig integrator;
  bool t_end_given = false;
  sr::AlgorithmOptions algorithm;
  OutputSpec outputs;
  std::optional<SweepSpec> sweep;
};

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);

/// Initial point on W (p zero; projection fills it in).
sr::PontryaginPoint initial_point(const RunConfig& cfg, const systems::SystemPreset& preset);

// ---------------------------------------------------------------------------
// Verification

struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  /// Worst measured value, compared against `tolerance`.
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 42;
  /// Replaces every default tolerance when set.
  std::optional<double> tol;
  int points = 100;
};

std::vector<CheckResult> verify_system(const systems::SystemPreset& preset, const VerifyOptions& opts);

// ---------------------------------------------------------------------------
// Commands; each returns an ExitCode.

struct CommandOptions {
  std::string space = "unified";
  std::uint64_t seed = 42;
  std::optional<double> step;
  std::optional<double> t_end;
  std::optional<double> tol;
  /// Directory for output files; empty means the current directory.
  std::string out_dir;
};

int cmd_constraints(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Full command line, including argument parsing.
int run(int argc, char** argv);

}  // namespace cocontact::cli

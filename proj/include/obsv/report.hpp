#pragma once

// Runs a scenario end to end and writes its outputs: a per-sample CSV, an
// optional oracle CSV, and a plain-text summary that echoes the scenario.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "obsv/kernels.hpp"
#include "obsv/numeric_oracle.hpp"
#include "obsv/scenario.hpp"

namespace obsv {

inline constexpr const char* kToolVersion = "0.1.0";

/// Process exit codes shared by the CLI and the summary.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitDivergence = 3,
  kExitOracleFail = 4,
  kExitIo = 5,
};

struct PmsmRecord {
  double t = 0.0;
  PmsmState state;
  double di_d = 0.0;
  double di_q = 0.0;
  double u_d = 0.0;
  double u_q = 0.0;
  PmsmEvaluation eval;
};

struct ImRecord {
  double t = 0.0;
  ImState state;
  double u_sa = 0.0;
  double u_sb = 0.0;
  Planar dpsi_r;
  double domega_e = 0.0;
  ImEvaluation eval;
};

/// One strided trajectory point checked against the numeric route.
struct OraclePointRecord {
  double t = 0.0;
  OracleComparison comparison;
};

struct OracleBlock {
  // PMSM: trajectory points and a seeded random sweep.
  std::vector<OraclePointRecord> points;
  AgreementSummary trajectory;
  AgreementSummary random;
  // PMSM with a baseline: ratio of the baseline Gramian ratio to this one.
  std::optional<GramianSummary> baseline_gramian;
  std::optional<double> gramian_contrast;
  // IM: condition values recomputed from central differences of the
  // recorded trajectory instead of the model derivative.
  std::size_t fd_points = 0;
  double fd_max_relative_error = 0.0;

  bool pass = true;
  std::vector<std::string> failures;
};

struct ObservabilityReport {
  Scenario scenario;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::vector<PmsmRecord> pmsm;
  std::vector<ImRecord> im;
  std::optional<GramianSummary> gramian;
  std::optional<OracleBlock> oracle;
  std::vector<std::string> warnings;

  std::size_t size() const { return scenario.machine == Machine::pmsm ? pmsm.size() : im.size(); }
  std::size_t observable_count() const;
  std::size_t degenerate_count() const;
  /// Smallest |condition value| over non-degenerate samples (inf if none).
  double min_abs_value() const;
};

struct RunOptions {
  /// Forces the oracle block on even if the scenario leaves it off.
  bool oracle = false;
  std::optional<std::uint64_t> seed;
  bool parallel = true;
  /// Test hook applied to the trajectory oracle comparisons before they are
  /// summarized.
  std::function<void(std::vector<OracleComparison>&)> oracle_fault;
};

/// Throws ValidationError, DivergenceError, or std::runtime_error (baseline I/O).
ObservabilityReport run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Column names with units, in CSV order.
std::vector<std::string> csv_header(Machine machine);

/// Writes the per-sample table atomically (temporary file, then rename).
void emit_csv(const ObservabilityReport& report, const std::string& path);
std::string csv_text(const ObservabilityReport& report);
void emit_oracle_csv(const ObservabilityReport& report, const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by exact header name; throws std::out_of_range.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Recomputes each row's verdict from its value, threshold and degenerate
/// columns; returns the number of rows whose recorded verdict disagrees.
std::size_t verdict_mismatches(const CsvTable& table);

struct Summary {
  std::string text;
  int exit_code = kExitOk;
};

Summary emit_summary(const ObservabilityReport& report);
void write_text_atomic(const std::string& path, const std::string& text);

/// Writes <dir>/<name>.csv, <dir>/<name>.summary.txt and, when the oracle
/// ran on a PMSM, <dir>/<name>.oracle.csv. Returns the summary.
Summary write_outputs(const ObservabilityReport& report, const std::string& dir);

struct SweepPoint {
  double value = 0.0;
  int status = kExitOk;
  std::string error;
  std::size_t samples = 0;
  std::size_t observable = 0;
  std::size_t degenerate = 0;
  double min_abs_value = 0.0;
};

struct SweepResult {
  std::string name;
  std::string param;
  std::vector<SweepPoint> points;
};

/// Evenly spaced values a, ..., b (n >= 1; n = 1 gives a).
std::vector<double> sweep_values(double a, double b, std::size_t n);

/// Re-runs the scenario with the dotted JSON path (e.g. "initial.omega_e")
/// set to each value. Points run in parallel; each is deterministic.
SweepResult sweep(const nlohmann::json& scenario, const std::string& default_name,
                  const std::string& param, const std::vector<double>& values,
                  const RunOptions& options = {});

std::string sweep_csv_text(const SweepResult& result);
std::string sweep_summary_text(const SweepResult& result);

}  // namespace obsv

#pragma once

// Scenario files: one JSON document per run. Every field has a documented
// default, the loader rejects unknown keys, and `to_json` writes the fully
// materialized scenario so reports can echo exactly what ran.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "obsv/machine_models.hpp"
#include "obsv/trajectory_lab.hpp"

namespace obsv {

enum class Machine { pmsm, im };

struct PmsmExcitationSpec {
  ProfileKind kind = ProfileKind::rotating_vector;
  // constant-theta-O
  double theta_O = 0.0;
  LocusParameter parameter = LocusParameter::i_d;
  std::vector<Breakpoint> locus_breakpoints;
  // piecewise-hold, custom-samples
  std::vector<CurrentBreakpoint> breakpoints;
  // rotating-vector
  double magnitude = 0.0;
  double rate = 0.0;
  double phase = 0.0;
};

struct Tolerances {
  double epsilon = 1e-6;    // condition residual (rad/s for the PMSM)
  double epsilon_D = 1e-6;  // determinant D, SI units
};

struct GramianSpec {
  bool enabled = false;
  double delta = 1e-4;
  double window = 1e-4;
  double start = 0.0;
};

struct OracleSpec {
  bool enabled = false;
  std::size_t stride = 100;          // every stride-th sample is checked
  std::size_t random_points = 200;   // randomized agreement sweep, uses the seed
  std::string baseline;              // optional matched scenario for the Gramian contrast
  double gramian_contrast = 1e3;     // required baseline/scenario ratio contrast
  double min_agreement = 0.999;
  double ratio_tolerance = 0.01;
};

struct Scenario {
  std::string name;
  Machine machine = Machine::pmsm;
  PmsmParams pmsm;
  ImParams im;
  MechanicalMode mode = MechanicalMode::constant_speed;
  PmsmExcitationSpec pmsm_excitation;
  ImVoltageProfile im_excitation;
  PmsmState pmsm_initial;  // theta_e, omega_e used; currents come from the profile
  ImState im_initial;
  double dt = 1e-5;
  double duration = 0.01;
  Tolerances tolerances;
  GramianSpec gramian;
  OracleSpec oracle;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  /// Directory the scenario was loaded from; relative baseline paths resolve
  /// against it. Not serialized.
  std::string base_dir;

  std::size_t n_steps() const;
  /// Throws ValidationError naming the field.
  void validate() const;
};

/// Equality over every serialized field.
bool same_scenario(const Scenario& a, const Scenario& b);

std::string to_string(Machine m);
std::string to_string(MechanicalMode m);
MechanicalMode mechanical_mode_from_string(const std::string& s);

nlohmann::ordered_json to_json(const Scenario& s);
/// Builds and validates a scenario; missing fields take their defaults.
Scenario scenario_from_json(const nlohmann::json& j, const std::string& default_name = "scenario");
/// Parses text; syntax errors become ParseError with line and column.
Scenario parse_scenario(const std::string& text, const std::string& default_name = "scenario");
Scenario load_scenario(const std::string& path);

/// Builds the current profile an excitation spec describes.
CurrentProfile make_profile(const Scenario& s);

}  // namespace obsv

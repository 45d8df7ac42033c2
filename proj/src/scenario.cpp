#include "obsv/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "obsv/errors.hpp"

namespace obsv {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t Scenario::n_steps() const {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

namespace {

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

void check_positive(double v, const std::string& field) {
  check(std::isfinite(v) && v > 0.0, field, "must be positive and finite");
}

// Rethrows a parameter-level ValidationError with its section prefix.
template <typename F>
void prefixed(const std::string& prefix, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    throw ValidationError(prefix + e.field(),
                          colon == std::string::npos ? what : what.substr(colon + 2));
  }
}

}  // namespace

void Scenario::validate() const {
  check(!name.empty(), "name", "must not be empty");
  check_positive(dt, "dt");
  check(std::isfinite(duration) && duration >= 0.0, "duration", "must be non-negative and finite");
  const double steps = duration / dt;
  check(std::abs(steps - std::round(steps)) <= 1e-6 * std::max(1.0, steps), "duration",
        "must be a whole number of dt steps");
  check_positive(tolerances.epsilon, "tolerances.epsilon");
  check_positive(tolerances.epsilon_D, "tolerances.epsilon_D");

  if (gramian.enabled) {
    check_positive(gramian.delta, "gramian.delta");
    check_positive(gramian.window, "gramian.window");
    check(std::isfinite(gramian.start) && gramian.start >= 0.0, "gramian.start",
          "must be non-negative");
    check(gramian.start + gramian.window <= duration + 0.5 * dt, "gramian.window",
          "window extends past the end of the run");
  }
  check(oracle.stride >= 1, "oracle.stride", "must be at least 1");
  check(std::isfinite(oracle.gramian_contrast) && oracle.gramian_contrast >= 1.0,
        "oracle.gramian_contrast", "must be at least 1");
  check(oracle.min_agreement > 0.0 && oracle.min_agreement <= 1.0, "oracle.min_agreement",
        "must be in (0, 1]");
  check_positive(oracle.ratio_tolerance, "oracle.ratio_tolerance");

  if (machine == Machine::pmsm) {
    prefixed("params.", [&] { pmsm.validate(); });
    check(mode != MechanicalMode::free, "mechanical_mode",
          "prescribed-current PMSM runs need locked-rotor or constant-speed mechanics");
    check(std::isfinite(pmsm_initial.theta_e), "initial.theta_e", "must be finite");
    check(std::isfinite(pmsm_initial.omega_e), "initial.omega_e", "must be finite");
    check(mode != MechanicalMode::locked_rotor || pmsm_initial.omega_e == 0.0, "initial.omega_e",
          "must be zero for a locked rotor");
    CurrentProfile profile;
    prefixed("excitation.", [&] { profile = make_profile(*this); });
    if (pmsm_excitation.kind != ProfileKind::rotating_vector) {
      check(duration <= profile.duration() + 1e-12, "duration",
            "exceeds the last excitation breakpoint");
    }
  } else {
    prefixed("params.", [&] { im.validate(); });
    check(std::isfinite(im_excitation.amplitude), "excitation.amplitude", "must be finite");
    check(std::isfinite(im_excitation.frequency_start), "excitation.frequency_start",
          "must be finite");
    check(std::isfinite(im_excitation.frequency_end), "excitation.frequency_end",
          "must be finite");
    const ImState& x = im_initial;
    for (double v : {x.i_sa, x.i_sb, x.psi_ra, x.psi_rb, x.omega_e, x.T_L}) {
      check(std::isfinite(v), "initial", "must be finite");
    }
    check(mode != MechanicalMode::locked_rotor || x.omega_e == 0.0, "initial.omega_e",
          "must be zero for a locked rotor");
  }
}

std::string to_string(Machine m) { return m == Machine::pmsm ? "pmsm" : "im"; }

std::string to_string(MechanicalMode m) {
  switch (m) {
    case MechanicalMode::locked_rotor: return "locked-rotor";
    case MechanicalMode::constant_speed: return "constant-speed";
    case MechanicalMode::free: return "free";
  }
  return "unknown";
}

MechanicalMode mechanical_mode_from_string(const std::string& s) {
  for (MechanicalMode m :
       {MechanicalMode::locked_rotor, MechanicalMode::constant_speed, MechanicalMode::free}) {
    if (to_string(m) == s) return m;
  }
  throw ValidationError("mechanical_mode", "unknown mode '" + s + "'");
}

ordered_json to_json(const Scenario& s) {
  ordered_json j;
  j["name"] = s.name;
  j["machine"] = to_string(s.machine);
  if (s.machine == Machine::pmsm) {
    const PmsmParams& p = s.pmsm;
    j["params"] = {{"L_d", p.L_d}, {"L_q", p.L_q}, {"K_e", p.K_e}, {"R_s", p.R_s},
                   {"p", p.p},     {"J", p.J},     {"T_L", p.T_L}};
  } else {
    const ImParams& p = s.im;
    j["params"] = {{"R_s", p.R_s}, {"R_r", p.R_r}, {"L_s", p.L_s}, {"L_r", p.L_r},
                   {"L_m", p.L_m}, {"J", p.J},     {"p", p.p}};
  }
  j["mechanical_mode"] = to_string(s.mode);
  if (s.machine == Machine::pmsm) {
    j["initial"] = {{"theta_e", s.pmsm_initial.theta_e}, {"omega_e", s.pmsm_initial.omega_e}};
    const PmsmExcitationSpec& e = s.pmsm_excitation;
    ordered_json ex;
    ex["kind"] = to_string(e.kind);
    switch (e.kind) {
      case ProfileKind::constant_theta_O: {
        ex["theta_O"] = e.theta_O;
        ex["parameter"] = e.parameter == LocusParameter::i_d ? "i_d" : "i_q";
        ordered_json bps = ordered_json::array();
        for (const Breakpoint& b : e.locus_breakpoints) bps.push_back({b.t, b.value});
        ex["breakpoints"] = bps;
        break;
      }
      case ProfileKind::rotating_vector:
        ex["magnitude"] = e.magnitude;
        ex["rate"] = e.rate;
        ex["phase"] = e.phase;
        break;
      case ProfileKind::piecewise_hold:
      case ProfileKind::custom_samples: {
        ordered_json bps = ordered_json::array();
        for (const CurrentBreakpoint& b : e.breakpoints) bps.push_back({b.t, b.i_d, b.i_q});
        ex["breakpoints"] = bps;
        break;
      }
    }
    j["excitation"] = ex;
  } else {
    const ImState& x = s.im_initial;
    j["initial"] = {{"i_sa", x.i_sa},     {"i_sb", x.i_sb},       {"psi_ra", x.psi_ra},
                    {"psi_rb", x.psi_rb}, {"omega_e", x.omega_e}, {"T_L", x.T_L}};
    j["excitation"] = {{"amplitude", s.im_excitation.amplitude},
                       {"frequency_start", s.im_excitation.frequency_start},
                       {"frequency_end", s.im_excitation.frequency_end}};
  }
  j["dt"] = s.dt;
  j["duration"] = s.duration;
  j["tolerances"] = {{"epsilon", s.tolerances.epsilon}, {"epsilon_D", s.tolerances.epsilon_D}};
  j["gramian"] = {{"enabled", s.gramian.enabled},
                  {"delta", s.gramian.delta},
                  {"window", s.gramian.window},
                  {"start", s.gramian.start}};
  j["oracle"] = {{"enabled", s.oracle.enabled},
                 {"stride", s.oracle.stride},
                 {"random_points", s.oracle.random_points},
                 {"baseline", s.oracle.baseline},
                 {"gramian_contrast", s.oracle.gramian_contrast},
                 {"min_agreement", s.oracle.min_agreement},
                 {"ratio_tolerance", s.oracle.ratio_tolerance}};
  j["seed"] = s.seed;
  j["output"] = {{"dir", s.output_dir}};
  return j;
}

bool same_scenario(const Scenario& a, const Scenario& b) { return to_json(a) == to_json(b); }

namespace {

// Reads the members of one JSON object, tracking which keys were consumed so
// that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_.empty() ? "scenario" : path_, "must be an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ValidationError(field(key), "expected a number");
    return v.get<double>();
  }

  double required_number(const std::string& key) {
    if (!has(key)) throw ValidationError(field(key), "is required");
    return number(key, 0.0);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    throw ValidationError(field(key), "expected an integer");
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const std::int64_t v = integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ValidationError(field(key), "must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ValidationError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ValidationError(field(key), "expected a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(field(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<std::vector<double>> rows(const json& j, const std::string& field, std::size_t width) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& r = j[i];
    const std::string where = field + "[" + std::to_string(i) + "]";
    if (!r.is_array() || r.size() != width) {
      throw ValidationError(where, "expected " + std::to_string(width) + " numbers");
    }
    std::vector<double> row;
    for (const json& v : r) {
      if (!v.is_number()) throw ValidationError(where, "expected numbers");
      row.push_back(v.get<double>());
    }
    out.push_back(std::move(row));
  }
  return out;
}

void read_pmsm(Section& top, Scenario& s) {
  if (!top.has("params")) throw ValidationError("params", "is required");
  {
    Section p(top.raw("params"), "params");
    s.pmsm.L_d = p.required_number("L_d");
    s.pmsm.L_q = p.required_number("L_q");
    s.pmsm.K_e = p.required_number("K_e");
    s.pmsm.R_s = p.required_number("R_s");
    s.pmsm.p = static_cast<int>(p.integer("p", 1));
    s.pmsm.J = p.number("J", 1e-3);
    s.pmsm.T_L = p.number("T_L", 0.0);
    p.finish();
  }
  if (top.has("initial")) {
    Section i(top.raw("initial"), "initial");
    s.pmsm_initial.theta_e = i.number("theta_e", 0.0);
    s.pmsm_initial.omega_e = i.number("omega_e", 0.0);
    i.finish();
  }
  if (top.has("excitation")) {
    Section e(top.raw("excitation"), "excitation");
    PmsmExcitationSpec& x = s.pmsm_excitation;
    x.kind = profile_kind_from_string(e.text("kind", to_string(x.kind)));
    switch (x.kind) {
      case ProfileKind::constant_theta_O: {
        x.theta_O = e.number("theta_O", 0.0);
        const std::string param = e.text("parameter", "i_d");
        if (param == "i_d") {
          x.parameter = LocusParameter::i_d;
        } else if (param == "i_q") {
          x.parameter = LocusParameter::i_q;
        } else {
          throw ValidationError("excitation.parameter", "must be i_d or i_q");
        }
        if (!e.has("breakpoints")) throw ValidationError("excitation.breakpoints", "is required");
        for (const auto& r : rows(e.raw("breakpoints"), "excitation.breakpoints", 2)) {
          x.locus_breakpoints.push_back({r[0], r[1]});
        }
        break;
      }
      case ProfileKind::rotating_vector:
        x.magnitude = e.number("magnitude", 0.0);
        x.rate = e.number("rate", 0.0);
        x.phase = e.number("phase", 0.0);
        break;
      case ProfileKind::piecewise_hold:
      case ProfileKind::custom_samples:
        if (!e.has("breakpoints")) throw ValidationError("excitation.breakpoints", "is required");
        for (const auto& r : rows(e.raw("breakpoints"), "excitation.breakpoints", 3)) {
          x.breakpoints.push_back({r[0], r[1], r[2]});
        }
        break;
    }
    e.finish();
  }
}

void read_im(Section& top, Scenario& s) {
  if (!top.has("params")) throw ValidationError("params", "is required");
  {
    Section p(top.raw("params"), "params");
    s.im.R_s = p.required_number("R_s");
    s.im.R_r = p.required_number("R_r");
    s.im.L_s = p.required_number("L_s");
    s.im.L_r = p.required_number("L_r");
    s.im.L_m = p.required_number("L_m");
    s.im.J = p.number("J", 0.01);
    s.im.p = static_cast<int>(p.integer("p", 1));
    p.finish();
  }
  if (top.has("initial")) {
    Section i(top.raw("initial"), "initial");
    ImState& x = s.im_initial;
    x.i_sa = i.number("i_sa", 0.0);
    x.i_sb = i.number("i_sb", 0.0);
    x.psi_ra = i.number("psi_ra", 0.0);
    x.psi_rb = i.number("psi_rb", 0.0);
    x.omega_e = i.number("omega_e", 0.0);
    x.T_L = i.number("T_L", 0.0);
    i.finish();
  }
  if (top.has("excitation")) {
    Section e(top.raw("excitation"), "excitation");
    s.im_excitation.amplitude = e.number("amplitude", 0.0);
    s.im_excitation.frequency_start = e.number("frequency_start", 0.0);
    s.im_excitation.frequency_end = e.number("frequency_end", s.im_excitation.frequency_start);
    e.finish();
  }
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::string& default_name) {
  Scenario s;
  Section top(j, "");
  s.name = top.text("name", default_name);
  if (!top.has("machine")) throw ValidationError("machine", "is required");
  const std::string machine = top.text("machine", "");
  if (machine == "pmsm") {
    s.machine = Machine::pmsm;
  } else if (machine == "im") {
    s.machine = Machine::im;
  } else {
    throw ValidationError("machine", "must be pmsm or im");
  }
  s.mode = mechanical_mode_from_string(top.text("mechanical_mode", to_string(s.mode)));
  s.dt = top.number("dt", s.dt);
  s.duration = top.number("duration", s.duration);
  if (s.machine == Machine::pmsm) {
    read_pmsm(top, s);
  } else {
    read_im(top, s);
  }
  s.im_excitation.duration = s.duration;

  if (top.has("tolerances")) {
    Section t(top.raw("tolerances"), "tolerances");
    s.tolerances.epsilon = t.number("epsilon", s.tolerances.epsilon);
    s.tolerances.epsilon_D = t.number("epsilon_D", s.tolerances.epsilon_D);
    t.finish();
  }
  if (top.has("gramian")) {
    Section g(top.raw("gramian"), "gramian");
    s.gramian.enabled = g.boolean("enabled", true);
    s.gramian.delta = g.number("delta", s.gramian.delta);
    s.gramian.window = g.number("window", s.gramian.window);
    s.gramian.start = g.number("start", s.gramian.start);
    g.finish();
  }
  if (top.has("oracle")) {
    Section o(top.raw("oracle"), "oracle");
    OracleSpec& x = s.oracle;
    x.enabled = o.boolean("enabled", true);
    x.stride = o.count("stride", x.stride);
    x.random_points = o.count("random_points", x.random_points);
    x.baseline = o.text("baseline", x.baseline);
    x.gramian_contrast = o.number("gramian_contrast", x.gramian_contrast);
    x.min_agreement = o.number("min_agreement", x.min_agreement);
    x.ratio_tolerance = o.number("ratio_tolerance", x.ratio_tolerance);
    o.finish();
  }
  const std::int64_t seed = top.integer("seed", 0);
  if (seed < 0) throw ValidationError("seed", "must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  if (top.has("output")) {
    Section o(top.raw("output"), "output");
    s.output_dir = o.text("dir", s.output_dir);
    o.finish();
  }
  top.finish();
  s.validate();
  return s;
}

Scenario parse_scenario(const std::string& text, const std::string& default_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    const auto pos = what.find("syntax error");
    throw ParseError(line, column, pos == std::string::npos ? what : what.substr(pos));
  }
  return scenario_from_json(j, default_name);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::filesystem::path p(path);
  Scenario s = parse_scenario(buf.str(), p.stem().string());
  s.base_dir = p.parent_path().string();
  return s;
}

CurrentProfile make_profile(const Scenario& s) {
  const PmsmExcitationSpec& e = s.pmsm_excitation;
  switch (e.kind) {
    case ProfileKind::constant_theta_O:
      return CurrentProfile::constant_theta_O(s.pmsm, e.theta_O, e.locus_breakpoints, e.parameter);
    case ProfileKind::rotating_vector:
      return CurrentProfile::rotating_vector(e.magnitude, e.rate, std::max(s.duration, s.dt),
                                             e.phase);
    case ProfileKind::piecewise_hold:
      return CurrentProfile::piecewise_hold(e.breakpoints);
    case ProfileKind::custom_samples:
      return CurrentProfile::custom_samples(e.breakpoints);
  }
  throw ValidationError("excitation.kind", "unknown profile kind");
}

}  // namespace obsv

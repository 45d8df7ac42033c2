#include "obsv/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "obsv/errors.hpp"

namespace obsv {

namespace fs = std::filesystem;

std::size_t ObservabilityReport::observable_count() const {
  std::size_t n = 0;
  for (const PmsmRecord& r : pmsm) n += r.eval.verdict.observable;
  for (const ImRecord& r : im) n += r.eval.six_state.observable;
  return n;
}

std::size_t ObservabilityReport::degenerate_count() const {
  std::size_t n = 0;
  for (const PmsmRecord& r : pmsm) n += r.eval.verdict.degenerate;
  for (const ImRecord& r : im) n += r.eval.six_state.degenerate;
  return n;
}

double ObservabilityReport::min_abs_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const PmsmRecord& r : pmsm) {
    if (!r.eval.verdict.degenerate) m = std::min(m, std::abs(r.eval.verdict.value));
  }
  for (const ImRecord& r : im) {
    if (!r.eval.six_state.degenerate) m = std::min(m, std::abs(r.eval.six_state.value));
  }
  return m;
}

namespace {

std::size_t index_of(double t, double dt) {
  return static_cast<std::size_t>(std::llround(t / dt));
}

void check_oracle_summary(const AgreementSummary& s, const OracleSpec& spec,
                          const std::string& label, OracleBlock& block) {
  if (s.agreement() < spec.min_agreement) {
    block.pass = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s agreement %zu/%zu below %.4g", label.c_str(), s.agreeing,
                  s.points, spec.min_agreement);
    block.failures.emplace_back(buf);
  }
  if (s.ratio_points > 0 && s.ratio_max_relative_deviation > spec.ratio_tolerance) {
    block.pass = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s determinant ratio deviation %.3g above %.3g",
                  label.c_str(), s.ratio_max_relative_deviation, spec.ratio_tolerance);
    block.failures.emplace_back(buf);
  }
}

GramianSummary pmsm_gramian(const Scenario& s, const Excitation& exc,
                            const PmsmModel::State& x0, double t0, bool parallel) {
  const PmsmModel model(s.pmsm, MechanicalMode::constant_speed, InputFrame::stationary);
  InputFunction<PmsmModel> input = [&exc](double t) -> PmsmModel::Input {
    return exc.stationary_voltage(t);
  };
  GramianOptions opts;
  opts.delta = s.gramian.delta;
  opts.window = s.gramian.window;
  opts.dt = s.dt;
  opts.parallel = parallel;
  return empirical_gramian(model, input, OutputMap(pmsm_stationary_currents), x0, t0, opts);
}

ObservabilityReport run_pmsm(const Scenario& s, const RunOptions& options, bool with_oracle) {
  ObservabilityReport report;
  const Excitation exc = realize_voltages(make_profile(s), s.pmsm, s.mode,
                                          s.pmsm_initial.omega_e, s.pmsm_initial.theta_e);
  const PmsmModel model(s.pmsm, s.mode, InputFrame::rotor);
  InputFunction<PmsmModel> input = [&exc](double t) -> PmsmModel::Input {
    return exc.rotor_voltage(t);
  };
  const PmsmModel::State x0 = PmsmModel::to_vector(exc.initial_state());

  Trajectory<PmsmModel> traj;
  const std::size_t n = s.n_steps();
  if (n == 0) {
    traj.dt = s.dt;
    const PmsmModel::State x = model.normalize(x0);
    traj.samples.push_back({0.0, x, model.derivative(x, input(0.0)), input(0.0)});
  } else {
    traj = integrate(model, x0, input, s.dt, n);
  }

  std::vector<PmsmSampleInput> inputs;
  inputs.reserve(traj.size());
  for (const auto& smp : traj.samples) {
    inputs.push_back({{smp.state[0], smp.state[1], smp.derivative[0], smp.derivative[1]},
                      smp.state[3]});
  }
  const auto evals = options.parallel
                         ? evaluate_pmsm_parallel(inputs, s.pmsm, s.tolerances.epsilon)
                         : evaluate_pmsm_serial(inputs, s.pmsm, s.tolerances.epsilon);
  report.pmsm.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& smp = traj.samples[k];
    PmsmRecord r;
    r.t = smp.t;
    r.state = PmsmModel::from_vector(smp.state);
    r.di_d = smp.derivative[0];
    r.di_q = smp.derivative[1];
    r.u_d = smp.input[0];
    r.u_q = smp.input[1];
    r.eval = evals[k];
    report.pmsm.push_back(r);
  }

  if (s.gramian.enabled) {
    const std::size_t k0 = std::min(index_of(s.gramian.start, s.dt), traj.size() - 1);
    report.gramian = pmsm_gramian(s, exc, traj.samples[k0].state, traj.samples[k0].t,
                                  options.parallel);
  }

  if (with_oracle) {
    OracleBlock block;
    std::vector<OracleSample> pts;
    std::vector<double> times;
    for (std::size_t k = 0; k < traj.size(); k += s.oracle.stride) {
      const auto& smp = traj.samples[k];
      OracleSample o;
      o.params = s.pmsm;
      o.point.currents = inputs[k].currents;
      o.point.omega_e = smp.state[3];
      o.point.theta_e = smp.state[2];
      pts.push_back(o);
      times.push_back(smp.t);
    }
    auto comparisons = options.parallel ? compare_oracle_parallel(pts) : compare_oracle_serial(pts);
    if (options.oracle_fault) options.oracle_fault(comparisons);
    for (std::size_t i = 0; i < comparisons.size(); ++i) {
      block.points.push_back({times[i], comparisons[i]});
    }
    block.trajectory = summarize_agreement(comparisons);
    check_oracle_summary(block.trajectory, s.oracle, "trajectory", block);

    if (s.oracle.random_points > 0) {
      const auto random = random_oracle_points(s.oracle.random_points, s.seed);
      const auto rc = options.parallel ? compare_oracle_parallel(random)
                                       : compare_oracle_serial(random);
      block.random = summarize_agreement(rc);
      check_oracle_summary(block.random, s.oracle, "random", block);
    }

    if (!s.oracle.baseline.empty()) {
      if (!report.gramian) {
        throw ValidationError("oracle.baseline", "a Gramian contrast needs gramian.enabled");
      }
      fs::path path(s.oracle.baseline);
      if (path.is_relative() && !s.base_dir.empty()) path = fs::path(s.base_dir) / path;
      Scenario base = load_scenario(path.string());
      if (base.machine != Machine::pmsm) {
        throw ValidationError("oracle.baseline", "baseline must be a PMSM scenario");
      }
      base.gramian = s.gramian;
      base.oracle.enabled = false;
      base.validate();
      RunOptions bo;
      bo.parallel = options.parallel;
      const ObservabilityReport br = run_pmsm(base, bo, false);
      block.baseline_gramian = br.gramian;
      const double mine = report.gramian->ratio;
      const double theirs = br.gramian->ratio;
      block.gramian_contrast =
          mine > 0.0 ? theirs / mine : std::numeric_limits<double>::infinity();
      if (!(*block.gramian_contrast >= s.oracle.gramian_contrast)) {
        block.pass = false;
        char buf[160];
        std::snprintf(buf, sizeof buf, "gramian contrast %.3g below %.3g",
                      *block.gramian_contrast, s.oracle.gramian_contrast);
        block.failures.emplace_back(buf);
      }
    }
    report.oracle = std::move(block);
  }
  return report;
}

ObservabilityReport run_im(const Scenario& s, const RunOptions& options, bool with_oracle) {
  ObservabilityReport report;
  const ImModel model(s.im, s.mode);
  ImVoltageProfile volt = s.im_excitation;
  volt.duration = s.duration;
  InputFunction<ImModel> input = [volt](double t) -> ImModel::Input { return volt.at(t); };
  const ImModel::State x0 = ImModel::to_vector(s.im_initial);

  Trajectory<ImModel> traj;
  const std::size_t n = s.n_steps();
  if (n == 0) {
    traj.dt = s.dt;
    traj.samples.push_back({0.0, x0, model.derivative(x0, input(0.0)), input(0.0)});
  } else {
    traj = integrate(model, x0, input, s.dt, n);
  }

  std::vector<ImSampleInput> inputs;
  inputs.reserve(traj.size());
  for (const auto& smp : traj.samples) {
    inputs.push_back({{smp.state[2], smp.state[3]},
                      {smp.derivative[2], smp.derivative[3]},
                      smp.state[4],
                      smp.derivative[4]});
  }
  const auto evals = options.parallel ? evaluate_im_parallel(inputs, s.im, s.tolerances.epsilon)
                                      : evaluate_im_serial(inputs, s.im, s.tolerances.epsilon);
  report.im.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& smp = traj.samples[k];
    ImRecord r;
    r.t = smp.t;
    r.state = ImModel::from_vector(smp.state);
    r.u_sa = smp.input[0];
    r.u_sb = smp.input[1];
    r.dpsi_r = inputs[k].dpsi_r;
    r.domega_e = inputs[k].domega_e;
    r.eval = evals[k];
    report.im.push_back(r);
  }

  if (s.gramian.enabled) {
    const std::size_t k0 = std::min(index_of(s.gramian.start, s.dt), traj.size() - 1);
    GramianOptions opts;
    opts.delta = s.gramian.delta;
    opts.window = s.gramian.window;
    opts.dt = s.dt;
    opts.parallel = options.parallel;
    OutputMap output = [](const DynVector& x) -> DynVector { return x.head(2); };
    report.gramian = empirical_gramian(model, input, output, traj.samples[k0].state,
                                       traj.samples[k0].t, opts);
  }

  if (with_oracle) {
    OracleBlock block;
    const double h = s.dt;
    for (std::size_t k = 1; k + 1 < traj.size(); k += s.oracle.stride) {
      const auto& a = traj.samples[k - 1].state;
      const auto& b = traj.samples[k + 1].state;
      const Planar psi{traj.samples[k].state[2], traj.samples[k].state[3]};
      const Planar dpsi{(b[2] - a[2]) / (2 * h), (b[3] - a[3]) / (2 * h)};
      const double domega = (b[4] - a[4]) / (2 * h);
      const ImEvaluation fd = evaluate_im_point({psi, dpsi, traj.samples[k].state[4], domega},
                                                s.im, s.tolerances.epsilon);
      const ImEvaluation& rec = report.im[k].eval;
      if (fd.degenerate || rec.degenerate) continue;
      const double scale = std::abs(rec.acceleration_term) +
                           std::hypot(inputs[k].dpsi_r.x, inputs[k].dpsi_r.y) *
                               std::hypot(psi.x, psi.y);
      if (scale == 0.0) continue;
      const double err = std::abs(fd.six_state.value - rec.six_state.value) / scale;
      block.fd_max_relative_error = std::max(block.fd_max_relative_error, err);
      ++block.fd_points;
    }
    if (block.fd_max_relative_error > s.oracle.ratio_tolerance) {
      block.pass = false;
      char buf[160];
      std::snprintf(buf, sizeof buf, "finite-difference condition error %.3g above %.3g",
                    block.fd_max_relative_error, s.oracle.ratio_tolerance);
      block.failures.emplace_back(buf);
    }
    report.oracle = std::move(block);
  }
  return report;
}

}  // namespace

ObservabilityReport run_scenario(const Scenario& scenario, const RunOptions& options) {
  Scenario s = scenario;
  if (options.seed) s.seed = *options.seed;
  if (options.oracle) s.oracle.enabled = true;
  s.validate();
  ObservabilityReport report = s.machine == Machine::pmsm
                                   ? run_pmsm(s, options, s.oracle.enabled)
                                   : run_im(s, options, s.oracle.enabled);
  report.scenario = s;
  report.seed = s.seed;
  if (report.size() > 0 && report.degenerate_count() == report.size()) {
    report.warnings.emplace_back("every sample is degenerate");
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote(fields[i]);
  }
  out += "\r\n";
}

}  // namespace

std::vector<std::string> csv_header(Machine machine) {
  if (machine == Machine::pmsm) {
    return {"t [s]",          "i_d [A]",        "i_q [A]",        "theta_e [rad]",
            "omega_e [rad/s]", "di_d [A/s]",    "di_q [A/s]",     "u_d [V]",
            "u_q [V]",        "psi_Od [Wb]",    "psi_Oq [Wb]",    "theta_O [rad]",
            "dtheta_O [rad/s]", "D [A^2/s]",    "D_scale [A^2/s]", "value [rad/s]",
            "threshold [rad/s]", "observable",  "degenerate"};
  }
  return {"t [s]",           "i_sa [A]",          "i_sb [A]",        "psi_ra [Wb]",
          "psi_rb [Wb]",     "omega_e [rad/s]",   "T_L [N m]",       "u_sa [V]",
          "u_sb [V]",        "dpsi_ra [Wb/s]",    "dpsi_rb [Wb/s]",  "domega_e [rad/s^2]",
          "acceleration_term [Wb^2/s]", "value [Wb^2/s]", "value_5 [Wb^2/s]",
          "threshold [Wb^2/s]", "observable", "observable_5", "degenerate"};
}

std::string csv_text(const ObservabilityReport& report) {
  std::string out;
  append_row(out, csv_header(report.scenario.machine));
  for (const PmsmRecord& r : report.pmsm) {
    const PmsmEvaluation& e = r.eval;
    append_row(out, {num(r.t), num(r.state.i_d), num(r.state.i_q), num(r.state.theta_e),
                     num(r.state.omega_e), num(r.di_d), num(r.di_q), num(r.u_d), num(r.u_q),
                     num(e.psi.psi_d), num(e.psi.psi_q), num(e.psi.theta), num(e.theta_rate),
                     num(e.determinant), num(e.determinant_scale), num(e.verdict.value),
                     num(e.verdict.threshold), e.verdict.observable ? "1" : "0",
                     e.verdict.degenerate ? "1" : "0"});
  }
  for (const ImRecord& r : report.im) {
    const ImEvaluation& e = r.eval;
    append_row(out, {num(r.t), num(r.state.i_sa), num(r.state.i_sb), num(r.state.psi_ra),
                     num(r.state.psi_rb), num(r.state.omega_e), num(r.state.T_L), num(r.u_sa),
                     num(r.u_sb), num(r.dpsi_r.x), num(r.dpsi_r.y), num(r.domega_e),
                     num(e.acceleration_term), num(e.six_state.value), num(e.five_state.value),
                     num(e.six_state.threshold), e.six_state.observable ? "1" : "0",
                     e.five_state.observable ? "1" : "0", e.six_state.degenerate ? "1" : "0"});
  }
  return out;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw std::ios_base::failure("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void emit_csv(const ObservabilityReport& report, const std::string& path) {
  write_text_atomic(path, csv_text(report));
}

void emit_oracle_csv(const ObservabilityReport& report, const std::string& path) {
  std::string out;
  append_row(out, {"t [s]", "D [A^2/s]", "D_scale [A^2/s]", "numeric_det", "sigma_ratio", "rank",
                   "closed_form_zero", "numeric_deficient", "agree"});
  if (report.oracle) {
    for (const OraclePointRecord& p : report.oracle->points) {
      const OracleComparison& c = p.comparison;
      append_row(out, {num(p.t), num(c.closed_form_det), num(c.closed_form_scale),
                       num(c.numeric_det), num(c.sigma_ratio), std::to_string(c.rank),
                       c.closed_form_zero ? "1" : "0", c.numeric_deficient ? "1" : "0",
                       c.agree() ? "1" : "0"});
    }
  }
  write_text_atomic(path, out);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("no column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  CsvTable table;
  if (rows.empty()) return table;
  table.header = std::move(rows.front());
  table.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::size_t verdict_mismatches(const CsvTable& table) {
  const auto find = [&](const std::string& prefix) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (table.header[i].rfind(prefix, 0) == 0) return i;
    }
    throw std::out_of_range("no column starting with '" + prefix + "'");
  };
  const std::size_t v = find("value ["), th = find("threshold"), ob = table.column("observable"),
                    dg = table.column("degenerate");
  std::size_t bad = 0;
  for (const auto& row : table.rows) {
    const double value = std::stod(row.at(v));
    const double threshold = std::stod(row.at(th));
    const bool degenerate = row.at(dg) == "1";
    const bool recomputed = ObservabilityVerdict::make(value, threshold, degenerate).observable;
    if (recomputed != (row.at(ob) == "1")) ++bad;
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Summary

namespace {

std::string percent(std::size_t part, std::size_t whole) {
  if (whole == 0) return "0.0%";
  // Truncate so that anything short of every sample never prints as 100.0%.
  const double p = std::floor(1000.0 * static_cast<double>(part) / static_cast<double>(whole)) / 10.0;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", p);
  return buf;
}

}  // namespace

Summary emit_summary(const ObservabilityReport& report) {
  const Scenario& s = report.scenario;
  std::ostringstream out;
  char buf[256];
  out << "scenario " << s.name << " (" << to_string(s.machine) << ", " << to_string(s.mode)
      << ")\n";
  out << "samples " << report.size() << "\n";
  out << "observable " << percent(report.observable_count(), report.size()) << "\n";
  const double m = report.min_abs_value();
  std::snprintf(buf, sizeof buf, "min |value| %.6g %s\n", m,
                s.machine == Machine::pmsm ? "rad/s" : "Wb^2/s");
  out << buf;
  out << "degenerate " << report.degenerate_count() << "\n";
  if (s.machine == Machine::pmsm && !report.pmsm.empty()) {
    double max_abs_D = 0.0;
    std::size_t zero_D = 0;
    for (const PmsmRecord& r : report.pmsm) {
      max_abs_D = std::max(max_abs_D, std::abs(r.eval.determinant));
      zero_D += std::abs(r.eval.determinant) < s.tolerances.epsilon_D;
    }
    std::snprintf(buf, sizeof buf, "max |D| %.6g A^2/s, |D| < %.3g on %zu samples\n", max_abs_D,
                  s.tolerances.epsilon_D, zero_D);
    out << buf;
  }
  if (report.gramian) {
    const GramianSummary& g = *report.gramian;
    std::snprintf(buf, sizeof buf,
                  "gramian window %.6g s, singular values min %.6g max %.6g, ratio %.6g\n",
                  g.window, g.min_singular_value, g.max_singular_value, g.ratio);
    out << buf;
  }
  int code = kExitOk;
  if (report.oracle) {
    const OracleBlock& o = *report.oracle;
    out << "oracle " << (o.pass ? "PASS" : "FAIL") << "\n";
    if (s.machine == Machine::pmsm) {
      std::snprintf(buf, sizeof buf, "  trajectory agreement %zu/%zu (zero set %zu)\n",
                    o.trajectory.agreeing, o.trajectory.points, o.trajectory.zero_set);
      out << buf;
      if (o.random.points > 0) {
        std::snprintf(buf, sizeof buf,
                      "  random agreement %zu/%zu (zero set %zu), ratio deviation %.3g\n",
                      o.random.agreeing, o.random.points, o.random.zero_set,
                      o.random.ratio_max_relative_deviation);
        out << buf;
      }
      if (o.gramian_contrast) {
        std::snprintf(buf, sizeof buf, "  gramian contrast %.6g (baseline ratio %.6g)\n",
                      *o.gramian_contrast, o.baseline_gramian->ratio);
        out << buf;
      }
    } else {
      std::snprintf(buf, sizeof buf, "  finite-difference check %zu points, max error %.3g\n",
                    o.fd_points, o.fd_max_relative_error);
      out << buf;
    }
    for (const std::string& f : o.failures) out << "  failure: " << f << "\n";
    if (!o.pass) code = kExitOracleFail;
  }
  for (const std::string& w : report.warnings) out << "warning: " << w << "\n";
  out << "tool " << report.tool_version << ", seed " << report.seed << "\n";
  out << "exit " << code << "\n";
  out << "scenario echo:\n" << to_json(s).dump(2) << "\n";
  return {out.str(), code};
}

Summary write_outputs(const ObservabilityReport& report, const std::string& dir) {
  const fs::path base = fs::path(dir) / report.scenario.name;
  emit_csv(report, base.string() + ".csv");
  if (report.oracle && report.scenario.machine == Machine::pmsm) {
    emit_oracle_csv(report, base.string() + ".oracle.csv");
  }
  Summary summary = emit_summary(report);
  write_text_atomic(base.string() + ".summary.txt", summary.text);
  return summary;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<double> sweep_values(double a, double b, std::size_t n) {
  if (n == 0) throw ValidationError("range", "needs at least one point");
  if (!std::isfinite(a) || !std::isfinite(b)) throw ValidationError("range", "must be finite");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (n > 1) v.back() = b;
  return v;
}

SweepResult sweep(const nlohmann::json& scenario, const std::string& default_name,
                  const std::string& param, const std::vector<double>& values,
                  const RunOptions& options) {
  if (param.empty()) throw ValidationError("param", "must not be empty");
  std::string pointer;
  std::stringstream parts(param);
  for (std::string part; std::getline(parts, part, '.');) {
    if (part.empty()) throw ValidationError("param", "empty path component in '" + param + "'");
    pointer += "/" + part;
  }
  const nlohmann::json::json_pointer ptr(pointer);
  // Fails early on a bad base file or path.
  const Scenario base = scenario_from_json(scenario, default_name);

  SweepResult result;
  result.name = base.name;
  result.param = param;
  result.points.resize(values.size());
  RunOptions inner = options;
  inner.parallel = false;
  const auto n = static_cast<long>(values.size());
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (long i = 0; i < n; ++i) {
    SweepPoint& p = result.points[i];
    p.value = values[i];
    try {
      nlohmann::json j = scenario;
      j[ptr] = values[i];
      const ObservabilityReport r = run_scenario(scenario_from_json(j, default_name), inner);
      p.samples = r.size();
      p.observable = r.observable_count();
      p.degenerate = r.degenerate_count();
      p.min_abs_value = r.min_abs_value();
      if (r.oracle && !r.oracle->pass) p.status = kExitOracleFail;
    } catch (const ValidationError& e) {
      p.status = kExitValidation;
      p.error = e.what();
    } catch (const DivergenceError& e) {
      p.status = kExitDivergence;
      p.error = e.what();
    } catch (const std::exception& e) {
      p.status = kExitValidation;
      p.error = e.what();
    }
  }
  return result;
}

std::string sweep_csv_text(const SweepResult& result) {
  std::string out;
  append_row(out, {result.param, "status", "samples", "observable", "degenerate",
                   "observable_fraction", "min_abs_value", "error"});
  for (const SweepPoint& p : result.points) {
    const double frac = p.samples ? static_cast<double>(p.observable) / p.samples : 0.0;
    append_row(out, {num(p.value), std::to_string(p.status), std::to_string(p.samples),
                     std::to_string(p.observable), std::to_string(p.degenerate), num(frac),
                     num(p.min_abs_value), p.error});
  }
  return out;
}

std::string sweep_summary_text(const SweepResult& result) {
  std::ostringstream out;
  std::size_t failed = 0, fully = 0, never = 0;
  for (const SweepPoint& p : result.points) {
    if (p.status != kExitOk) {
      ++failed;
    } else if (p.observable == p.samples) {
      ++fully;
    } else if (p.observable == 0) {
      ++never;
    }
  }
  out << "sweep " << result.name << " over " << result.param << ", " << result.points.size()
      << " points\n";
  out << "fully observable " << fully << ", never observable " << never << ", mixed "
      << result.points.size() - failed - fully - never << ", failed " << failed << "\n";
  for (const SweepPoint& p : result.points) {
    char buf[200];
    if (p.status != kExitOk) {
      std::snprintf(buf, sizeof buf, "%s = %.12g: exit %d (%s)\n", result.param.c_str(), p.value,
                    p.status, p.error.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%s = %.12g: observable %s\n", result.param.c_str(),
                    p.value, percent(p.observable, p.samples).c_str());
    }
    out << buf;
  }
  out << "tool " << kToolVersion << "\n";
  return out.str();
}

}  // namespace obsv

// Command-line front end: run, validate and sweep scenario files.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "obsv/errors.hpp"
#include "obsv/report.hpp"
#include "obsv/scenario.hpp"

namespace fs = std::filesystem;
using namespace obsv;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string output_dir(const std::string& flag, const Scenario& s) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("OBSV_OUT_DIR"); env && *env) return env;
  fs::path dir(s.output_dir);
  if (dir.is_relative() && !s.base_dir.empty() && s.output_dir != ".") {
    return (fs::path(s.base_dir) / dir).string();
  }
  return dir.string();
}

// Maps failures onto the documented exit codes.
template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DivergenceError& e) {
    std::cerr << "simulation diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

Scenario load(const std::string& path) {
  const std::string text = read_file(path);
  Scenario s = parse_scenario(text, fs::path(path).stem().string());
  s.base_dir = fs::path(path).parent_path().string();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local observability analysis for PMSM and induction machine trajectories"};
  app.require_subcommand(1);

  std::string file, out_dir, param, range;
  bool oracle = false;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run a scenario and write <name>.csv and <name>.summary.txt");
  run->add_option("scenario", file, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory (default: $OBSV_OUT_DIR, then the scenario's output.dir)");
  run->add_flag("--oracle", oracle, "Run the numeric oracle checks");
  auto* seed_opt = run->add_option("--seed", seed, "Seed for randomized oracle points");

  auto* validate = app.add_subcommand("validate", "Load and validate a scenario, print it with defaults");
  validate->add_option("scenario", file, "Scenario file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Re-run a scenario over a parameter range");
  sweep_cmd->add_option("scenario", file, "Scenario file")->required();
  sweep_cmd->add_option("--param", param, "Dotted parameter path, e.g. initial.omega_e")->required();
  sweep_cmd->add_option("--range", range, "A:B:N, N evenly spaced values from A to B")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*validate) {
    return guarded([&] {
      const Scenario s = load(file);
      std::cout << to_json(s).dump(2) << "\n";
      return kExitOk;
    });
  }

  if (*run) {
    return guarded([&] {
      const Scenario s = load(file);
      RunOptions opts;
      opts.oracle = oracle;
      if (seed_opt->count() > 0) opts.seed = seed;
      const ObservabilityReport report = run_scenario(s, opts);
      const Summary summary = write_outputs(report, output_dir(out_dir, s));
      std::cout << summary.text;
      return summary.exit_code;
    });
  }

  return guarded([&] {
    double a = 0.0, b = 0.0;
    long long n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(range);
    if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !in.eof()) {
      std::cerr << "--range must look like A:B:N with N >= 1\n";
      return static_cast<int>(kExitUsage);
    }
    const Scenario s = load(file);
    const nlohmann::json j = nlohmann::json::parse(read_file(file));
    const SweepResult result =
        sweep(j, s.name, param, sweep_values(a, b, static_cast<std::size_t>(n)));
    const fs::path base = fs::path(output_dir(out_dir, s)) / (s.name + ".sweep");
    write_text_atomic(base.string() + ".csv", sweep_csv_text(result));
    const std::string text = sweep_summary_text(result);
    write_text_atomic(base.string() + ".summary.txt", text);
    std::cout << text;
    for (const SweepPoint& p : result.points) {
      if (p.status != kExitOk) return p.status;
    }
    return static_cast<int>(kExitOk);
  });
}

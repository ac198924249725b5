#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tstab/bounds.hpp"
#include "tstab/ensemble.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

// FNV-1a 64-bit over the file bytes; recorded in the manifest so replays can
// be compared without shipping the artifacts themselves.
std::string content_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash " + path.string());
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << h;
  return os.str();
}

std::string kind_name(tstab::ExperimentKind kind) {
  return kind == tstab::ExperimentKind::convergence ? "convergence" : "observer";
}

json config_to_json(const tstab::ExperimentConfig& config) {
  json doc;
  doc["kind"] = kind_name(config.kind);
  doc["seed"] = config.seed;
  doc["runs"] = config.runs;
  doc["epochs"] = config.epochs;
  doc["alpha"] = config.alpha;
  doc["epsilon"] = config.epsilon;
  doc["delta"] = config.delta;
  doc["omega_low"] = config.omega_low;
  doc["omega_high"] = config.omega_high;
  doc["noise_std"] = config.noise_std;
  doc["omega_mode"] =
      config.omega_mode == tstab::OmegaMode::per_epoch ? "per_epoch" : "per_run";
  doc["burn_in"] = config.burn_in;
  if (config.gain) {
    doc["gain"] = {config.gain->w, config.gain->x, config.gain->y, config.gain->z};
  } else {
    doc["gain"] = "auto";
  }
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

void write_manifest(const fs::path& out_dir, const json& effective_config,
                    const std::vector<std::string>& artifacts) {
  json manifest;
  manifest["config"] = effective_config;
  json hashes = json::object();
  for (const auto& name : artifacts) {
    hashes[name] = content_hash(out_dir / name);
  }
  manifest["artifacts"] = hashes;
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

// Round to 6 significant digits for the bounds report.
double sig6(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return std::stod(os.str());
}

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> epochs;
  std::optional<double> alpha;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> noise_std;
  std::optional<double> omega_low;
  std::optional<double> omega_high;
  std::optional<int> burn_in;
  std::string out_dir = "out";
  int threads = 1;
  bool emit_gnuplot = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--runs", flags.runs, "Monte Carlo run count");
  cmd->add_option("--epochs", flags.epochs, "steps per run");
  cmd->add_option("--alpha", flags.alpha, "stabilization gain");
  cmd->add_option("--epsilon", flags.epsilon, "sublevel radius");
  cmd->add_option("--delta", flags.delta, "tube margin");
  cmd->add_option("--noise-std", flags.noise_std, "measurement noise std");
  cmd->add_option("--omega-low", flags.omega_low, "rotation increment lower bound");
  cmd->add_option("--omega-high", flags.omega_high, "rotation increment upper bound");
  cmd->add_option("--burn-in", flags.burn_in, "epochs excluded from summary max/min");
  cmd->add_option("--out-dir", flags.out_dir, "artifact directory");
  cmd->add_option("--threads", flags.threads, "worker thread count");
  cmd->add_flag("--emit-gnuplot", flags.emit_gnuplot, "write a plot.gp referencing the CSVs");
}

// File values first, then flag overrides.
tstab::ExperimentConfig resolve_config(const CommonFlags& flags, tstab::ExperimentKind kind) {
  tstab::ExperimentConfig config = kind == tstab::ExperimentKind::convergence
                                       ? tstab::ExperimentConfig{}
                                       : tstab::observer_defaults();
  if (flags.config_path) {
    std::ifstream in(*flags.config_path);
    if (!in) throw tstab::ConfigError("config error: cannot read " + *flags.config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    config = tstab::parse_config_json(buffer.str());
    if (config.kind != kind) {
      throw tstab::ConfigError("config error: `kind` does not match the subcommand");
    }
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.runs) config.runs = *flags.runs;
  if (flags.epochs) config.epochs = *flags.epochs;
  if (flags.alpha) config.alpha = *flags.alpha;
  if (flags.epsilon) config.epsilon = *flags.epsilon;
  if (flags.delta) config.delta = *flags.delta;
  if (flags.noise_std) config.noise_std = *flags.noise_std;
  if (flags.omega_low) config.omega_low = *flags.omega_low;
  if (flags.omega_high) config.omega_high = *flags.omega_high;
  if (flags.burn_in) config.burn_in = *flags.burn_in;
  config.threads = flags.threads;
  return config;
}

void attach_progress(tstab::ExperimentConfig& config) {
  config.progress = [last = 0](int done, int total) mutable {
    const int decile = done * 10 / total;
    if (decile > last) {
      last = decile;
      std::cerr << "progress: " << decile * 10 << "% (" << done << "/" << total << " runs)\n";
    }
  };
}

int run_bounds(double epsilon, double delta, std::optional<double> alpha,
               const std::string& out_dir) {
  const tstab::StabilizerGains gains = tstab::s3_bounds(epsilon, delta, alpha);
  json doc;
  doc["epsilon"] = sig6(gains.epsilon);
  doc["delta"] = sig6(gains.delta);
  doc["L"] = sig6(gains.L);
  doc["d"] = sig6(gains.d);
  doc["b"] = sig6(gains.b);
  doc["alpha_max"] = sig6(gains.alpha_max);
  if (alpha) {
    doc["alpha"] = sig6(gains.alpha);
    doc["c"] = sig6(gains.c);
    doc["contraction"] = sig6(gains.contraction);
  }
  const std::string text = doc.dump(2) + "\n";
  std::cout << text;
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "bounds.json", text);
  write_manifest(out_dir, doc, {"bounds.json"});
  return 0;
}

int run_converge(tstab::ExperimentConfig config, const std::string& out_dir,
                 bool emit_gnuplot) {
  const json effective = config_to_json(config);
  std::cerr << "effective config: " << effective.dump() << "\n";
  attach_progress(config);
  const tstab::EnsembleSeries series = tstab::run_convergence(config);
  fs::create_directories(out_dir);
  tstab::write_series_csv(series, (fs::path(out_dir) / "converge_dist.csv").string());
  std::vector<std::string> artifacts{"converge_dist.csv"};
  if (emit_gnuplot) {
    write_text(fs::path(out_dir) / "plot.gp",
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set xlabel 'epoch'\n"
               "set ylabel 'distance to the unit sphere'\n"
               "plot 'converge_dist.csv' using 1:2 with lines title 'mean', \\\n"
               "     '' using 1:4 with lines title 'min', \\\n"
               "     '' using 1:5 with lines title 'max'\n");
    artifacts.push_back("plot.gp");
  }
  write_manifest(out_dir, effective, artifacts);
  return 0;
}

int run_observe(tstab::ExperimentConfig config, const std::string& out_dir,
                bool emit_gnuplot) {
  const json effective = config_to_json(config);
  std::cerr << "effective config: " << effective.dump() << "\n";
  attach_progress(config);
  const tstab::ObserverResult result = tstab::run_observer(config);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  tstab::write_series_csv(result.err_w, (dir / "observe_err_w.csv").string());
  tstab::write_series_csv(result.err_wo, (dir / "observe_err_wo.csv").string());
  tstab::write_series_csv(result.dist_w, (dir / "observe_dist_w.csv").string());
  tstab::write_series_csv(result.dist_wo, (dir / "observe_dist_wo.csv").string());
  tstab::write_table_csv(result.table, (dir / "observe_table.csv").string());
  std::vector<std::string> artifacts{"observe_err_w.csv", "observe_err_wo.csv",
                                     "observe_dist_w.csv", "observe_dist_wo.csv",
                                     "observe_table.csv"};
  if (emit_gnuplot) {
    write_text(dir / "plot.gp",
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set xlabel 'epoch'\n"
               "set multiplot layout 2,1\n"
               "set ylabel 'state error'\n"
               "plot 'observe_err_w.csv' using 1:2 with lines title 'w', \\\n"
               "     'observe_err_wo.csv' using 1:2 with lines title 'wo'\n"
               "set ylabel 'distance to the unit sphere'\n"
               "plot 'observe_dist_w.csv' using 1:2 with lines title 'w', \\\n"
               "     'observe_dist_wo.csv' using 1:2 with lines title 'wo'\n"
               "unset multiplot\n");
    artifacts.push_back("plot.gp");
  }
  write_manifest(out_dir, effective, artifacts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transversal stabilization of discrete-time systems on manifolds"};
  app.require_subcommand(1);

  // bounds
  double bounds_epsilon = 0.5;
  double bounds_delta = 0.059;
  std::optional<double> bounds_alpha = 0.01;
  std::string bounds_out_dir = "out";
  CLI::App* bounds_cmd =
      app.add_subcommand("bounds", "certified gains for the unit-sphere constraint");
  bounds_cmd->add_option("--epsilon", bounds_epsilon, "sublevel radius (0, 1)");
  bounds_cmd->add_option("--delta", bounds_delta, "tube margin");
  bounds_cmd->add_option("--alpha", bounds_alpha, "stabilization gain to validate");
  bounds_cmd->add_option("--out-dir", bounds_out_dir, "artifact directory");

  CommonFlags converge_flags;
  CLI::App* converge_cmd =
      app.add_subcommand("converge", "sphere-convergence Monte Carlo ensemble");
  add_common_flags(converge_cmd, converge_flags);

  CommonFlags observe_flags;
  CLI::App* observe_cmd =
      app.add_subcommand("observe", "observer-comparison Monte Carlo ensemble");
  add_common_flags(observe_cmd, observe_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (bounds_cmd->parsed()) {
      return run_bounds(bounds_epsilon, bounds_delta, bounds_alpha, bounds_out_dir);
    }
    if (converge_cmd->parsed()) {
      return run_converge(resolve_config(converge_flags, tstab::ExperimentKind::convergence),
                          converge_flags.out_dir, converge_flags.emit_gnuplot);
    }
    return run_observe(resolve_config(observe_flags, tstab::ExperimentKind::observer),
                       observe_flags.out_dir, observe_flags.emit_gnuplot);
  } catch (const tstab::ConfigError& err) {
    std::cerr << err.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
}

// Acceptance suite: one pass/fail line per criterion, driving the installed
// CLI binary for the end-to-end checks and the library for the rest.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tstab/bounds.hpp"
#include "tstab/ensemble.hpp"
#include "tstab/rigidbody.hpp"
#include "tstab/stabilizer.hpp"

// frozen from the seed-42 pilot run; see criterion 4
#ifndef TSTAB_REG_ERR_W_MEAN
#define TSTAB_REG_ERR_W_MEAN 0.14761431547844814
#define TSTAB_REG_ERR_WO_MEAN 0.15740923241218352
#define TSTAB_REG_DIST_W_MEAN 0.04609116957032208
#define TSTAB_REG_DIST_WO_MEAN 0.06085239619102979
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tstab;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << what;
  if (!detail.empty()) std::cout << " [" << detail << "]";
  std::cout << "\n";
  if (!ok) ++g_failures;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

fs::path scratch_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / ("tstab_acceptance_" + std::to_string(++counter));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TSTAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct SeriesRow {
  int epoch;
  double mean, std, min, max;
};

std::vector<SeriesRow> read_series(const fs::path& path) {
  std::ifstream in(path);
  std::vector<SeriesRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    SeriesRow row{};
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &row.epoch, &row.mean, &row.std,
                    &row.min, &row.max) == 5) {
      rows.push_back(row);
    }
  }
  return rows;
}

// observer,metric -> row
std::map<std::string, SeriesRow> read_table(const fs::path& path) {
  std::ifstream in(path);
  std::map<std::string, SeriesRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string observer, metric, field;
    std::getline(ls, observer, ',');
    std::getline(ls, metric, ',');
    SeriesRow row{};
    std::getline(ls, field, ',');
    row.mean = std::stod(field);
    std::getline(ls, field, ',');
    row.std = std::stod(field);
    std::getline(ls, field, ',');
    row.max = std::stod(field);
    std::getline(ls, field, ',');
    row.min = std::stod(field);
    rows[observer + "/" + metric] = row;
  }
  return rows;
}

void criterion_1_gain_certification() {
  Timer timer;
  const fs::path dir = scratch_dir();
  const int rc = run_cli("bounds --epsilon 0.5 --delta 0.059 --alpha 0.01 --out-dir " +
                         dir.string());
  bool ok = rc == 0;
  std::ostringstream detail;
  if (ok) {
    const json doc = json::parse(slurp(dir / "bounds.json"));
    const double L = doc["L"].get<double>();
    const double b = doc["b"].get<double>();
    const double d = doc["d"].get<double>();
    const double alpha_max = doc["alpha_max"].get<double>();
    ok = L >= 3.69 && L <= 3.70;
    ok = ok && alpha_max >= 0.0159 && alpha_max <= 0.0160;
    ok = ok && std::abs(b - 4.686) <= 0.001;
    ok = ok && d >= 15.87;
    // the tube cap, not the curvature cap, governs alpha_max here; the JSON
    // carries six significant digits, so compare at that resolution
    ok = ok && std::abs(alpha_max - 0.059 / L) <= 1e-6;
    detail << "L=" << L << " b=" << b << " d=" << d << " alpha_max=" << alpha_max;
  }
  const double elapsed = timer.seconds();
  ok = ok && elapsed < 1.0;
  detail << " t=" << elapsed << "s";
  report(1, "certified sphere gains reproduce the published values", ok, detail.str());
}

void criterion_2_contraction() {
  Timer timer;
  const double b = 16.0 * (1.0 - std::sqrt(0.5));
  const double c = 0.01 - 0.01 * 0.01 * 15.87 / 2.0;
  StabilizerGains gains;
  gains.contraction = 1.0 - b * c;  // 0.956856

  RngStream rng(20240042);
  int violations = 0;
  int checked = 0;
  double v = 0.0, v_next = 0.0;
  while (checked < 10000) {
    const Vec x = sample_s3_tube(rng, 0.5, 0.0);
    const Quaternion q{x[0], x[1], x[2], x[3]};
    const double g = norm_sq(q) - 1.0;
    v = g * g;
    if (v > 0.5) continue;
    ++checked;
    const Quaternion omega{0, rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5),
                           rng.uniform(0.0, 0.5)};
    const Quaternion next = stabilized_step(q, omega, 0.01);
    const double gn = norm_sq(next) - 1.0;
    v_next = gn * gn;
    if (!check_contraction(v, v_next, gains).satisfied) ++violations;
  }
  const double elapsed = timer.seconds();
  const bool ok = violations == 0 && elapsed < 5.0;
  std::ostringstream detail;
  detail << "violations=" << violations << "/10000, contraction=" << gains.contraction
         << ", t=" << elapsed << "s";
  report(2, "one-step Lyapunov contraction at the published rate", ok, detail.str());
}

void criterion_3_convergence() {
  Timer timer;
  const fs::path dir = scratch_dir();
  const int rc = run_cli("converge --runs 200 --epochs 100 --alpha 0.01 --seed 42 --out-dir " +
                         dir.string());
  bool ok = rc == 0;
  std::ostringstream detail;
  if (ok) {
    const auto rows = read_series(dir / "converge_dist.csv");
    ok = rows.size() == 101;
    if (ok) {
      for (std::size_t e = 2; e < rows.size(); ++e) {
        if (rows[e].mean > rows[e - 1].mean + 1e-12) ok = false;
      }
      ok = ok && rows[0].mean >= 0.15 && rows[0].mean <= 0.45;
      ok = ok && rows[100].mean < 1e-3;
      detail << "epoch0=" << rows[0].mean << " epoch100=" << rows[100].mean;
    }
  }
  const double elapsed = timer.seconds();
  ok = ok && elapsed < 10.0;
  detail << " t=" << elapsed << "s";
  report(3, "desk-scale convergence of the mean distance to the sphere", ok, detail.str());
}

void criterion_4_observer_table() {
  Timer timer;
  const fs::path dir = scratch_dir();
  const int rc = run_cli("observe --runs 200 --epochs 100 --seed 42 --out-dir " + dir.string());
  bool ok = rc == 0;
  std::ostringstream detail;
  if (ok) {
    const auto table = read_table(dir / "observe_table.csv");
    const auto& err_w = table.at("w/state_error");
    const auto& err_wo = table.at("wo/state_error");
    const auto& dist_w = table.at("w/manifold_dist");
    const auto& dist_wo = table.at("wo/manifold_dist");
    ok = err_w.mean < err_wo.mean;
    ok = ok && dist_w.mean >= 0.04 && dist_w.mean <= 0.17;
    ok = ok && dist_wo.mean >= 0.06 && dist_wo.mean <= 0.22;
    ok = ok && dist_wo.std / dist_w.std >= 1.2;
    // frozen desk-scale regression constants from the pilot run (seed 42,
    // 200 runs); deterministic, so tight tolerances are safe
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b)); };
    ok = ok && close(err_w.mean, TSTAB_REG_ERR_W_MEAN);
    ok = ok && close(err_wo.mean, TSTAB_REG_ERR_WO_MEAN);
    ok = ok && close(dist_w.mean, TSTAB_REG_DIST_W_MEAN);
    ok = ok && close(dist_wo.mean, TSTAB_REG_DIST_WO_MEAN);
    detail << "err_w=" << err_w.mean << " err_wo=" << err_wo.mean << " dist_w=" << dist_w.mean
           << " dist_wo=" << dist_wo.mean << " std_ratio=" << dist_wo.std / dist_w.std;
  }
  const double elapsed = timer.seconds();
  ok = ok && elapsed < 30.0;
  detail << " t=" << elapsed << "s";
  report(4, "observer comparison reproduces the published direction and magnitude", ok,
         detail.str());
}

void criterion_5_mode_equivalence() {
  ConstraintSpec half_spec;
  half_spec.mode = ConstraintMode::gradient;
  half_spec.value = [](const Vec& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    const double g = s - 1.0;
    return 0.5 * g * g;
  };
  half_spec.gradient = [](const Vec& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    const double g = s - 1.0;
    Vec grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = 2.0 * x[i] * g;
    return grad;
  };
  const ConstraintSpec sub_spec = s3_submersion_spec();

  RngStream rng(20240055);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec x = sample_s3_tube(rng, 0.5, 0.059);
    const Vec a = stabilized_step_gradient(x, half_spec, 0.01);
    const Vec b = stabilized_step_submersion(x, sub_spec, 0.01);
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  std::ostringstream detail;
  detail << "max componentwise difference=" << worst;
  report(5, "gradient and submersion stabilizers agree for V = 1/2 ||g||^2", worst <= 1e-12,
         detail.str());
}

void criterion_6_numerical_checks() {
  const ConstraintSpec spec = s3_gradient_spec();
  RngStream rng(20240066);
  bool ok = true;
  double worst_rel = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = sample_s3_tube(rng, 0.5, 0.059);
    const Vec analytic = spec.gradient(x);
    double scale = 1.0;
    for (double e : analytic) scale = std::max(scale, std::abs(e));
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double h = 1e-4;
      Vec p2 = x, p1 = x, m1 = x, m2 = x;
      p2[j] += 2 * h;
      p1[j] += h;
      m1[j] -= h;
      m2[j] -= 2 * h;
      const double numeric =
          (-spec.value(p2) + 8 * spec.value(p1) - 8 * spec.value(m1) + spec.value(m2)) /
          (12 * h);
      worst_rel = std::max(worst_rel, std::abs(analytic[j] - numeric) / scale);
    }
  }
  ok = worst_rel <= 1e-6;

  // identity ||grad V||^2 = 16 ||x||^2 V within 8 ulps
  std::uint64_t worst_ulps = 0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = sample_s3_tube(rng, 0.5, 0.059);
    const Vec grad = spec.gradient(x);
    double grad_sq = 0.0, x_sq = 0.0;
    for (double e : grad) grad_sq += e * e;
    for (double e : x) x_sq += e * e;
    const double identity = 16.0 * x_sq * spec.value(x);
    const double rel = identity == 0.0 ? 0.0 : std::abs(grad_sq - identity) / identity;
    const auto ulps = static_cast<std::uint64_t>(rel / 2.220446049250313e-16);
    worst_ulps = std::max(worst_ulps, ulps);
  }
  ok = ok && worst_ulps <= 8;
  std::ostringstream detail;
  detail << "max gradient rel err=" << worst_rel << ", max identity ulps=" << worst_ulps;
  report(6, "gradient matches finite differences and the dominance identity", ok, detail.str());
}

void criterion_7_determinism() {
  const fs::path dir1 = scratch_dir();
  const fs::path dir4 = scratch_dir();
  bool ok = run_cli("converge --seed 42 --runs 64 --threads 1 --out-dir " + dir1.string()) == 0;
  ok = ok &&
       run_cli("converge --seed 42 --runs 64 --threads 4 --out-dir " + dir4.string()) == 0;
  ok = ok && slurp(dir1 / "converge_dist.csv") == slurp(dir4 / "converge_dist.csv");

  const fs::path odir1 = scratch_dir();
  const fs::path odir4 = scratch_dir();
  ok = ok &&
       run_cli("observe --seed 42 --runs 64 --threads 1 --out-dir " + odir1.string()) == 0;
  ok = ok &&
       run_cli("observe --seed 42 --runs 64 --threads 4 --out-dir " + odir4.string()) == 0;
  for (const char* name : {"observe_err_w.csv", "observe_err_wo.csv", "observe_dist_w.csv",
                           "observe_dist_wo.csv", "observe_table.csv"}) {
    ok = ok && slurp(odir1 / name) == slurp(odir4 / name);
    ok = ok && !slurp(odir1 / name).empty();
  }
  report(7, "identical seeds give byte-identical CSVs for thread counts 1 and 4", ok, "");
}

}  // namespace

int main() {
  criterion_1_gain_certification();
  criterion_2_contraction();
  criterion_3_convergence();
  criterion_4_observer_table();
  criterion_5_mode_equivalence();
  criterion_6_numerical_checks();
  criterion_7_determinism();
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}

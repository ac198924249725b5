#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tstab/quaternion.hpp"
#include "tstab/rng.hpp"

namespace tstab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { convergence, observer };
enum class OmegaMode { per_epoch, per_run };

// Fully determines an ensemble; every output is a pure function of this.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::convergence;
  std::uint64_t seed = 42;
  int runs = 200;
  int epochs = 100;
  double alpha = 0.01;
  double epsilon = 0.5;
  double delta = 0.059;
  double omega_low = 0.0;
  double omega_high = 0.5;
  double noise_std = 0.1;              // observer only
  std::optional<Quaternion> gain;      // observer only; nullopt = auto (Monte Carlo mean)
  OmegaMode omega_mode = OmegaMode::per_epoch;
  int burn_in = 25;                    // epochs excluded from summary max/min
  int threads = 1;                     // execution detail, not part of the config schema
  std::function<void(int done, int total)> progress;  // optional, called per finished run
};

// Defaults for the rotation-increment experiment of the observer comparison:
// omega components uniform in [0, 10].
ExperimentConfig observer_defaults();

struct EpochStats {
  int epoch = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;
  double min = 0.0;
};

// Per-epoch cross-run statistics of one scalar metric, plus pooled summary
// statistics over the post-burn-in samples.
struct EnsembleSeries {
  std::string metric_name;
  std::vector<EpochStats> per_epoch;
  SummaryStats summary;
};

struct ObserverTableRow {
  std::string observer;  // "w" | "wo"
  std::string metric;    // "state_error" | "manifold_dist"
  double mean = 0.0;     // pooled over the final epoch
  double std = 0.0;      // pooled over the final epoch
  double max = 0.0;      // pooled over all runs and epochs > burn_in
  double min = 0.0;      // pooled over all runs and epochs > burn_in
};

struct ObserverResult {
  EnsembleSeries err_w;
  EnsembleSeries err_wo;
  EnsembleSeries dist_w;
  EnsembleSeries dist_wo;
  std::vector<ObserverTableRow> table;
};

// Per-run stream keyed by (master_seed, run_index); stable across versions.
RngStream derive_run_rng(std::uint64_t master_seed, std::uint64_t run_index);

// Sphere-convergence ensemble: per run, an initial state [w, 0, 0, 0] with w
// uniform in [sqrt(1 - sqrt(eps)), sqrt(1 + sqrt(eps))] is advanced by the
// stabilized step for `epochs` steps; the recorded metric is the distance to
// the unit sphere. Epoch 0 records the initial condition.
EnsembleSeries run_convergence(const ExperimentConfig& config);

// Observer-comparison ensemble: truth starts uniform on the sphere, both
// observers at identity; each epoch the current truth is measured, both
// observers advance on that measurement, and the truth advances with the
// same rotation increment. Metrics: ||q - q_hat|| against the truth and the
// observer's distance to the sphere, for both observer lines.
ObserverResult run_observer(const ExperimentConfig& config);

// CSV with header `epoch,mean,std,min,max`, LF line endings, reals printed
// as shortest round-trip decimals.
void write_series_csv(const EnsembleSeries& series, const std::string& path);

// CSV with header `observer,metric,mean,std,max,min`.
void write_table_csv(const std::vector<ObserverTableRow>& rows, const std::string& path);

// Parses the config JSON (keys exactly matching the ExperimentConfig field
// names; unknown keys are an error). `kind` is required.
ExperimentConfig parse_config_json(const std::string& text);

}  // namespace tstab

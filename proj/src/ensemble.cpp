#include "tstab/ensemble.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <span>
#include <thread>

#include <json.hpp>

#include "tstab/rigidbody.hpp"

namespace tstab {

namespace {

// Pairwise summation in a fixed order: the reduction is independent of the
// thread count, which makes ensemble output bitwise reproducible.
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double e : v) s += e;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

// runs x (epochs + 1) metric samples, row per run in ascending run order.
class MetricMatrix {
 public:
  MetricMatrix(int runs, int epochs_plus_one)
      : runs_(runs), cols_(epochs_plus_one), data_(static_cast<std::size_t>(runs) * cols_) {}

  double& at(int run, int epoch) { return data_[static_cast<std::size_t>(run) * cols_ + epoch]; }
  double at(int run, int epoch) const {
    return data_[static_cast<std::size_t>(run) * cols_ + epoch];
  }
  int runs() const { return runs_; }
  int cols() const { return cols_; }

 private:
  int runs_;
  int cols_;
  std::vector<double> data_;
};

EnsembleSeries aggregate(const MetricMatrix& m, std::string metric_name, int burn_in) {
  EnsembleSeries series;
  series.metric_name = std::move(metric_name);
  series.per_epoch.resize(m.cols());

  std::vector<double> column(m.runs());
  std::vector<double> sq_dev(m.runs());
  for (int e = 0; e < m.cols(); ++e) {
    for (int r = 0; r < m.runs(); ++r) column[r] = m.at(r, e);
    const double mean = pairwise_sum(column) / m.runs();
    for (int r = 0; r < m.runs(); ++r) sq_dev[r] = (column[r] - mean) * (column[r] - mean);
    EpochStats& row = series.per_epoch[e];
    row.epoch = e;
    row.mean = mean;
    row.std = std::sqrt(pairwise_sum(sq_dev) / m.runs());
    row.min = *std::min_element(column.begin(), column.end());
    row.max = *std::max_element(column.begin(), column.end());
  }

  // Pooled post-burn-in summary, ascending run index then epoch.
  std::vector<double> pooled;
  for (int r = 0; r < m.runs(); ++r)
    for (int e = burn_in + 1; e < m.cols(); ++e) pooled.push_back(m.at(r, e));
  if (!pooled.empty()) {
    const double mean = pairwise_sum(pooled) / pooled.size();
    std::vector<double> dev(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i)
      dev[i] = (pooled[i] - mean) * (pooled[i] - mean);
    series.summary.mean = mean;
    series.summary.std = std::sqrt(pairwise_sum(dev) / pooled.size());
    series.summary.min = *std::min_element(pooled.begin(), pooled.end());
    series.summary.max = *std::max_element(pooled.begin(), pooled.end());
  }
  return series;
}

void validate(const ExperimentConfig& config) {
  if (config.runs < 1) throw ConfigError("config error: runs must be >= 1");
  if (config.epochs < 1) throw ConfigError("config error: epochs must be >= 1");
  if (static_cast<long long>(config.runs) * config.epochs > 100000000LL)
    throw ConfigError("config error: runs * epochs exceeds 10^8");
  if (config.burn_in < 0) throw ConfigError("config error: burn_in must be >= 0");
  for (auto [name, v] : {std::pair<const char*, double>{"alpha", config.alpha},
                         {"epsilon", config.epsilon},
                         {"delta", config.delta},
                         {"omega_low", config.omega_low},
                         {"omega_high", config.omega_high},
                         {"noise_std", config.noise_std}}) {
    if (!std::isfinite(v)) throw ConfigError(std::string("config error: ") + name + " is not finite");
  }
  if (config.threads < 1) throw ConfigError("config error: threads must be >= 1");
}

// Runs `body(run_index)` for every run, possibly concurrently. Each run only
// writes its own slots, so results are identical for any thread count.
void for_each_run(const ExperimentConfig& config, const std::function<void(int)>& body) {
  const int runs = config.runs;
  std::mutex progress_mutex;
  int done = 0;
  auto finish_one = [&] {
    if (!config.progress) return;
    std::lock_guard lock(progress_mutex);
    config.progress(++done, runs);
  };

  const int workers = std::min(config.threads, runs);
  if (workers <= 1) {
    for (int r = 0; r < runs; ++r) {
      body(r);
      finish_one();
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= runs) return;
        body(r);
        finish_one();
      }
    });
  }
  for (auto& th : pool) th.join();
}

Quaternion draw_omega(RngStream& rng, double lo, double hi) {
  return {0.0, rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

// Stream index reserved for gain estimation, outside the run index range.
constexpr std::uint64_t kGainStreamIndex = 0xFFFFFFFFFFFFFFFFULL;

}  // namespace

ExperimentConfig observer_defaults() {
  ExperimentConfig config;
  config.kind = ExperimentKind::observer;
  config.omega_low = 0.0;
  config.omega_high = 10.0;
  return config;
}

RngStream derive_run_rng(std::uint64_t master_seed, std::uint64_t run_index) {
  return RngStream(master_seed, run_index);
}

EnsembleSeries run_convergence(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::convergence)
    throw ConfigError("config error: kind must be convergence");
  validate(config);

  const double root_eps = std::sqrt(config.epsilon);
  const double w_lo = std::sqrt(1.0 - root_eps);
  const double w_hi = std::sqrt(1.0 + root_eps);

  MetricMatrix dist(config.runs, config.epochs + 1);
  for_each_run(config, [&](int r) {
    RngStream rng = derive_run_rng(config.seed, static_cast<std::uint64_t>(r));
    Quaternion q{rng.uniform(w_lo, w_hi), 0.0, 0.0, 0.0};
    dist.at(r, 0) = dist_to_s3(q);
    Quaternion omega = config.omega_mode == OmegaMode::per_run
                           ? draw_omega(rng, config.omega_low, config.omega_high)
                           : Quaternion{};
    for (int k = 1; k <= config.epochs; ++k) {
      if (config.omega_mode == OmegaMode::per_epoch) {
        omega = draw_omega(rng, config.omega_low, config.omega_high);
      }
      q = stabilized_step(q, omega, config.alpha);
      dist.at(r, k) = dist_to_s3(q);
    }
  });
  return aggregate(dist, "dist_to_s3", config.burn_in);
}

ObserverResult run_observer(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::observer)
    throw ConfigError("config error: kind must be observer");
  validate(config);
  if (config.noise_std < 0.0) throw ConfigError("config error: noise_std must be >= 0");

  Quaternion gain;
  if (config.gain) {
    gain = *config.gain;
  } else {
    RngStream gain_rng = derive_run_rng(config.seed, kGainStreamIndex);
    gain = default_gain(gain_rng, config.omega_low, config.omega_high, 1000000);
  }

  const int cols = config.epochs + 1;
  MetricMatrix err_w(config.runs, cols), err_wo(config.runs, cols);
  MetricMatrix dist_w(config.runs, cols), dist_wo(config.runs, cols);

  for_each_run(config, [&](int r) {
    RngStream rng = derive_run_rng(config.seed, static_cast<std::uint64_t>(r));
    Quaternion q = random_unit(rng);
    ObserverPair pair{Quaternion::identity(), Quaternion::identity(), gain, config.alpha};
    err_w.at(r, 0) = norm(q - pair.q_w);
    err_wo.at(r, 0) = norm(q - pair.q_wo);
    dist_w.at(r, 0) = dist_to_s3(pair.q_w);
    dist_wo.at(r, 0) = dist_to_s3(pair.q_wo);

    Quaternion omega = config.omega_mode == OmegaMode::per_run
                           ? draw_omega(rng, config.omega_low, config.omega_high)
                           : Quaternion{};
    for (int k = 1; k <= config.epochs; ++k) {
      if (config.omega_mode == OmegaMode::per_epoch) {
        omega = draw_omega(rng, config.omega_low, config.omega_high);
      }
      // The epoch-k measurement feeds the update that advances both observers
      // to epoch k+1, while the truth advances with the same increment.
      const Quaternion q_meas = measure(q, rng, config.noise_std);
      pair = observer_step(pair, q_meas, omega);
      q = raw_step(q, omega);
      err_w.at(r, k) = norm(q - pair.q_w);
      err_wo.at(r, k) = norm(q - pair.q_wo);
      dist_w.at(r, k) = dist_to_s3(pair.q_w);
      dist_wo.at(r, k) = dist_to_s3(pair.q_wo);
    }
  });

  ObserverResult result;
  result.err_w = aggregate(err_w, "state_error_w", config.burn_in);
  result.err_wo = aggregate(err_wo, "state_error_wo", config.burn_in);
  result.dist_w = aggregate(dist_w, "manifold_dist_w", config.burn_in);
  result.dist_wo = aggregate(dist_wo, "manifold_dist_wo", config.burn_in);

  auto table_row = [&](const char* observer, const char* metric, const MetricMatrix& m) {
    ObserverTableRow row;
    row.observer = observer;
    row.metric = metric;
    // Mean/Std pool the final-epoch values; Max/Min pool everything past the
    // burn-in threshold.
    std::vector<double> final_col(m.runs());
    for (int r = 0; r < m.runs(); ++r) final_col[r] = m.at(r, m.cols() - 1);
    row.mean = pairwise_sum(final_col) / m.runs();
    std::vector<double> dev(m.runs());
    for (int r = 0; r < m.runs(); ++r)
      dev[r] = (final_col[r] - row.mean) * (final_col[r] - row.mean);
    row.std = std::sqrt(pairwise_sum(dev) / m.runs());
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m.runs(); ++r) {
      for (int e = config.burn_in + 1; e < m.cols(); ++e) {
        mx = std::max(mx, m.at(r, e));
        mn = std::min(mn, m.at(r, e));
      }
    }
    row.max = mx;
    row.min = mn;
    return row;
  };
  result.table = {table_row("w", "state_error", err_w),
                  table_row("wo", "state_error", err_wo),
                  table_row("w", "manifold_dist", dist_w),
                  table_row("wo", "manifold_dist", dist_wo)};
  return result;
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_series_csv(const EnsembleSeries& series, const std::string& path) {
  auto out = open_for_write(path);
  out << "epoch,mean,std,min,max\n";
  for (const EpochStats& row : series.per_epoch) {
    out << row.epoch << ',' << shortest(row.mean) << ',' << shortest(row.std) << ','
        << shortest(row.min) << ',' << shortest(row.max) << '\n';
  }
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

void write_table_csv(const std::vector<ObserverTableRow>& rows, const std::string& path) {
  auto out = open_for_write(path);
  out << "observer,metric,mean,std,max,min\n";
  for (const ObserverTableRow& row : rows) {
    out << row.observer << ',' << row.metric << ',' << shortest(row.mean) << ','
        << shortest(row.std) << ',' << shortest(row.max) << ',' << shortest(row.min) << '\n';
  }
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

ExperimentConfig parse_config_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError(std::string("config error: invalid JSON: ") + err.what());
  }
  if (!doc.is_object()) throw ConfigError("config error: top level must be an object");
  if (!doc.contains("kind")) throw ConfigError("config error: missing key `kind`");

  const std::string kind = doc["kind"].get<std::string>();
  ExperimentConfig config;
  if (kind == "convergence") {
    config = ExperimentConfig{};
  } else if (kind == "observer") {
    config = observer_defaults();
  } else {
    throw ConfigError("config error: kind must be `convergence` or `observer`, got `" + kind +
                      "`");
  }

  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "kind") {
        continue;
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "runs") {
        config.runs = value.get<int>();
      } else if (key == "epochs") {
        config.epochs = value.get<int>();
      } else if (key == "alpha") {
        config.alpha = value.get<double>();
      } else if (key == "epsilon") {
        config.epsilon = value.get<double>();
      } else if (key == "delta") {
        config.delta = value.get<double>();
      } else if (key == "omega_low") {
        config.omega_low = value.get<double>();
      } else if (key == "omega_high") {
        config.omega_high = value.get<double>();
      } else if (key == "noise_std") {
        config.noise_std = value.get<double>();
      } else if (key == "burn_in") {
        config.burn_in = value.get<int>();
      } else if (key == "omega_mode") {
        const std::string mode = value.get<std::string>();
        if (mode == "per_epoch") {
          config.omega_mode = OmegaMode::per_epoch;
        } else if (mode == "per_run") {
          config.omega_mode = OmegaMode::per_run;
        } else {
          throw ConfigError("config error: omega_mode must be `per_epoch` or `per_run`");
        }
      } else if (key == "gain") {
        if (value.is_string() && value.get<std::string>() == "auto") {
          config.gain = std::nullopt;
        } else if (value.is_array() && value.size() == 4) {
          config.gain = Quaternion{value[0].get<double>(), value[1].get<double>(),
                                   value[2].get<double>(), value[3].get<double>()};
        } else {
          throw ConfigError("config error: gain must be `auto` or a [w,x,y,z] array");
        }
      } else {
        throw ConfigError("config error: unknown key `" + key + "`");
      }
    } catch (const nlohmann::json::exception& err) {
      throw ConfigError("config error: bad value for key `" + key + "`: " + err.what());
    }
  }
  validate(config);
  return config;
}

}  // namespace tstab

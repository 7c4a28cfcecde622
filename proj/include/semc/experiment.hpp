// Experiment harness: the three scenario families (observation-probability
// sweep, side-information SNR sweep, rank-via-subspace-count sweep), each in
// a noiseless and an impulsive-measurement-noise variant, with per-trial and
// aggregated CSV output plus a timing-focused runtime probe.
//
// Records are fully determined by (spec, base seed) regardless of how many
// worker threads execute the trials; per-trial CSVs carry no timing so
// repeated runs are byte-identical.

#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include "semc/completion.hpp"
#include "semc/metrics.hpp"

namespace semc {

enum class SweepVariable { observation_probability, model_snr_b, rank_via_subspaces };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::observation_probability: return "p";
    case SweepVariable::model_snr_b: return "snr_b";
    case SweepVariable::rank_via_subspaces: return "rank_via_s";
  }
  return "unknown";
}

struct MeasurementNoiseSpec {
  bool enabled = false;
  GmmNoise gmm;
  double target_snr_db = 8.0;
};

// Completion budgets for scenario runs. The observation-starved grid points
// are poorly conditioned, so the inner solver gets a generous budget; the
// expression solve leans on the support refit and needs fewer sweeps.
inline CompletionConfig scenario_completion_defaults(Index r) {
  CompletionConfig cfg;
  cfg.r = r;
  cfg.solver.max_iters = 4000;
  cfg.outer_max_iters = 12;
  cfg.expression.max_iters = 600;
  return cfg;
}

struct ScenarioSpec {
  std::string id;
  SweepVariable sweep = SweepVariable::observation_probability;
  std::vector<double> grid;
  Index m = 20;
  Index n = 60;
  Index r = 12;           // rank-via-subspaces derives r = S * d per grid value
  int subspaces = 3;      // S (ignored for the rank sweep)
  int subspace_dim = 4;   // d
  std::vector<int> counts;  // empty: split n as evenly as possible
  double p = 0.8;           // fixed unless swept
  double snr_a_db = 10.0;
  double snr_b_db = 20.0;   // fixed unless swept
  MeasurementNoiseSpec noise;
  int trials = 20;
  std::uint64_t base_seed = 1;
  CompletionConfig completion;
  bool run_proposed = true;
  bool run_baseline = true;

  void validate() const {
    if (id.empty()) throw std::invalid_argument("ScenarioSpec: empty id");
    if (grid.empty()) throw std::invalid_argument("ScenarioSpec: empty grid");
    if (trials < 1) throw std::invalid_argument("ScenarioSpec: trials must be >= 1");
    if (m < 1 || n < 1) throw std::invalid_argument("ScenarioSpec: bad dimensions");
    if (!run_proposed && !run_baseline) {
      throw std::invalid_argument("ScenarioSpec: no method selected");
    }
    for (double v : grid) {
      switch (sweep) {
        case SweepVariable::observation_probability:
          if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("ScenarioSpec: p grid value outside [0,1]");
          }
          break;
        case SweepVariable::model_snr_b:
          if (std::isnan(v)) throw std::invalid_argument("ScenarioSpec: NaN SNR grid value");
          break;
        case SweepVariable::rank_via_subspaces:
          if (v < 1.0 || v != std::floor(v)) {
            throw std::invalid_argument("ScenarioSpec: subspace counts must be integers >= 1");
          }
          break;
      }
    }
    noise.gmm.validate();
  }
};

// N_s schedule: n split across S subspaces. The uneven reference split is
// kept for the 64-point, 6-subspace configuration; otherwise the remainder
// goes to the trailing subspaces.
inline std::vector<int> partition_counts(Index n, int s) {
  if (s < 1 || n < s) throw std::invalid_argument("partition_counts: need n >= S >= 1");
  if (n == 64 && s == 6) return {9, 9, 9, 10, 13, 14};
  std::vector<int> counts(static_cast<size_t>(s), static_cast<int>(n) / s);
  const int rem = static_cast<int>(n) % s;
  for (int i = 0; i < rem; ++i) counts[static_cast<size_t>(s - 1 - i)] += 1;
  return counts;
}

inline ScenarioSpec scenario1_spec() {
  ScenarioSpec spec;
  spec.id = "scenario1";
  spec.sweep = SweepVariable::observation_probability;
  spec.grid = {0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  spec.m = 20;
  spec.n = 60;
  spec.r = 12;
  spec.subspaces = 3;
  spec.subspace_dim = 4;
  spec.counts = {20, 20, 20};
  spec.snr_a_db = 10.0;
  spec.snr_b_db = 20.0;
  spec.trials = 20;
  spec.completion = scenario_completion_defaults(12);
  return spec;
}

inline ScenarioSpec scenario2_spec() {
  ScenarioSpec spec;
  spec.id = "scenario2";
  spec.sweep = SweepVariable::model_snr_b;
  spec.grid = {5, 10, 15, 20, 30, 50, 70, 100};
  spec.m = 20;
  spec.n = 60;
  spec.r = 15;
  spec.subspaces = 3;
  spec.subspace_dim = 5;
  spec.counts = {20, 20, 20};
  spec.p = 0.4;
  spec.snr_a_db = 10.0;
  spec.trials = 20;
  spec.completion = scenario_completion_defaults(15);
  return spec;
}

inline ScenarioSpec scenario3_spec() {
  ScenarioSpec spec;
  spec.id = "scenario3";
  spec.sweep = SweepVariable::rank_via_subspaces;
  spec.grid = {2, 3, 4, 5, 6, 7, 8, 9, 10};
  spec.m = 20;
  spec.n = 64;
  spec.subspace_dim = 2;
  spec.p = 0.3;
  spec.snr_a_db = 5.0;
  spec.snr_b_db = 15.0;
  spec.trials = 50;
  spec.completion = scenario_completion_defaults(4);  // r is re-derived per grid value
  return spec;
}

inline void apply_measurement_noise_defaults(ScenarioSpec& spec) {
  spec.noise.enabled = true;
  spec.noise.gmm = GmmNoise{};  // reference mixture, corruption probability 0.2
  spec.noise.target_snr_db = 8.0;
  spec.completion.expression.eps_rel = 1e-3;
}

inline ScenarioSpec scenario_spec_by_name(const std::string& name) {
  if (name == "scenario1") return scenario1_spec();
  if (name == "scenario2") return scenario2_spec();
  if (name == "scenario3") return scenario3_spec();
  throw std::invalid_argument("unknown scenario: " + name);
}

struct MetricsRecord {
  std::string scenario;
  double sweep_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string method;  // "proposed" | "baseline"
  double nmse = 0.0;
  double rnmse = 0.0;
  int outer_iters = 0;
  double seconds_per_iteration = 0.0;  // runtime probe only; not in metrics CSV
  double max_membership_residual = 0.0;
  std::string termination;
  bool failed = false;
};

struct AggregateRecord {
  std::string scenario;
  double sweep_value = 0.0;
  std::string method;
  int trials_used = 0;
  double nmse_mean = 0.0;
  double nmse_stderr = 0.0;
  double rnmse_mean = 0.0;
  double rnmse_stderr = 0.0;
  double seconds_per_iteration_mean = 0.0;
};

struct ScenarioOutput {
  ScenarioSpec spec;
  std::vector<MetricsRecord> records;     // canonical order: grid, trial, method
  std::vector<AggregateRecord> aggregates;
  bool any_failure = false;
};

namespace detail {

struct TrialData {
  GroundTruth gt;
  Matrix b_prime;
  Matrix a_prime;
  SamplingPattern pattern;
  Matrix observed;
  Index rank;
};

struct TrialParams {
  double p;
  double snr_b;
  int subspaces;
  Index rank;
  std::vector<int> counts;
};

inline TrialParams trial_params(const ScenarioSpec& spec, double value) {
  TrialParams out{spec.p, spec.snr_b_db, spec.subspaces, spec.r, spec.counts};
  switch (spec.sweep) {
    case SweepVariable::observation_probability:
      out.p = value;
      break;
    case SweepVariable::model_snr_b:
      out.snr_b = value;
      break;
    case SweepVariable::rank_via_subspaces:
      out.subspaces = static_cast<int>(value);
      out.rank = static_cast<Index>(out.subspaces) * spec.subspace_dim;
      out.counts.clear();
      break;
  }
  if (out.counts.empty()) out.counts = partition_counts(spec.n, out.subspaces);
  return out;
}

inline TrialData make_trial_data(const ScenarioSpec& spec, const TrialParams& params,
                                 std::uint64_t seed) {
  TrialData data;
  SubspaceModel model{params.subspaces, spec.subspace_dim, static_cast<int>(params.rank),
                      params.counts};
  data.gt = generate_ground_truth(model, spec.m, mix_seed(seed, 1));
  data.b_prime = add_model_noise(data.gt.b, params.snr_b, mix_seed(seed, 2));
  data.a_prime = add_model_noise(data.gt.a, spec.snr_a_db, mix_seed(seed, 3));
  data.pattern = sample_pattern(spec.m, spec.n, params.p, mix_seed(seed, 4));
  data.observed = apply_mask(data.gt.m, data.pattern);
  if (spec.noise.enabled && data.pattern.observed_count() > 0) {
    data.observed = add_measurement_noise(data.observed, data.pattern, spec.noise.gmm,
                                          spec.noise.target_snr_db, mix_seed(seed, 5))
                        .values;
  }
  data.rank = params.rank;
  return data;
}

// Per-iteration wall clock with the warm-up iteration excluded. The proposed
// method's unit of work is one outer alternation; the baseline's is one
// gradient iteration.
inline double seconds_per_iteration(const CompletionResult& res, bool baseline) {
  std::vector<double> times;
  if (baseline) {
    if (!res.inner_traces.empty()) {
      for (const auto& row : res.inner_traces.front().iterations) times.push_back(row.seconds);
    }
  } else {
    for (const auto& row : res.outer_trace) times.push_back(row.seconds);
  }
  if (times.empty()) return 0.0;
  if (times.size() == 1) return times[0];
  double sum = 0.0;
  for (size_t i = 1; i < times.size(); ++i) sum += times[i];
  return sum / static_cast<double>(times.size() - 1);
}

}  // namespace detail

/// Runs every (grid value, trial, method) combination. Per-trial failures
/// are captured in the record stream and never abort the sweep. `threads`
/// <= 0 selects the hardware concurrency.
inline ScenarioOutput run_scenario(const ScenarioSpec& spec, int threads = 0) {
  spec.validate();
  const size_t grid_count = spec.grid.size();
  const size_t lanes = (spec.run_proposed ? 1u : 0u) + (spec.run_baseline ? 1u : 0u);
  const size_t total = grid_count * static_cast<size_t>(spec.trials);

  ScenarioOutput out;
  out.spec = spec;
  out.records.resize(total * lanes);

  auto run_trial = [&](size_t task) {
    const size_t g = task / static_cast<size_t>(spec.trials);
    const int trial = static_cast<int>(task % static_cast<size_t>(spec.trials));
    const double value = spec.grid[g];
    const std::uint64_t seed =
        mix_seed(spec.base_seed, static_cast<std::uint64_t>(g),
                 static_cast<std::uint64_t>(trial), 0xda7a);

    size_t slot = task * lanes;
    auto emit = [&](const std::string& method, const std::function<MetricsRecord()>& body) {
      MetricsRecord rec;
      rec.scenario = spec.id;
      rec.sweep_value = value;
      rec.trial = trial;
      rec.seed = seed;
      rec.method = method;
      try {
        rec = body();
      } catch (const std::exception& e) {
        rec.scenario = spec.id;
        rec.sweep_value = value;
        rec.trial = trial;
        rec.seed = seed;
        rec.method = method;
        rec.failed = true;
        rec.nmse = std::numeric_limits<double>::quiet_NaN();
        rec.rnmse = std::numeric_limits<double>::quiet_NaN();
        rec.termination = std::string("error: ") + e.what();
      }
      out.records[slot++] = std::move(rec);
    };

    detail::TrialParams params = detail::trial_params(spec, value);
    std::optional<detail::TrialData> data;
    std::string data_error;
    try {
      data = detail::make_trial_data(spec, params, seed);
    } catch (const std::exception& e) {
      data_error = e.what();
    }

    auto run_method = [&](bool baseline) {
      return [&, baseline]() -> MetricsRecord {
        if (!data) throw std::runtime_error("data generation failed: " + data_error);
        CompletionConfig cfg = spec.completion;
        cfg.r = data->rank;
        cfg.baseline_mode = baseline;
        cfg.seed = mix_seed(seed, baseline ? 0xbb : 0xaa);
        CompletionResult res =
            complete(data->observed, data->pattern, baseline ? Matrix() : data->b_prime, cfg);
        MetricsRecord rec;
        rec.scenario = spec.id;
        rec.sweep_value = value;
        rec.trial = trial;
        rec.seed = seed;
        rec.method = baseline ? "baseline" : "proposed";
        rec.nmse = nmse(data->gt.m, res.x_hat);
        rec.rnmse = rnmse(data->gt.m, res.x_hat, data->pattern);
        rec.outer_iters = static_cast<int>(res.outer_trace.size());
        rec.seconds_per_iteration = detail::seconds_per_iteration(res, baseline);
        rec.max_membership_residual = res.max_membership_residual;
        rec.termination = res.termination_reason;
        return rec;
      };
    };

    if (spec.run_proposed) emit("proposed", run_method(false));
    if (spec.run_baseline) emit("baseline", run_method(true));
  };

  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(total));
  if (workers <= 1) {
    for (size_t task = 0; task < total; ++task) run_trial(task);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t task = next.fetch_add(1); task < total; task = next.fetch_add(1)) {
          run_trial(task);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& rec : out.records) out.any_failure |= rec.failed;

  // Aggregates per (grid value, method), recomputable from the record stream.
  for (size_t g = 0; g < grid_count; ++g) {
    for (const char* method : {"proposed", "baseline"}) {
      if ((std::string(method) == "proposed" && !spec.run_proposed) ||
          (std::string(method) == "baseline" && !spec.run_baseline)) {
        continue;
      }
      AggregateRecord agg;
      agg.scenario = spec.id;
      agg.sweep_value = spec.grid[g];
      agg.method = method;
      double nsum = 0.0, nsq = 0.0, rsum = 0.0, rsq = 0.0, tsum = 0.0;
      for (const auto& rec : out.records) {
        if (rec.failed || rec.method != method || rec.sweep_value != spec.grid[g]) continue;
        ++agg.trials_used;
        nsum += rec.nmse;
        nsq += rec.nmse * rec.nmse;
        rsum += rec.rnmse;
        rsq += rec.rnmse * rec.rnmse;
        tsum += rec.seconds_per_iteration;
      }
      if (agg.trials_used > 0) {
        const double k = agg.trials_used;
        agg.nmse_mean = nsum / k;
        agg.rnmse_mean = rsum / k;
        agg.seconds_per_iteration_mean = tsum / k;
        if (agg.trials_used > 1) {
          agg.nmse_stderr =
              std::sqrt(std::max(0.0, (nsq / k - agg.nmse_mean * agg.nmse_mean) / (k - 1.0)));
          agg.rnmse_stderr =
              std::sqrt(std::max(0.0, (rsq / k - agg.rnmse_mean * agg.rnmse_mean) / (k - 1.0)));
        }
      }
      out.aggregates.push_back(std::move(agg));
    }
  }
  return out;
}

/// Same sweeps with the timing columns filled; the records also land in the
/// runtime CSVs. Timings are wall clock and inherently non-deterministic.
inline ScenarioOutput runtime_probe(const ScenarioSpec& spec, int threads = 0) {
  return run_scenario(spec, threads);
}

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
  os << "scenario,sweep_value,trial,seed,method,nmse,rnmse,outer_iters,"
        "max_membership_residual,termination\n";
  os.precision(17);
  for (const auto& r : records) {
    std::string termination = r.termination;
    for (char& ch : termination) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    os << r.scenario << ',' << r.sweep_value << ',' << r.trial << ',' << r.seed << ','
       << r.method << ',' << r.nmse << ',' << r.rnmse << ',' << r.outer_iters << ','
       << r.max_membership_residual << ',' << termination << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRecord>& aggs) {
  os << "scenario,sweep_value,method,trials_used,nmse_mean,nmse_stderr,rnmse_mean,"
        "rnmse_stderr\n";
  os.precision(17);
  for (const auto& a : aggs) {
    os << a.scenario << ',' << a.sweep_value << ',' << a.method << ',' << a.trials_used << ','
       << a.nmse_mean << ',' << a.nmse_stderr << ',' << a.rnmse_mean << ',' << a.rnmse_stderr
       << '\n';
  }
}

inline void write_runtime_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
  os << "scenario,sweep_value,trial,method,seconds_per_iteration\n";
  os.precision(17);
  for (const auto& r : records) {
    os << r.scenario << ',' << r.sweep_value << ',' << r.trial << ',' << r.method << ','
       << r.seconds_per_iteration << '\n';
  }
}

/// One timing column per method, averaged per grid value.
inline void write_runtime_aggregate_csv(std::ostream& os,
                                        const std::vector<AggregateRecord>& aggs) {
  os << "scenario,sweep_value,proposed_seconds_per_iteration,baseline_seconds_per_iteration\n";
  os.precision(17);
  std::vector<double> values;
  for (const auto& a : aggs) {
    if (a.method == "proposed") {
      double baseline = 0.0;
      for (const auto& b : aggs) {
        if (b.method == "baseline" && b.sweep_value == a.sweep_value) {
          baseline = b.seconds_per_iteration_mean;
        }
      }
      os << a.scenario << ',' << a.sweep_value << ',' << a.seconds_per_iteration_mean << ','
         << baseline << '\n';
    }
  }
}

// Manifest (de)serialization of a scenario spec, shared by the CLI config
// file and the dataset bundles.

inline Manifest spec_to_manifest(const ScenarioSpec& spec) {
  auto fmt = [](double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  };
  Manifest mf;
  mf.emplace_back("scenario", spec.id);
  mf.emplace_back("sweep", to_string(spec.sweep));
  {
    std::ostringstream ss;
    ss.precision(17);
    for (size_t i = 0; i < spec.grid.size(); ++i) ss << (i ? "," : "") << spec.grid[i];
    mf.emplace_back("grid", ss.str());
  }
  mf.emplace_back("m", std::to_string(spec.m));
  mf.emplace_back("n", std::to_string(spec.n));
  mf.emplace_back("r", std::to_string(spec.r));
  mf.emplace_back("subspaces", std::to_string(spec.subspaces));
  mf.emplace_back("subspace_dim", std::to_string(spec.subspace_dim));
  if (!spec.counts.empty()) {
    std::ostringstream ss;
    for (size_t i = 0; i < spec.counts.size(); ++i) ss << (i ? "," : "") << spec.counts[i];
    mf.emplace_back("counts", ss.str());
  }
  mf.emplace_back("p", fmt(spec.p));
  mf.emplace_back("snr_a_db", fmt(spec.snr_a_db));
  mf.emplace_back("snr_b_db", fmt(spec.snr_b_db));
  mf.emplace_back("noisy", spec.noise.enabled ? "1" : "0");
  mf.emplace_back("measurement_snr_db", fmt(spec.noise.target_snr_db));
  mf.emplace_back("gmm_alpha1", fmt(spec.noise.gmm.alpha1));
  mf.emplace_back("gmm_alpha2", fmt(spec.noise.gmm.alpha2));
  mf.emplace_back("gmm_mu1", fmt(spec.noise.gmm.mu1));
  mf.emplace_back("gmm_mu2", fmt(spec.noise.gmm.mu2));
  mf.emplace_back("gmm_sigma1_sq", fmt(spec.noise.gmm.sigma1_sq));
  mf.emplace_back("gmm_sigma2_sq", fmt(spec.noise.gmm.sigma2_sq));
  mf.emplace_back("gmm_per_entry_probability", fmt(spec.noise.gmm.per_entry_probability));
  mf.emplace_back("trials", std::to_string(spec.trials));
  mf.emplace_back("seed", std::to_string(spec.base_seed));
  return mf;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  return values;
}

inline ScenarioSpec spec_from_manifest(const Manifest& mf) {
  ScenarioSpec spec;
  bool have_scenario = false;
  // First pass: resolve the base scenario so later keys override it.
  for (const auto& [key, value] : mf) {
    if (key == "scenario") {
      spec = scenario_spec_by_name(value);
      have_scenario = true;
    }
  }
  if (!have_scenario) throw std::invalid_argument("config: missing 'scenario' key");
  for (const auto& [key, value] : mf) {
    if (key == "scenario") {
    } else if (key == "sweep") {
      if (value == "p") spec.sweep = SweepVariable::observation_probability;
      else if (value == "snr_b") spec.sweep = SweepVariable::model_snr_b;
      else if (value == "rank_via_s") spec.sweep = SweepVariable::rank_via_subspaces;
      else throw std::invalid_argument("config: unknown sweep '" + value + "'");
    } else if (key == "grid") {
      spec.grid = parse_double_list(value);
    } else if (key == "m") {
      spec.m = std::stol(value);
    } else if (key == "n") {
      spec.n = std::stol(value);
    } else if (key == "r") {
      spec.r = std::stol(value);
      spec.completion.r = spec.r;
    } else if (key == "subspaces") {
      spec.subspaces = std::stoi(value);
    } else if (key == "subspace_dim") {
      spec.subspace_dim = std::stoi(value);
    } else if (key == "counts") {
      spec.counts.clear();
      for (double v : parse_double_list(value)) spec.counts.push_back(static_cast<int>(v));
    } else if (key == "p") {
      spec.p = std::stod(value);
    } else if (key == "snr_a_db") {
      spec.snr_a_db = std::stod(value);
    } else if (key == "snr_b_db") {
      spec.snr_b_db = std::stod(value);
    } else if (key == "noisy") {
      if (value == "1" || value == "true") apply_measurement_noise_defaults(spec);
    } else if (key == "measurement_snr_db") {
      spec.noise.target_snr_db = std::stod(value);
    } else if (key == "gmm_alpha1") {
      spec.noise.gmm.alpha1 = std::stod(value);
    } else if (key == "gmm_alpha2") {
      spec.noise.gmm.alpha2 = std::stod(value);
    } else if (key == "gmm_mu1") {
      spec.noise.gmm.mu1 = std::stod(value);
    } else if (key == "gmm_mu2") {
      spec.noise.gmm.mu2 = std::stod(value);
    } else if (key == "gmm_sigma1_sq") {
      spec.noise.gmm.sigma1_sq = std::stod(value);
    } else if (key == "gmm_sigma2_sq") {
      spec.noise.gmm.sigma2_sq = std::stod(value);
    } else if (key == "gmm_per_entry_probability") {
      spec.noise.gmm.per_entry_probability = std::stod(value);
    } else if (key == "trials") {
      spec.trials = std::stoi(value);
    } else if (key == "seed") {
      spec.base_seed = std::stoull(value);
    } else if (key == "labels") {
      // dataset-bundle manifests carry labels; harmless here
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  return spec;
}

}  // namespace semc

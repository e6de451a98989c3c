#pragma once

// Monte Carlo orchestration of the cooperative sensing pipeline:
// generate -> observe -> discard -> acquire -> recover -> PSD -> detect ->
// cluster-head fusion -> fusion-center decision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "specsense/clustering_fusion.hpp"
#include "specsense/compressive_acquisition.hpp"
#include "specsense/errors.hpp"
#include "specsense/metrics.hpp"
#include "specsense/parallel.hpp"
#include "specsense/recovery_detection.hpp"
#include "specsense/rng.hpp"
#include "specsense/scenario.hpp"
#include "specsense/signal_model.hpp"

namespace specsense {

struct StageTimes {
  double acquire_ms = 0.0;
  double recover_ms = 0.0;
  double detect_ms = 0.0;
  double fuse_ms = 0.0;
  double total_ms = 0.0;
};

struct TrialError {
  std::string stage;
  std::string message;
};

struct TrialRecord {
  std::size_t trial_index = 0;
  Hypothesis hypothesis = Hypothesis::H0_ABSENT;
  std::vector<LocalDecision> su_decisions;  // retained SUs; empty when heads forward measurements
  std::vector<SuId> retained;
  std::vector<LocalDecision> cluster_decisions;  // id = cluster id
  GlobalDecision global;
  bool all_discarded = false;
  // Largest noise-normalized threshold at which this trial's global decision
  // is OCCUPIED; -1 when every SU was discarded.
  double critical_statistic = -1.0;
  StageTimes times;  // zero unless the scenario measures timing
  std::optional<TrialError> error;
};

class TrialFailure : public std::runtime_error {
 public:
  TrialFailure(std::size_t trial_index, const TrialError& err)
      : std::runtime_error("trial " + std::to_string(trial_index) + " failed in " + err.stage + ": " + err.message),
        trial_index_(trial_index),
        error_(err) {}
  std::size_t trial_index() const noexcept { return trial_index_; }
  const TrialError& error() const noexcept { return error_; }

 private:
  std::size_t trial_index_;
  TrialError error_;
};

namespace detail {
inline constexpr std::uint64_t kMatrixStream = 0x6d61747269780000ULL;
inline constexpr std::uint64_t kCalibrationStream = 0x63616c6962000000ULL;
}  // namespace detail

inline Seed trial_seed(Seed base_seed, std::size_t trial_index) { return mix_seed(base_seed, trial_index); }

inline Hypothesis hypothesis_for(HypothesisSchedule schedule, std::size_t trial_index) {
  switch (schedule) {
    case HypothesisSchedule::H1_ONLY: return Hypothesis::H1_PRESENT;
    case HypothesisSchedule::H0_ONLY: return Hypothesis::H0_ABSENT;
    case HypothesisSchedule::ALTERNATE: break;
  }
  return trial_index % 2 == 0 ? Hypothesis::H1_PRESENT : Hypothesis::H0_ABSENT;
}

/// The threshold-independent part of a scenario: sensing matrices with their
/// recovery dictionaries, and the cluster topology. Immutable once built and
/// shared by all concurrent trials.
class Pipeline {
 public:
  explicit Pipeline(Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    topology_ = scenario_.topology();
    stop_.max_sparsity = scenario_.effective_max_sparsity();
    const std::size_t n = scenario_.n_samples;
    const std::size_t m = scenario_.measurement_count();
    const MatrixKind kind = scenario_.bypass_compression ? MatrixKind::IDENTITY : scenario_.matrix_kind;
    const std::size_t count = scenario_.per_su_matrices && !scenario_.bypass_compression ? scenario_.l_total : 1;
    for (std::size_t i = 0; i < count; ++i) {
      const Seed seed = count == 1 ? mix_seed(scenario_.base_seed, detail::kMatrixStream)
                                   : mix_seed(scenario_.base_seed, detail::kMatrixStream, i);
      dictionaries_.push_back(std::make_shared<const FourierDictionary>(build_sensing_matrix(kind, m, n, seed)));
    }
  }

  const Scenario& scenario() const noexcept { return scenario_; }
  const ClusterTopology& topology() const noexcept { return topology_; }
  const StoppingRule& stopping_rule() const noexcept { return stop_; }

  const FourierDictionary& dictionary(SuId su) const {
    return *dictionaries_[dictionaries_.size() == 1 ? 0 : su];
  }

  /// One trial with an explicit seed and ground truth. `threshold` is in
  /// noise-variance units. Module errors are captured in the record.
  TrialRecord execute(std::size_t trial_index, Seed seed, Hypothesis hypothesis, double threshold) const {
    TrialRecord rec;
    rec.trial_index = trial_index;
    rec.hypothesis = hypothesis;
    rec.global.rule = scenario_.fusion_rule;
    const char* stage = "generate";
    try {
      const std::size_t k = scenario_.effective_sparsity();
      const SparseSpectrumSignal signal = generate_pu_signal(scenario_.n_samples, k, mix_seed(seed, 0));
      const double reference = k > 0 ? signal.nominal_power : scenario_.reference_power;

      stage = "observe";
      const std::size_t l = scenario_.l_total;
      std::vector<SuObservation> observations;
      std::vector<Rng> rngs;
      observations.reserve(l);
      rngs.reserve(l);
      for (SuId su = 0; su < l; ++su) {
        Rng rng = make_rng(mix_seed(seed, 1, su));
        const ChannelRealization ch = draw_channel(scenario_.snr_db, scenario_.fading, reference, rng);
        observations.push_back(observe(signal, ch, hypothesis, rng, su));
        rngs.push_back(std::move(rng));
      }
      const double noise_variance = observations.front().channel.noise_variance;

      stage = "discard";
      std::vector<std::pair<SuId, double>> powers;
      powers.reserve(l);
      for (const auto& o : observations) powers.emplace_back(o.su_id, o.measured_power);
      rec.retained = discard_weak(powers, DiscardPolicy{scenario_.discard_delta * noise_variance});

      const bool timing = scenario_.measure_timing;
      const auto t_begin = timing ? Clock::now() : Clock::time_point{};
      auto lap = [&](double& acc, Clock::time_point& mark) {
        if (!timing) return;
        const auto now = Clock::now();
        acc += elapsed_ms(mark, now);
        mark = now;
      };
      auto mark = t_begin;

      const bool forward_measurements = scenario_.head_forwards == HeadForwards::MEASUREMENTS;
      std::vector<double> su_statistic(l, -1.0);
      std::vector<std::vector<double>> su_bins(forward_measurements ? l : 0);
      for (SuId su : rec.retained) {
        stage = "acquire";
        const Measurements meas =
            acquire(dictionary(su).matrix(), observations[su], scenario_.compression_noise_variance, rngs[su]);
        lap(rec.times.acquire_ms, mark);

        stage = "recover";
        const RecoveredSpectrum recovered = recover_sparse(meas.values, dictionary(su), stop_);
        lap(rec.times.recover_ms, mark);

        stage = "detect";
        PsdEstimate psd = estimate_psd(recovered);
        for (auto& b : psd.bins) b /= noise_variance;
        psd.statistic /= noise_variance;
        su_statistic[su] = psd.statistic;
        if (forward_measurements) {
          su_bins[su] = std::move(psd.bins);
        } else {
          rec.su_decisions.push_back(detect(psd, DetectionThreshold{threshold, std::nullopt}, su));
        }
        lap(rec.times.detect_ms, mark);
      }

      stage = "fuse";
      std::vector<char> kept(l, 0);
      for (SuId su : rec.retained) kept[su] = 1;
      std::vector<double> cluster_critical;
      for (const Cluster& cluster : topology_.clusters) {
        std::vector<SuId> members;
        for (SuId su : cluster.members)
          if (kept[su]) members.push_back(su);
        if (members.empty()) continue;

        if (forward_measurements) {
          // The head averages its members' PSDs and detects once.
          PsdEstimate combined;
          combined.bin_count = su_bins[members.front()].size();
          combined.bins.assign(combined.bin_count, 0.0);
          for (SuId su : members)
            for (std::size_t b = 0; b < combined.bin_count; ++b) combined.bins[b] += su_bins[su][b];
          for (auto& b : combined.bins) b /= static_cast<double>(members.size());
          combined.statistic = *std::max_element(combined.bins.begin(), combined.bins.end());
          rec.cluster_decisions.push_back(
              detect(combined, DetectionThreshold{threshold, std::nullopt}, cluster.cluster_id));
          cluster_critical.push_back(combined.statistic);
        } else {
          std::vector<Occupancy> votes;
          std::vector<double> stats;
          for (SuId su : members) {
            votes.push_back(su_statistic[su] >= threshold ? Occupancy::OCCUPIED : Occupancy::FREE);
            stats.push_back(su_statistic[su]);
          }
          const double critical = fused_critical_value(stats, scenario_.fusion_rule);
          rec.cluster_decisions.push_back(
              LocalDecision{cluster.cluster_id, fuse(votes, scenario_.fusion_rule), critical});
          cluster_critical.push_back(critical);
        }
      }
      if (rec.cluster_decisions.empty()) {
        rec.all_discarded = true;
        rec.global.value = Occupancy::FREE;
        rec.critical_statistic = -1.0;
      } else {
        rec.global = fuse_decisions(rec.cluster_decisions, scenario_.fusion_rule);
        rec.critical_statistic = fused_critical_value(cluster_critical, scenario_.fusion_rule);
      }
      lap(rec.times.fuse_ms, mark);
      if (timing) rec.times.total_ms = elapsed_ms(t_begin, Clock::now());
    } catch (const std::exception& e) {
      rec.error = TrialError{stage, e.what()};
    }
    return rec;
  }

 private:
  Scenario scenario_;
  ClusterTopology topology_;
  StoppingRule stop_;
  std::vector<std::shared_ptr<const FourierDictionary>> dictionaries_;
};

/// Calibrates the noise-normalized threshold of a full pipeline: runs H0
/// trials, takes each trial's critical statistic, and applies the quantile rule.
inline DetectionThreshold calibrate_threshold(const Pipeline& pipeline, double target_pfa, std::size_t n_trials,
                                              Seed seed, std::size_t threads = configured_threads()) {
  detail::require(target_pfa > 0.0 && target_pfa < 1.0, "calibrate_threshold: target_pfa must lie in (0, 1)");
  detail::require(n_trials >= 100, "calibrate_threshold: need at least 100 trials");
  std::vector<double> stats(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t i) {
    const TrialRecord rec = pipeline.execute(i, mix_seed(seed, i), Hypothesis::H0_ABSENT, 0.0);
    if (rec.error) throw TrialFailure(i, *rec.error);
    stats[i] = rec.critical_statistic;
  });
  return DetectionThreshold{threshold_from_statistics(std::move(stats), target_pfa),
                            CalibrationRecord{target_pfa, n_trials, seed}};
}

inline Seed calibration_seed(const Scenario& s) { return mix_seed(s.base_seed, detail::kCalibrationStream); }

inline DetectionThreshold calibrate_threshold(const Scenario& scenario, std::size_t threads = configured_threads()) {
  return calibrate_threshold(Pipeline(scenario), scenario.target_pfa, scenario.calibration_trials,
                             calibration_seed(scenario), threads);
}

/// A pipeline bound to its detection threshold.
class Experiment {
 public:
  explicit Experiment(Scenario scenario, std::optional<DetectionThreshold> threshold = std::nullopt,
                      std::size_t threads = configured_threads())
      : pipeline_(std::move(scenario)) {
    const Scenario& s = pipeline_.scenario();
    if (threshold) {
      threshold_ = *threshold;
    } else if (s.threshold) {
      threshold_ = DetectionThreshold::manual(*s.threshold);
    } else {
      threshold_ = calibrate_threshold(pipeline_, s.target_pfa, s.calibration_trials, calibration_seed(s), threads);
    }
  }

  const Scenario& scenario() const noexcept { return pipeline_.scenario(); }
  const Pipeline& pipeline() const noexcept { return pipeline_; }
  const DetectionThreshold& threshold() const noexcept { return threshold_; }

  TrialRecord run_trial(std::size_t trial_index) const {
    return run_trial(trial_index, hypothesis_for(scenario().hypotheses, trial_index));
  }

  TrialRecord run_trial(std::size_t trial_index, Hypothesis hypothesis) const {
    return pipeline_.execute(trial_index, trial_seed(scenario().base_seed, trial_index), hypothesis,
                             threshold_.value);
  }

 private:
  Pipeline pipeline_;
  DetectionThreshold threshold_;
};

/// Calibrates (or takes the manual threshold) and runs one trial.
inline TrialRecord run_trial(const Scenario& scenario, std::size_t trial_index) {
  return Experiment(scenario).run_trial(trial_index);
}

struct PointResult {
  TrialCounts counts;
  StageTimes median_times;
  std::size_t all_discarded = 0;
};

inline StageTimes median_times(const std::vector<TrialRecord>& records) {
  StageTimes out;
  if (records.empty()) return out;
  auto med = [&](auto field) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(r.times.*field);
    return median(std::move(v));
  };
  out.acquire_ms = med(&StageTimes::acquire_ms);
  out.recover_ms = med(&StageTimes::recover_ms);
  out.detect_ms = med(&StageTimes::detect_ms);
  out.fuse_ms = med(&StageTimes::fuse_ms);
  out.total_ms = med(&StageTimes::total_ms);
  return out;
}

/// Runs trials [0, scenario.trials) and tallies them. Any trial error aborts the point.
inline PointResult run_point(const Experiment& exp, std::size_t threads = configured_threads()) {
  const std::size_t n = exp.scenario().trials;
  std::vector<TrialRecord> records(n);
  parallel_for(n, threads, [&](std::size_t i) {
    records[i] = exp.run_trial(i);
    if (records[i].error) throw TrialFailure(i, *records[i].error);
  });
  PointResult out;
  for (const auto& r : records) {
    const bool occupied = r.global.value == Occupancy::OCCUPIED;
    if (r.all_discarded) ++out.all_discarded;
    if (r.hypothesis == Hypothesis::H1_PRESENT) {
      ++out.counts.n_h1_trials;
      ++(occupied ? out.counts.n_detect_given_h1 : out.counts.n_miss_given_h1);
    } else {
      ++out.counts.n_h0_trials;
      if (occupied) ++out.counts.n_alarm_given_h0;
    }
  }
  if (exp.scenario().measure_timing) out.median_times = median_times(records);
  return out;
}

struct SweepGrid {
  std::optional<std::vector<double>> snr_db;
  std::optional<std::vector<std::size_t>> l_total;
  std::optional<std::vector<double>> compression_ratio;
};

struct ResultsRow {
  double snr_db = 0.0;
  std::size_t n_sus = 0;
  std::size_t n_clusters = 0;
  double compression_ratio = 1.0;
  double pd = 0.0;
  double pfa = 0.0;
  double pmd = 0.0;
  double pe_raw = 0.0;
  double pe_avg = 0.0;
  double t_acquire_ms = 0.0;
  double t_recover_ms = 0.0;
  double t_detect_ms = 0.0;
  double t_fuse_ms = 0.0;
  double t_total_ms = 0.0;
  std::size_t n_trials = 0;
  Seed base_seed = 0;

  friend bool operator==(const ResultsRow&, const ResultsRow&) = default;
};

struct ResultsTable {
  std::vector<ResultsRow> rows;
};

inline SweepGrid sweep_grid_from_json(const nlohmann::json& j) {
  SweepGrid g;
  if (!j.is_object()) return g;
  for (const auto& [key, value] : j.items())
    detail::require(key == "snr_db" || key == "l_total" || key == "compression_ratio",
                    "sweep: unknown axis '" + key + "'");
  if (j.contains("snr_db")) g.snr_db = detail::json_get<std::vector<double>>(j, "snr_db");
  if (j.contains("l_total")) g.l_total = detail::json_get<std::vector<std::size_t>>(j, "l_total");
  if (j.contains("compression_ratio"))
    g.compression_ratio = detail::json_get<std::vector<double>>(j, "compression_ratio");
  return g;
}

/// Scenarios for every grid point in emission order: L outermost, then
/// compression ratio, then SNR. Every point is validated before returning.
inline std::vector<Scenario> expand_grid(const Scenario& base, const SweepGrid& grid) {
  auto axis = [](const auto& opt, auto fallback, const char* name) {
    using T = typename std::decay_t<decltype(opt)>::value_type::value_type;
    if (!opt) return std::vector<T>{static_cast<T>(fallback)};
    detail::require(!opt->empty(), std::string("run_sweep: empty ") + name + " axis");
    return *opt;
  };
  const auto snrs = axis(grid.snr_db, base.snr_db, "snr_db");
  const auto ls = axis(grid.l_total, base.l_total, "l_total");
  std::vector<std::optional<double>> ratios;
  if (grid.compression_ratio) {
    detail::require(!grid.compression_ratio->empty(), "run_sweep: empty compression_ratio axis");
    detail::require(!base.bypass_compression, "run_sweep: a compression_ratio axis conflicts with bypass_compression");
    for (double r : *grid.compression_ratio) ratios.emplace_back(r);
  } else {
    ratios.push_back(base.compression_ratio);
  }

  std::vector<Scenario> points;
  for (std::size_t l : ls)
    for (const auto& ratio : ratios)
      for (double snr : snrs) {
        Scenario s = base;
        s.l_total = l;
        s.compression_ratio = ratio;
        s.snr_db = snr;
        s.validate();
        points.push_back(std::move(s));
      }
  return points;
}

namespace detail {
// Everything the H0 statistic depends on. SNR only scales the noise, and the
// statistic is noise-normalized, unless absolute compression noise is present.
inline std::string calibration_key(const Scenario& s) {
  nlohmann::ordered_json j = to_json(s);
  j.erase("trials");
  j.erase("hypotheses");
  j.erase("measure_timing");
  j.erase("fading");
  if (s.compression_noise_variance == 0.0) j.erase("snr_db");
  return j.dump();
}
}  // namespace detail

inline ResultsRow make_row(const Scenario& s, const ClusterTopology& topo, const PointResult& point) {
  const RateEstimates rates = empirical_rates(point.counts);
  ResultsRow row;
  row.snr_db = s.snr_db;
  row.n_sus = s.l_total;
  row.n_clusters = topo.n_clusters();
  row.compression_ratio = s.effective_ratio();
  row.pd = rates.pd;
  row.pfa = rates.pfa;
  row.pmd = rates.pmd;
  row.pe_raw = rates.pe;
  row.pe_avg = rates.pe_avg;
  row.t_acquire_ms = point.median_times.acquire_ms;
  row.t_recover_ms = point.median_times.recover_ms;
  row.t_detect_ms = point.median_times.detect_ms;
  row.t_fuse_ms = point.median_times.fuse_ms;
  row.t_total_ms = point.median_times.total_ms;
  row.n_trials = s.trials;
  row.base_seed = s.base_seed;
  return row;
}

/// Cartesian sweep. Thresholds are calibrated once per distinct calibration
/// key and reused across SNR points.
inline ResultsTable run_sweep(const Scenario& scenario, const SweepGrid& grid,
                              std::size_t threads = configured_threads()) {
  detail::require(scenario.hypotheses == HypothesisSchedule::ALTERNATE,
                  "run_sweep: sweeps need both H1 and H0 trials (hypotheses = alternate)");
  detail::require(scenario.trials >= 2, "run_sweep: need at least two trials per point");
  const std::vector<Scenario> points = expand_grid(scenario, grid);

  std::map<std::string, DetectionThreshold> thresholds;
  ResultsTable table;
  table.rows.reserve(points.size());
  for (const Scenario& s : points) {
    std::optional<DetectionThreshold> threshold;
    if (!s.threshold) {
      const std::string key = detail::calibration_key(s);
      auto it = thresholds.find(key);
      if (it == thresholds.end()) it = thresholds.emplace(key, calibrate_threshold(s, threads)).first;
      threshold = it->second;
    }
    const Experiment exp(s, threshold, threads);
    table.rows.push_back(make_row(s, exp.pipeline().topology(), run_point(exp, threads)));
  }
  return table;
}

}  // namespace specsense

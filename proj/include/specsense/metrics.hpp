#pragma once

// Detection metrics from trial counts, and stage timing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "specsense/errors.hpp"

namespace specsense {

struct TrialCounts {
  std::size_t n_h1_trials = 0;
  std::size_t n_h0_trials = 0;
  std::size_t n_detect_given_h1 = 0;
  std::size_t n_alarm_given_h0 = 0;
  std::size_t n_miss_given_h1 = 0;

  TrialCounts& operator+=(const TrialCounts& o) noexcept {
    n_h1_trials += o.n_h1_trials;
    n_h0_trials += o.n_h0_trials;
    n_detect_given_h1 += o.n_detect_given_h1;
    n_alarm_given_h0 += o.n_alarm_given_h0;
    n_miss_given_h1 += o.n_miss_given_h1;
    return *this;
  }

  friend TrialCounts operator+(TrialCounts a, const TrialCounts& b) noexcept { return a += b; }
  friend bool operator==(const TrialCounts&, const TrialCounts&) = default;

  bool consistent() const noexcept {
    return n_detect_given_h1 + n_miss_given_h1 == n_h1_trials && n_alarm_given_h0 <= n_h0_trials;
  }
};

struct RateEstimates {
  double pd = 0.0;
  double pfa = 0.0;
  double pmd = 0.0;
  double pe = 0.0;      // pfa + pmd, uncapped
  double pe_avg = 0.0;  // (pfa + pmd) / 2
  double pd_halfwidth = 0.0;
  double pfa_halfwidth = 0.0;
  double pmd_halfwidth = 0.0;
};

/// Binomial standard error sqrt(p (1 - p) / n).
inline double binomial_halfwidth(double p, std::size_t n) {
  detail::require(n > 0, "binomial_halfwidth: n must be positive");
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

inline double error_probability(double pfa, double pmd) {
  detail::require(std::isfinite(pfa) && pfa >= 0.0 && pfa <= 1.0, "error_probability: pfa outside [0, 1]");
  detail::require(std::isfinite(pmd) && pmd >= 0.0 && pmd <= 1.0, "error_probability: pmd outside [0, 1]");
  return pfa + pmd;
}

inline RateEstimates empirical_rates(const TrialCounts& counts) {
  detail::require(counts.consistent(), "empirical_rates: inconsistent trial counts");
  detail::require(counts.n_h1_trials >= 1, "empirical_rates: no H1 trials, detection rate undefined");
  detail::require(counts.n_h0_trials >= 1, "empirical_rates: no H0 trials, false-alarm rate undefined");
  const double n1 = static_cast<double>(counts.n_h1_trials);
  const double n0 = static_cast<double>(counts.n_h0_trials);
  RateEstimates r;
  r.pd = static_cast<double>(counts.n_detect_given_h1) / n1;
  r.pmd = static_cast<double>(counts.n_miss_given_h1) / n1;
  r.pfa = static_cast<double>(counts.n_alarm_given_h0) / n0;
  r.pe = error_probability(r.pfa, r.pmd);
  r.pe_avg = 0.5 * r.pe;
  r.pd_halfwidth = binomial_halfwidth(r.pd, counts.n_h1_trials);
  r.pmd_halfwidth = binomial_halfwidth(r.pmd, counts.n_h1_trials);
  r.pfa_halfwidth = binomial_halfwidth(r.pfa, counts.n_h0_trials);
  return r;
}

enum class Stage { ACQUIRE, RECOVER, DETECT, FUSE, TOTAL };

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ACQUIRE: return "acquire";
    case Stage::RECOVER: return "recover";
    case Stage::DETECT: return "detect";
    case Stage::FUSE: return "fuse";
    case Stage::TOTAL: return "total";
  }
  return "unknown";
}

struct StageTiming {
  Stage stage = Stage::TOTAL;
  double wall_time_ms = 0.0;
  std::size_t samples = 0;
};

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start, Clock::time_point stop) {
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

inline double median(std::vector<double> values) {
  detail::require(!values.empty(), "median: empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Median wall time of `repetitions` runs of `work`, after one untimed warm-up run.
inline StageTiming time_stage(Stage stage, const std::function<void()>& work, std::size_t repetitions) {
  detail::require(repetitions >= 1, "time_stage: repetitions must be >= 1");
  work();
  std::vector<double> times;
  times.reserve(repetitions);
  for (std::size_t i = 0; i < repetitions; ++i) {
    const auto start = Clock::now();
    work();
    times.push_back(elapsed_ms(start, Clock::now()));
  }
  return StageTiming{stage, median(std::move(times)), repetitions};
}

}  // namespace specsense

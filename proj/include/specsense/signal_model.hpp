#pragma once

// Primary-user signal generation, sensing channels, and per-SU observations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "specsense/errors.hpp"
#include "specsense/fft.hpp"
#include "specsense/rng.hpp"

namespace specsense {

using SuId = std::size_t;

enum class Hypothesis { H0_ABSENT, H1_PRESENT };

enum class FadingKind { AWGN_ONLY, RAYLEIGH };

inline std::string_view to_string(Hypothesis h) { return h == Hypothesis::H1_PRESENT ? "H1" : "H0"; }

inline std::string_view to_string(FadingKind f) {
  return f == FadingKind::RAYLEIGH ? "rayleigh" : "awgn";
}

inline FadingKind parse_fading_kind(std::string_view s) {
  if (s == "rayleigh" || s == "RAYLEIGH") return FadingKind::RAYLEIGH;
  if (s == "awgn" || s == "AWGN_ONLY" || s == "awgn_only") return FadingKind::AWGN_ONLY;
  throw InvalidArgument("unknown fading kind: " + std::string(s));
}

/// PU signal that is exactly k-sparse in the DFT basis.
///
/// `spectrum` is the full length-N frequency representation and
/// `time_samples == ifft(spectrum)` with the 1/N inverse normalization, so
/// `fft(time_samples)` reproduces the spectrum.
struct SparseSpectrumSignal {
  std::size_t n_samples = 0;
  std::vector<std::size_t> support;  // sorted ascending
  ComplexVector coefficients;        // one per support bin, same order
  ComplexVector spectrum;
  ComplexVector time_samples;
  double nominal_power = 0.0;  // mean |x[n]|^2

  std::size_t sparsity() const noexcept { return support.size(); }
};

struct ChannelRealization {
  Complex gain{1.0, 0.0};
  FadingKind fading_kind = FadingKind::AWGN_ONLY;
  double snr_db = 0.0;
  double noise_variance = 1.0;
};

struct SuObservation {
  SuId su_id = 0;
  ComplexVector samples;
  Hypothesis hypothesis = Hypothesis::H0_ABSENT;
  ChannelRealization channel;
  double measured_power = 0.0;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double mean_power(std::span<const Complex> samples) {
  double acc = 0.0;
  for (const auto& z : samples) acc += std::norm(z);
  return acc / static_cast<double>(samples.size());
}

/// Unit-magnitude, uniform-phase coefficients on a support drawn uniformly
/// without replacement. Deterministic in `seed`.
inline SparseSpectrumSignal generate_pu_signal(std::size_t n_samples, std::size_t sparsity_k, Seed seed) {
  detail::require(n_samples >= 1, "generate_pu_signal: n_samples must be >= 1");
  detail::require(sparsity_k <= n_samples, "generate_pu_signal: sparsity exceeds n_samples");

  Rng rng = make_rng(seed);
  std::vector<std::size_t> bins(n_samples);
  std::iota(bins.begin(), bins.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots hold the chosen support.
  for (std::size_t i = 0; i < sparsity_k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_samples - 1);
    std::swap(bins[i], bins[pick(rng)]);
  }
  std::vector<std::size_t> support(bins.begin(), bins.begin() + static_cast<std::ptrdiff_t>(sparsity_k));
  std::sort(support.begin(), support.end());

  SparseSpectrumSignal sig;
  sig.n_samples = n_samples;
  sig.spectrum.assign(n_samples, Complex{});
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  sig.coefficients.reserve(sparsity_k);
  for (std::size_t bin : support) {
    const Complex c = std::polar(1.0, phase(rng));
    sig.coefficients.push_back(c);
    sig.spectrum[bin] = c;
  }
  sig.support = std::move(support);
  sig.time_samples = ifft(sig.spectrum);
  // Parseval with unit-magnitude bins: sum |x|^2 = k / N.
  const double n = static_cast<double>(n_samples);
  sig.nominal_power = static_cast<double>(sparsity_k) / (n * n);
  return sig;
}

/// Draws the sensing-channel gain and sets the noise floor so that
/// E[|h s|^2] / sigma^2 equals the linear SNR (Rayleigh gains have E|h|^2 = 1).
inline ChannelRealization draw_channel(double snr_db, FadingKind fading_kind, double signal_power, Rng& rng) {
  detail::require(std::isfinite(snr_db), "draw_channel: snr_db must be finite");
  detail::require(std::isfinite(signal_power) && signal_power > 0.0,
                  "draw_channel: signal_power must be positive (use a reference power for empty signals)");
  ChannelRealization ch;
  ch.fading_kind = fading_kind;
  ch.snr_db = snr_db;
  ch.noise_variance = signal_power / db_to_linear(snr_db);
  ch.gain = fading_kind == FadingKind::RAYLEIGH ? complex_gaussian(rng, 1.0) : Complex{1.0, 0.0};
  return ch;
}

/// x = h s + n under H1, x = n under H0. A zero noise variance disables the noise draw.
inline SuObservation observe(const SparseSpectrumSignal& signal, const ChannelRealization& channel,
                             Hypothesis hypothesis, Rng& rng, SuId su_id = 0) {
  detail::require(channel.noise_variance >= 0.0 && std::isfinite(channel.noise_variance),
                  "observe: noise variance must be finite and non-negative");
  SuObservation obs;
  obs.su_id = su_id;
  obs.hypothesis = hypothesis;
  obs.channel = channel;
  obs.samples.assign(signal.n_samples, Complex{});
  if (channel.noise_variance > 0.0) fill_complex_gaussian(rng, channel.noise_variance, obs.samples);
  if (hypothesis == Hypothesis::H1_PRESENT) {
    for (std::size_t n = 0; n < signal.n_samples; ++n) obs.samples[n] += channel.gain * signal.time_samples[n];
  }
  obs.measured_power = obs.samples.empty() ? 0.0 : mean_power(obs.samples);
  return obs;
}

inline double signal_power(std::span<const Complex> samples) {
  detail::require(!samples.empty(), "signal_power: empty observation");
  return mean_power(samples);
}

inline double signal_power(const SuObservation& obs) { return signal_power(obs.samples); }

}  // namespace specsense

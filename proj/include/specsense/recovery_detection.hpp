#pragma once

// Sparse spectrum recovery (orthogonal greedy pursuit over a Fourier
// synthesis dictionary), periodogram PSD, thresholds and local decisions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "specsense/compressive_acquisition.hpp"
#include "specsense/errors.hpp"
#include "specsense/fft.hpp"
#include "specsense/rng.hpp"

namespace specsense {

namespace detail {

// Split (real/imaginary) kernels: contiguous real arrays vectorize where
// interleaved std::complex does not.

// sum conj(a[i]) * b[i]
inline Complex split_dot(const double* ar, const double* ai, const double* br, const double* bi, std::size_t m) {
  double re = 0.0, im = 0.0;
#pragma omp simd reduction(+ : re, im)
  for (std::size_t i = 0; i < m; ++i) {
    re += ar[i] * br[i] + ai[i] * bi[i];
    im += ar[i] * bi[i] - ai[i] * br[i];
  }
  return {re, im};
}

// y -= alpha * x
inline void split_axpy_sub(Complex alpha, const double* xr, const double* xi, double* yr, double* yi,
                           std::size_t m) {
  const double a = alpha.real(), b = alpha.imag();
#pragma omp simd
  for (std::size_t i = 0; i < m; ++i) {
    yr[i] -= a * xr[i] - b * xi[i];
    yi[i] -= a * xi[i] + b * xr[i];
  }
}

inline double split_norm(const double* ar, const double* ai, std::size_t m) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < m; ++i) acc += ar[i] * ar[i] + ai[i] * ai[i];
  return std::sqrt(acc);
}

inline double norm2(std::span<const Complex> a) {
  const auto* p = reinterpret_cast<const double*>(a.data());
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < 2 * a.size(); ++i) acc += p[i] * p[i];
  return std::sqrt(acc);
}

}  // namespace detail

/// Columns d_j = A f_j where f_j[n] = exp(2 pi i j n / N) / N is the inverse-DFT
/// synthesis atom, so that A * ifft(X) = sum_j X[j] d_j.
///
/// Correlations D^H r are computed as fft(A^T r) / N. Materialized matrix
/// kinds also cache D itself (column-major); AIC and identity atoms are
/// synthesized on demand in O(N).
class FourierDictionary {
 public:
  explicit FourierDictionary(SensingMatrix matrix) : matrix_(std::move(matrix)) {
    const std::size_t n = matrix_.cols();
    const std::size_t m = matrix_.rows();
    twiddle_.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      twiddle_[k] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));

    const bool structured = matrix_.kind() == MatrixKind::AIC_PSEUDORANDOM_PM1 ||
                            matrix_.kind() == MatrixKind::IDENTITY;
    if (!structured) {
      // Row i of D is ifft(row i of A).
      ComplexVector dense(m * n);
      ComplexVector row(n), out(n);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < n; ++k) row[k] = matrix_.entry(i, k);
        ifft(row, out);
        for (std::size_t j = 0; j < n; ++j) dense[j * m + i] = out[j];
      }
      dense_ = std::make_shared<const ComplexVector>(std::move(dense));
    }
    norms_.resize(n);
    ComplexVector atom_buf(m);
    for (std::size_t j = 0; j < n; ++j) {
      atom(j, atom_buf);
      norms_[j] = detail::norm2(atom_buf);
    }
  }

  const SensingMatrix& matrix() const noexcept { return matrix_; }
  std::size_t rows() const noexcept { return matrix_.rows(); }
  std::size_t cols() const noexcept { return matrix_.cols(); }
  std::span<const double> atom_norms() const noexcept { return norms_; }

  void atom(std::size_t j, std::span<Complex> out) const {
    const std::size_t n = cols();
    const std::size_t m = rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    if (dense_) {
      std::copy_n(dense_->begin() + static_cast<std::ptrdiff_t>(j * m), m, out.begin());
      return;
    }
    if (matrix_.kind() == MatrixKind::IDENTITY) {
      for (std::size_t i = 0; i < m; ++i) out[i] = twiddle_[(j * i) % n] * inv_n;
      return;
    }
    const auto chips = matrix_.chips();
    std::size_t phase = 0;  // (j * k) mod n, advanced incrementally
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i) {
      Complex acc{};
      const std::size_t end = matrix_.block_begin(i + 1);
      for (; k < end; ++k) {
        acc += chips[k] * twiddle_[phase];
        phase += j;
        if (phase >= n) phase %= n;
      }
      out[i] = acc * inv_n;
    }
  }

  /// out[j] = <d_j, r> = sum_i conj(d_j[i]) r[i]
  void correlate(std::span<const Complex> r, std::span<Complex> out, std::span<Complex> scratch) const {
    matrix_.apply_transpose(r, scratch);
    fft(scratch, out);
    const double inv_n = 1.0 / static_cast<double>(cols());
    for (auto& z : out) z *= inv_n;
  }

 private:
  SensingMatrix matrix_;
  ComplexVector twiddle_;
  std::shared_ptr<const ComplexVector> dense_;
  std::vector<double> norms_;
};

struct StoppingRule {
  std::size_t max_sparsity = 1;
  // Absolute residual bound; when unset, 1e-6 * ||r||.
  std::optional<double> residual_tol;
};

struct RecoveredSpectrum {
  ComplexVector coefficients;  // length N, zero off-support
  std::vector<std::size_t> support;  // selection order
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // ||r|| after each iteration
};

/// Orthogonal greedy pursuit (OMP): pick the atom with the largest normalized
/// correlation with the residual, orthogonalize it against the chosen set
/// (classical Gram-Schmidt with one conditional second pass), and project the
/// residual out. Coefficients come from back-substitution on the R factor.
inline RecoveredSpectrum recover_sparse(std::span<const Complex> measurements, const FourierDictionary& dict,
                                        const StoppingRule& stop) {
  const std::size_t m = dict.rows();
  const std::size_t n = dict.cols();
  detail::require(measurements.size() == m, "recover_sparse: measurement length does not match matrix rows");
  detail::require(stop.max_sparsity <= m, "recover_sparse: max_sparsity exceeds the number of measurements");

  RecoveredSpectrum out;
  out.coefficients.assign(n, Complex{});
  ComplexVector residual(measurements.begin(), measurements.end());
  const double initial_norm = detail::norm2(residual);
  out.residual_norm = initial_norm;
  if (initial_norm == 0.0 || stop.max_sparsity == 0) return out;
  const double tol = stop.residual_tol.value_or(1e-6 * initial_norm);
  if (initial_norm <= tol) return out;

  const auto norms = dict.atom_norms();
  const std::size_t cap = stop.max_sparsity;
  std::vector<char> used(n, 0);
  // Orthonormal basis of the chosen atoms, one row of length m per atom.
  std::vector<double> q_re(cap * m), q_im(cap * m);
  std::vector<double> r_re(m), r_im(m), d_re(m), d_im(m);
  for (std::size_t i = 0; i < m; ++i) {
    r_re[i] = residual[i].real();
    r_im[i] = residual[i].imag();
  }
  std::vector<ComplexVector> r_cols;  // column s of R holds s + 1 entries
  ComplexVector z;  // q_s^H y
  ComplexVector corr(n), scratch(n), d(m), proj;

  while (out.support.size() < cap) {
    dict.correlate(residual, corr, scratch);
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j] || norms[j] <= 0.0) continue;
      const double score = std::norm(corr[j]) / (norms[j] * norms[j]);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best == n) break;

    dict.atom(best, d);
    for (std::size_t i = 0; i < m; ++i) {
      d_re[i] = d[i].real();
      d_im[i] = d[i].imag();
    }
    const std::size_t t = out.support.size();
    const double atom_norm = detail::split_norm(d_re.data(), d_im.data(), m);
    ComplexVector rcol(t + 1, Complex{});
    double prev_norm = atom_norm;
    for (int pass = 0; pass < 2 && t > 0; ++pass) {
      proj.assign(t, Complex{});
      for (std::size_t l = 0; l < t; ++l)
        proj[l] = detail::split_dot(&q_re[l * m], &q_im[l * m], d_re.data(), d_im.data(), m);
      for (std::size_t l = 0; l < t; ++l) {
        rcol[l] += proj[l];
        detail::split_axpy_sub(proj[l], &q_re[l * m], &q_im[l * m], d_re.data(), d_im.data(), m);
      }
      const double now = detail::split_norm(d_re.data(), d_im.data(), m);
      if (now > 0.7 * prev_norm) break;
      prev_norm = now;
    }
    const double rnorm = detail::split_norm(d_re.data(), d_im.data(), m);
    used[best] = 1;
    if (rnorm <= 1e-10 * atom_norm) continue;  // numerically in the span already
    double* qr = &q_re[t * m];
    double* qi = &q_im[t * m];
    for (std::size_t i = 0; i < m; ++i) {
      qr[i] = d_re[i] / rnorm;
      qi[i] = d_im[i] / rnorm;
    }
    rcol.back() = rnorm;
    const Complex zs = detail::split_dot(qr, qi, r_re.data(), r_im.data(), m);
    detail::split_axpy_sub(zs, qr, qi, r_re.data(), r_im.data(), m);
    for (std::size_t i = 0; i < m; ++i) residual[i] = Complex(r_re[i], r_im[i]);

    r_cols.push_back(std::move(rcol));
    z.push_back(zs);
    out.support.push_back(best);
    out.residual_norm = detail::split_norm(r_re.data(), r_im.data(), m);
    out.residual_history.push_back(out.residual_norm);
    if (out.residual_norm <= tol) break;
  }
  out.iterations = out.support.size();

  // Back-substitution R x = z.
  const std::size_t s = out.support.size();
  ComplexVector x(s);
  for (std::size_t row = s; row-- > 0;) {
    Complex acc = z[row];
    for (std::size_t col = row + 1; col < s; ++col) acc -= r_cols[col][row] * x[col];
    x[row] = acc / r_cols[row][row];
  }
  for (std::size_t l = 0; l < s; ++l) out.coefficients[out.support[l]] = x[l];
  return out;
}

inline RecoveredSpectrum recover_sparse(const Measurements& meas, const FourierDictionary& dict,
                                        const StoppingRule& stop) {
  return recover_sparse(meas.values, dict, stop);
}

/// Convenience overload; builds the dictionary for a single call.
inline RecoveredSpectrum recover_sparse(const Measurements& meas, const SensingMatrix& matrix,
                                        const StoppingRule& stop) {
  detail::require(meas.values.size() == matrix.rows(), "recover_sparse: measurement length does not match matrix rows");
  return recover_sparse(meas.values, FourierDictionary(matrix), stop);
}

struct PsdEstimate {
  std::vector<double> bins;
  double statistic = 0.0;  // max over bins
  std::size_t bin_count = 0;
};

/// Periodogram |fft(x)[k]|^2 / N. The mean over bins equals the mean power of x.
inline PsdEstimate estimate_psd(std::span<const Complex> samples) {
  detail::require(!samples.empty(), "estimate_psd: empty input");
  const ComplexVector spectrum = fft(samples);
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  PsdEstimate psd;
  psd.bin_count = samples.size();
  psd.bins.resize(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) psd.bins[k] = std::norm(spectrum[k]) * inv_n;
  psd.statistic = *std::max_element(psd.bins.begin(), psd.bins.end());
  return psd;
}

/// PSD of the time-domain signal synthesized from the recovered spectrum.
inline PsdEstimate estimate_psd(const RecoveredSpectrum& recovered) {
  detail::require(!recovered.coefficients.empty(), "estimate_psd: empty recovered spectrum");
  return estimate_psd(ifft(recovered.coefficients));
}

struct CalibrationRecord {
  double target_pfa = 0.0;
  std::size_t n_trials = 0;
  Seed seed = 0;
};

struct DetectionThreshold {
  double value = 0.0;
  std::optional<CalibrationRecord> calibration;  // empty for manual thresholds

  static DetectionThreshold manual(double value) {
    detail::require(std::isfinite(value) && value >= 0.0, "threshold must be finite and non-negative");
    return DetectionThreshold{value, std::nullopt};
  }
};

/// Smallest calibration statistic t with #{s >= t} / n <= target_pfa. When no
/// sample qualifies (target below 1/n), the next double above the maximum is
/// returned so that no calibration sample alarms.
inline double threshold_from_statistics(std::vector<double> statistics, double target_pfa) {
  detail::require(target_pfa > 0.0 && target_pfa < 1.0, "calibrate_threshold: target_pfa must lie in (0, 1)");
  detail::require(!statistics.empty(), "calibrate_threshold: no calibration statistics");
  for (double s : statistics) detail::require(std::isfinite(s), "calibrate_threshold: non-finite statistic");
  std::sort(statistics.begin(), statistics.end());
  if (statistics.front() == statistics.back())
    throw DegenerateCalibration("calibrate_threshold: all calibration statistics are equal");
  const double n = static_cast<double>(statistics.size());
  for (std::size_t i = 0; i < statistics.size(); ++i) {
    if (i > 0 && statistics[i] == statistics[i - 1]) continue;
    // Sorted, so every element from i onward is >= statistics[i].
    const double frac = static_cast<double>(statistics.size() - i) / n;
    if (frac <= target_pfa) return statistics[i];
  }
  return std::nextafter(statistics.back(), std::numeric_limits<double>::infinity());
}

/// Runs `n_trials` H0 statistic evaluations with seeds mix_seed(seed, i) and
/// places the threshold by the quantile rule above.
inline DetectionThreshold calibrate_threshold(double target_pfa, std::size_t n_trials, Seed seed,
                                              const std::function<double(Seed)>& h0_statistic) {
  detail::require(target_pfa > 0.0 && target_pfa < 1.0, "calibrate_threshold: target_pfa must lie in (0, 1)");
  detail::require(n_trials >= 100, "calibrate_threshold: need at least 100 trials");
  std::vector<double> stats(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) stats[i] = h0_statistic(mix_seed(seed, i));
  return DetectionThreshold{threshold_from_statistics(std::move(stats), target_pfa),
                            CalibrationRecord{target_pfa, n_trials, seed}};
}

enum class Occupancy { FREE, OCCUPIED };

inline std::string_view to_string(Occupancy o) { return o == Occupancy::OCCUPIED ? "occupied" : "free"; }

struct LocalDecision {
  std::size_t id = 0;
  Occupancy value = Occupancy::FREE;
  double statistic = 0.0;
};

inline LocalDecision detect(const PsdEstimate& psd, const DetectionThreshold& threshold, std::size_t id = 0) {
  return LocalDecision{id, psd.statistic >= threshold.value ? Occupancy::OCCUPIED : Occupancy::FREE, psd.statistic};
}

}  // namespace specsense

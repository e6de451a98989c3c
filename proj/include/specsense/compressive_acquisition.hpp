#pragma once

// Sensing matrices and compressed measurements r = A y + e.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specsense/errors.hpp"
#include "specsense/fft.hpp"
#include "specsense/rng.hpp"
#include "specsense/signal_model.hpp"

namespace specsense {

enum class MatrixKind {
  AIC_PSEUDORANDOM_PM1,  // chip by a +-1 sequence, integrate over M consecutive blocks
  GAUSSIAN,              // iid N(0, 1/M)
  TOEPLITZ_PM1,          // +-1, constant along diagonals
  CIRCULANT_PM1,         // +-1, row i+1 is row i cyclically shifted by one
  IDENTITY,              // first M rows of I_N; the uncompressed baseline when M == N
  EXPLICIT,              // caller-supplied entries
};

inline std::string_view to_string(MatrixKind k) {
  switch (k) {
    case MatrixKind::AIC_PSEUDORANDOM_PM1: return "aic";
    case MatrixKind::GAUSSIAN: return "gaussian";
    case MatrixKind::TOEPLITZ_PM1: return "toeplitz";
    case MatrixKind::CIRCULANT_PM1: return "circulant";
    case MatrixKind::IDENTITY: return "identity";
    case MatrixKind::EXPLICIT: return "explicit";
  }
  return "unknown";
}

inline MatrixKind parse_matrix_kind(std::string_view s) {
  if (s == "aic" || s == "AIC_PSEUDORANDOM_PM1") return MatrixKind::AIC_PSEUDORANDOM_PM1;
  if (s == "gaussian" || s == "GAUSSIAN") return MatrixKind::GAUSSIAN;
  if (s == "toeplitz" || s == "TOEPLITZ_PM1") return MatrixKind::TOEPLITZ_PM1;
  if (s == "circulant" || s == "CIRCULANT_PM1") return MatrixKind::CIRCULANT_PM1;
  if (s == "identity" || s == "IDENTITY") return MatrixKind::IDENTITY;
  throw InvalidArgument("unknown sensing matrix kind: " + std::string(s));
}

/// Real M x N sensing matrix. Immutable and cheap to copy; the entries are
/// shared between copies.
///
/// AIC matrices are held in factored form (chip sequence plus block
/// boundaries) and applied in O(N); the other kinds are materialized.
class SensingMatrix {
 public:
  SensingMatrix() = default;

  MatrixKind kind() const noexcept { return kind_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Seed seed() const noexcept { return seed_; }

  std::string id() const {
    return std::string(to_string(kind_)) + ":" + std::to_string(rows_) + "x" + std::to_string(cols_) + ":" +
           std::to_string(seed_);
  }

  double entry(std::size_t i, std::size_t n) const {
    switch (kind_) {
      case MatrixKind::AIC_PSEUDORANDOM_PM1: return block_of(n) == i ? chips_[n] : 0.0;
      case MatrixKind::IDENTITY: return i == n ? 1.0 : 0.0;
      default: return (*dense_)[i * cols_ + n];
    }
  }

  /// Row i of an AIC matrix spans [block_begin(i), block_begin(i + 1)).
  std::size_t block_begin(std::size_t i) const noexcept { return i * cols_ / rows_; }

  std::size_t block_of(std::size_t n) const noexcept {
    // Largest i with floor(i N / M) <= n.
    std::size_t i = ((n + 1) * rows_ - 1) / cols_;
    while (i > 0 && block_begin(i) > n) --i;
    while (i + 1 < rows_ && block_begin(i + 1) <= n) ++i;
    return i;
  }

  std::span<const double> chips() const noexcept { return chips_; }

  /// out = A x
  void apply(std::span<const Complex> x, std::span<Complex> out) const {
    detail::require(x.size() == cols_ && out.size() == rows_, "SensingMatrix::apply: dimension mismatch");
    switch (kind_) {
      case MatrixKind::AIC_PSEUDORANDOM_PM1:
        for (std::size_t i = 0; i < rows_; ++i) {
          Complex acc{};
          const std::size_t end = block_begin(i + 1);
          for (std::size_t n = block_begin(i); n < end; ++n) acc += chips_[n] * x[n];
          out[i] = acc;
        }
        return;
      case MatrixKind::IDENTITY:
        for (std::size_t i = 0; i < rows_; ++i) out[i] = x[i];
        return;
      default: {
        const auto& a = *dense_;
        for (std::size_t i = 0; i < rows_; ++i) {
          double re = 0.0, im = 0.0;
          const double* row = a.data() + i * cols_;
          for (std::size_t n = 0; n < cols_; ++n) {
            re += row[n] * x[n].real();
            im += row[n] * x[n].imag();
          }
          out[i] = {re, im};
        }
        return;
      }
    }
  }

  ComplexVector apply(std::span<const Complex> x) const {
    ComplexVector out(rows_);
    apply(x, out);
    return out;
  }

  /// out = A^T r
  void apply_transpose(std::span<const Complex> r, std::span<Complex> out) const {
    detail::require(r.size() == rows_ && out.size() == cols_,
                    "SensingMatrix::apply_transpose: dimension mismatch");
    switch (kind_) {
      case MatrixKind::AIC_PSEUDORANDOM_PM1:
        for (std::size_t i = 0; i < rows_; ++i) {
          const std::size_t end = block_begin(i + 1);
          for (std::size_t n = block_begin(i); n < end; ++n) out[n] = chips_[n] * r[i];
        }
        return;
      case MatrixKind::IDENTITY:
        for (std::size_t n = 0; n < cols_; ++n) out[n] = n < rows_ ? r[n] : Complex{};
        return;
      default: {
        const auto& a = *dense_;
        for (auto& z : out) z = Complex{};
        for (std::size_t i = 0; i < rows_; ++i) {
          const double* row = a.data() + i * cols_;
          for (std::size_t n = 0; n < cols_; ++n) out[n] += row[n] * r[i];
        }
        return;
      }
    }
  }

  /// Row-major copy of all entries.
  std::vector<double> to_dense() const {
    std::vector<double> out(rows_ * cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t n = 0; n < cols_; ++n) out[i * cols_ + n] = entry(i, n);
    return out;
  }

  static SensingMatrix from_entries(std::size_t rows, std::size_t cols, std::vector<double> entries) {
    detail::require(rows >= 1 && rows <= cols, "SensingMatrix: require 1 <= rows <= cols");
    detail::require(entries.size() == rows * cols, "SensingMatrix: entry count does not match dimensions");
    SensingMatrix m(MatrixKind::EXPLICIT, rows, cols, 0);
    m.dense_ = std::make_shared<const std::vector<double>>(std::move(entries));
    return m;
  }

  friend SensingMatrix build_sensing_matrix(MatrixKind kind, std::size_t m, std::size_t n, Seed seed);

 private:
  SensingMatrix(MatrixKind kind, std::size_t rows, std::size_t cols, Seed seed)
      : kind_(kind), rows_(rows), cols_(cols), seed_(seed) {}

  MatrixKind kind_ = MatrixKind::IDENTITY;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Seed seed_ = 0;
  std::vector<double> chips_;
  std::shared_ptr<const std::vector<double>> dense_;
};

inline SensingMatrix build_sensing_matrix(MatrixKind kind, std::size_t m, std::size_t n, Seed seed) {
  detail::require(m >= 1, "build_sensing_matrix: m must be >= 1");
  detail::require(m <= n, "build_sensing_matrix: m must not exceed n");
  detail::require(kind != MatrixKind::EXPLICIT, "build_sensing_matrix: use SensingMatrix::from_entries");

  SensingMatrix mat(kind, m, n, seed);
  Rng rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(kind)));
  std::bernoulli_distribution coin(0.5);
  auto pm1 = [&] { return coin(rng) ? 1.0 : -1.0; };

  switch (kind) {
    case MatrixKind::AIC_PSEUDORANDOM_PM1:
      mat.chips_.resize(n);
      for (auto& c : mat.chips_) c = pm1();
      break;
    case MatrixKind::IDENTITY:
      break;
    case MatrixKind::GAUSSIAN: {
      std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
      std::vector<double> a(m * n);
      for (auto& v : a) v = normal(rng);
      mat.dense_ = std::make_shared<const std::vector<double>>(std::move(a));
      break;
    }
    case MatrixKind::TOEPLITZ_PM1: {
      // a[i][j] = t[j - i + m - 1]
      std::vector<double> t(m + n - 1);
      for (auto& v : t) v = pm1();
      std::vector<double> a(m * n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = t[j + m - 1 - i];
      mat.dense_ = std::make_shared<const std::vector<double>>(std::move(a));
      break;
    }
    case MatrixKind::CIRCULANT_PM1: {
      std::vector<double> b(n);
      for (auto& v : b) v = pm1();
      std::vector<double> a(m * n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = b[(j + n - i % n) % n];
      mat.dense_ = std::make_shared<const std::vector<double>>(std::move(a));
      break;
    }
    case MatrixKind::EXPLICIT:
      break;
  }
  return mat;
}

inline double compression_ratio_of(std::size_t m, std::size_t n) {
  detail::require(n > 0, "compression_ratio_of: n must be positive");
  detail::require(m >= 1 && m <= n, "compression_ratio_of: require 1 <= m <= n");
  return static_cast<double>(m) / static_cast<double>(n);
}

/// Number of measurements for a requested ratio, rounded to nearest and kept in [1, n].
inline std::size_t measurements_for_ratio(double ratio, std::size_t n) {
  detail::require(ratio > 0.0 && ratio <= 1.0, "compression ratio must lie in (0, 1]");
  const auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(m, 1, n);
}

struct Measurements {
  SuId su_id = 0;
  ComplexVector values;
  std::string matrix_ref;
  double compression_ratio = 1.0;
  double compression_noise_variance = 0.0;
};

/// r = A y + e with e ~ CN(0, compression_noise_variance); zero variance disables e.
inline Measurements acquire(const SensingMatrix& matrix, std::span<const Complex> samples,
                            double compression_noise_variance, Rng& rng, SuId su_id = 0) {
  detail::require(matrix.cols() == samples.size(), "acquire: matrix columns do not match observation length");
  detail::require(compression_noise_variance >= 0.0 && std::isfinite(compression_noise_variance),
                  "acquire: compression noise variance must be finite and non-negative");
  Measurements meas;
  meas.su_id = su_id;
  meas.values.resize(matrix.rows());
  matrix.apply(samples, meas.values);
  if (compression_noise_variance > 0.0) {
    std::normal_distribution<double> normal(0.0, std::sqrt(compression_noise_variance / 2.0));
    for (auto& v : meas.values) {
      const double re = normal(rng);
      const double im = normal(rng);
      v += Complex{re, im};
    }
  }
  meas.matrix_ref = matrix.id();
  meas.compression_ratio = compression_ratio_of(matrix.rows(), matrix.cols());
  meas.compression_noise_variance = compression_noise_variance;
  return meas;
}

inline Measurements acquire(const SensingMatrix& matrix, const SuObservation& obs,
                            double compression_noise_variance, Rng& rng) {
  return acquire(matrix, obs.samples, compression_noise_variance, rng, obs.su_id);
}

}  // namespace specsense

#pragma once

// Thin FFTW3 wrapper. Plans are created once per (length, direction) with
// FFTW_ESTIMATE so that results are bit-reproducible across runs, and are
// executed through the new-array interface, which is safe from any thread.
// Data is staged through per-thread SIMD-aligned buffers: every execution then
// sees the alignment the plan was made for, whatever the caller's storage.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <new>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "specsense/errors.hpp"

namespace specsense {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

namespace detail {

class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    const std::lock_guard lock(mutex_);
    const auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (plan == nullptr) throw NumericalFailure("fft: FFTW could not create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

struct AlignedBuffers {
  std::size_t n = 0;
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;

  AlignedBuffers() = default;
  AlignedBuffers(const AlignedBuffers&) = delete;
  AlignedBuffers& operator=(const AlignedBuffers&) = delete;
  ~AlignedBuffers() { release(); }

  void reserve(std::size_t size) {
    if (size <= n) return;
    release();
    in = fftw_alloc_complex(size);
    out = fftw_alloc_complex(size);
    if (in == nullptr || out == nullptr) throw std::bad_alloc();
    n = size;
  }

  void release() {
    fftw_free(in);
    fftw_free(out);
    in = out = nullptr;
    n = 0;
  }
};

inline void execute(std::span<const Complex> in, std::span<Complex> out, int sign) {
  require(in.size() == out.size(), "fft: input and output lengths differ");
  if (in.empty()) return;
  fftw_plan plan = FftPlanCache::instance().get(in.size(), sign);
  thread_local AlignedBuffers staging;
  staging.reserve(in.size());
  std::copy(in.begin(), in.end(), reinterpret_cast<Complex*>(staging.in));
  fftw_execute_dft(plan, staging.in, staging.out);
  const auto* result = reinterpret_cast<const Complex*>(staging.out);
  std::copy(result, result + out.size(), out.begin());
}

}  // namespace detail

/// Forward DFT: X[k] = sum_n x[n] exp(-2 pi i k n / N). Unnormalized.
inline void fft(std::span<const Complex> in, std::span<Complex> out) {
  detail::execute(in, out, FFTW_FORWARD);
}

inline ComplexVector fft(std::span<const Complex> in) {
  ComplexVector out(in.size());
  fft(in, out);
  return out;
}

/// Inverse DFT: x[n] = (1/N) sum_k X[k] exp(+2 pi i k n / N).
inline void ifft(std::span<const Complex> in, std::span<Complex> out) {
  detail::execute(in, out, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(in.size());
  for (auto& z : out) z *= scale;
}

inline ComplexVector ifft(std::span<const Complex> in) {
  ComplexVector out(in.size());
  ifft(in, out);
  return out;
}

}  // namespace specsense

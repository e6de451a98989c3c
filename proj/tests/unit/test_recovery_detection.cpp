#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "specsense/recovery_detection.hpp"
#include "specsense/signal_model.hpp"
#include "support/dense_oracle.hpp"

using namespace specsense;
using namespace specsense::oracle;

namespace {

Eigen::MatrixXcd dictionary_matrix(const FourierDictionary& dict) {
  Eigen::MatrixXcd d(dict.rows(), dict.cols());
  ComplexVector col(dict.rows());
  for (std::size_t j = 0; j < dict.cols(); ++j) {
    dict.atom(j, col);
    for (std::size_t i = 0; i < dict.rows(); ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return d;
}

ComplexVector sparse_measurements(const FourierDictionary& dict, const std::vector<std::size_t>& support,
                                  const ComplexVector& coef) {
  ComplexVector spectrum(dict.cols());
  for (std::size_t i = 0; i < support.size(); ++i) spectrum[support[i]] = coef[i];
  return dict.matrix().apply(ifft(spectrum));
}

}  // namespace

TEST(FourierDictionary, AtomsMatchExplicitProduct) {
  for (MatrixKind kind : {MatrixKind::AIC_PSEUDORANDOM_PM1, MatrixKind::GAUSSIAN, MatrixKind::TOEPLITZ_PM1,
                          MatrixKind::CIRCULANT_PM1, MatrixKind::IDENTITY}) {
    const auto a = build_sensing_matrix(kind, 7, 20, 3);
    const FourierDictionary dict(a);
    const Eigen::MatrixXcd fast = dictionary_matrix(dict);
    const Eigen::MatrixXcd slow = explicit_dictionary(a);
    EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-12) << to_string(kind);
    for (std::size_t j = 0; j < 20; ++j)
      EXPECT_NEAR(dict.atom_norms()[j], slow.col(static_cast<Eigen::Index>(j)).norm(), 1e-12);

    // correlate() is D^H r
    Rng rng = make_rng(4);
    ComplexVector r(7), corr(20), scratch(20);
    fill_complex_gaussian(rng, 1.0, r);
    dict.correlate(r, corr, scratch);
    Eigen::Map<const Eigen::VectorXcd> rv(r.data(), 7);
    const Eigen::VectorXcd expect = slow.adjoint() * rv;
    for (Eigen::Index j = 0; j < 20; ++j) EXPECT_LT(std::abs(corr[static_cast<std::size_t>(j)] - expect(j)), 1e-12);
  }
}

TEST(RecoverSparse, ZeroMeasurements) {
  const FourierDictionary dict(build_sensing_matrix(MatrixKind::GAUSSIAN, 8, 16, 1));
  const auto rec = recover_sparse(ComplexVector(8), dict, StoppingRule{3, std::nullopt});
  EXPECT_TRUE(rec.support.empty());
  EXPECT_EQ(rec.iterations, 0u);
  for (const auto& c : rec.coefficients) EXPECT_EQ(c, Complex{});
  ASSERT_EQ(rec.coefficients.size(), 16u);
}

TEST(RecoverSparse, Errors) {
  const auto a = build_sensing_matrix(MatrixKind::GAUSSIAN, 8, 16, 1);
  const FourierDictionary dict(a);
  EXPECT_THROW(recover_sparse(ComplexVector(7), dict, StoppingRule{1, std::nullopt}), InvalidArgument);
  EXPECT_THROW(recover_sparse(ComplexVector(8), dict, StoppingRule{9, std::nullopt}), InvalidArgument);
}

// Brute force over all N single-bin supports with least squares.
TEST(RecoverSparse, OneSparseExact) {
  const auto a = build_sensing_matrix(MatrixKind::GAUSSIAN, 16, 64, 11);
  const FourierDictionary dict(a);
  const Eigen::MatrixXcd d = explicit_dictionary(a);
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t bin = gen() % 64;
    const Complex amp = std::polar(0.5 + static_cast<double>(gen() % 100) / 50.0, static_cast<double>(gen() % 628) / 100.0);
    const auto y = sparse_measurements(dict, {bin}, {amp});
    Eigen::Map<const Eigen::VectorXcd> yv(y.data(), 16);

    Eigen::Index best = -1;
    double best_res = INFINITY;
    for (Eigen::Index j = 0; j < 64; ++j) {
      const double r = ls_residual(d, {j}, yv);
      if (r < best_res) best_res = r, best = j;
    }
    ASSERT_EQ(static_cast<std::size_t>(best), bin);

    const auto rec = recover_sparse(y, dict, StoppingRule{1, std::nullopt});
    ASSERT_EQ(rec.support.size(), 1u);
    EXPECT_EQ(rec.support[0], bin);
    EXPECT_LT(std::abs(rec.coefficients[bin] - amp), 1e-6);
  }
}

// All noiseless instances with N <= 12, k <= 2: every support of size k at
// every N, for several matrix kinds; greedy must reach the l0 optimum.
// Noiseless k <= 2 instances at M = ceil(2N/3) (N = 12 gives M = 8), every
// support, compared with exhaustive l0 search over supports of size <= k.
struct L0Comparison {
  std::size_t instances = 0;
  std::size_t mismatches = 0;
  bool never_below_oracle = true;
};

L0Comparison compare_with_l0(std::size_t k) {
  L0Comparison out;
  std::mt19937_64 gen(12);
  for (std::size_t n = 4; n <= 12; ++n) {
    const std::size_t m = (2 * n + 2) / 3;
    const auto a = build_sensing_matrix(MatrixKind::GAUSSIAN, m, n, 100 + n);
    const FourierDictionary dict(a);
    const Eigen::MatrixXcd d = explicit_dictionary(a);
    for (std::size_t s0 = 0; s0 < n; ++s0)
      for (std::size_t s1 = s0 + 1; s1 <= (k == 2 ? n - 1 : s0 + 1); ++s1) {
        std::vector<std::size_t> support{s0};
        if (k == 2) support.push_back(s1);
        Rng rng = make_rng(gen());
        ComplexVector coef(k);
        for (auto& c : coef) c = std::polar(1.0, std::uniform_real_distribution<double>(0, 6.28)(rng));
        const auto y = sparse_measurements(dict, support, coef);
        Eigen::Map<const Eigen::VectorXcd> yv(y.data(), static_cast<Eigen::Index>(m));
        const double oracle = l0_best_residual(d, yv, k);
        const auto rec = recover_sparse(y, dict, StoppingRule{k, 0.0});
        out.mismatches += std::abs(rec.residual_norm - oracle) < 1e-8 ? 0 : 1;
        out.never_below_oracle = out.never_below_oracle && rec.residual_norm >= oracle - 1e-10;
        ++out.instances;
      }
  }
  return out;
}

TEST(RecoverSparse, OneSparseMatchesExhaustiveL0Search) {
  const auto r = compare_with_l0(1);
  EXPECT_EQ(r.instances, 72u);
  EXPECT_EQ(r.mismatches, 0u);
}

TEST(RecoverSparse, NeverBeatsExhaustiveL0Search) {
  EXPECT_TRUE(compare_with_l0(1).never_below_oracle);
  EXPECT_TRUE(compare_with_l0(2).never_below_oracle);
}

TEST(RecoverSparse, TwoSparseMatchesExhaustiveL0Search) {
  const auto r = compare_with_l0(2);
  EXPECT_EQ(r.instances, 282u);
  EXPECT_EQ(r.mismatches, 0u) << r.mismatches << " of " << r.instances
                              << " two-sparse instances end above the l0 optimum";
}

TEST(RecoverSparse, ExactSupportRecoveryAtFourKLogN) {
  const std::size_t n = 64;
  for (std::size_t k : {1u, 2u, 4u}) {
    // 4k ln N exceeds N at k = 4; a sensing matrix cannot have more rows than columns.
    const auto m = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(4.0 * static_cast<double>(k) * std::log(64.0))));
    int exact = 0;
    for (Seed s = 0; s < 500; ++s) {
      const FourierDictionary dict(build_sensing_matrix(MatrixKind::GAUSSIAN, m, n, mix_seed(s, 1)));
      const auto sig = generate_pu_signal(n, k, mix_seed(s, 2));
      const auto y = dict.matrix().apply(sig.time_samples);
      const auto rec = recover_sparse(y, dict, StoppingRule{k, std::nullopt});
      auto got = rec.support;
      std::sort(got.begin(), got.end());
      exact += got == sig.support ? 1 : 0;
    }
    EXPECT_GE(exact, 495) << "k=" << k;
  }
}

TEST(RecoverSparse, Invariants) {
  const auto a = build_sensing_matrix(MatrixKind::AIC_PSEUDORANDOM_PM1, 60, 120, 2);
  const FourierDictionary dict(a);
  for (Seed s = 0; s < 30; ++s) {
    Rng rng = make_rng(s);
    ComplexVector y(60);
    fill_complex_gaussian(rng, 1.0, y);
    const auto rec = recover_sparse(y, dict, StoppingRule{10, std::nullopt});
    EXPECT_LE(rec.support.size(), 10u);
    EXPECT_EQ(rec.iterations, rec.support.size());
    std::vector<char> on(120, 0);
    for (auto j : rec.support) on[j] = 1;
    for (std::size_t j = 0; j < 120; ++j)
      if (!on[j]) {
        EXPECT_EQ(rec.coefficients[j], Complex{});
      }
    for (std::size_t i = 1; i < rec.residual_history.size(); ++i)
      EXPECT_LE(rec.residual_history[i], rec.residual_history[i - 1] * (1 + 1e-12));
    // Reported residual agrees with y - A ifft(x)
    const auto fit = a.apply(ifft(rec.coefficients));
    double r2 = 0.0;
    for (std::size_t i = 0; i < 60; ++i) r2 += std::norm(y[i] - fit[i]);
    EXPECT_NEAR(std::sqrt(r2), rec.residual_norm, 1e-9);
  }
}

TEST(RecoverSparse, StopsOnResidualTolerance) {
  const FourierDictionary dict(build_sensing_matrix(MatrixKind::AIC_PSEUDORANDOM_PM1, 50, 100, 8));
  const auto sig = generate_pu_signal(100, 3, 5);
  const auto y = dict.matrix().apply(sig.time_samples);
  const auto rec = recover_sparse(y, dict, StoppingRule{20, std::nullopt});
  EXPECT_EQ(rec.iterations, 3u);
  EXPECT_LT(rec.residual_norm, 1e-6 * std::sqrt(std::accumulate(y.begin(), y.end(), 0.0,
                                                                [](double acc, Complex z) { return acc + std::norm(z); })));
}

TEST(EstimatePsd, PureTone) {
  ComplexVector x(64);
  for (std::size_t t = 0; t < 64; ++t) x[t] = std::polar(1.0, 2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / 64.0);
  const auto psd = estimate_psd(x);
  EXPECT_EQ(psd.bin_count, 64u);
  const auto peak = std::max_element(psd.bins.begin(), psd.bins.end()) - psd.bins.begin();
  EXPECT_EQ(peak, 5);
  EXPECT_NEAR(psd.statistic, 64.0, 1e-9);
  for (std::size_t k = 0; k < 64; ++k)
    if (k != 5) {
      EXPECT_LT(psd.bins[k], 1e-18);
    }
}

TEST(EstimatePsd, ZeroInputAndErrors) {
  const auto psd = estimate_psd(ComplexVector(16));
  EXPECT_EQ(psd.statistic, 0.0);
  for (double b : psd.bins) EXPECT_EQ(b, 0.0);
  EXPECT_THROW(estimate_psd(ComplexVector{}), InvalidArgument);
}

TEST(EstimatePsd, WhiteNoiseFlat) {
  Rng rng = make_rng(31);
  ComplexVector x(1 << 14);
  fill_complex_gaussian(rng, 1.0, x);
  const auto psd = estimate_psd(x);
  const double mean = std::accumulate(psd.bins.begin(), psd.bins.end(), 0.0) / static_cast<double>(psd.bins.size());
  EXPECT_NEAR(mean, 1.0, 0.05);
}

TEST(EstimatePsd, NonNegativeAndParsevalProperty) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + gen() % 300;
    Rng rng = make_rng(gen());
    ComplexVector x(n);
    fill_complex_gaussian(rng, 0.1 + static_cast<double>(gen() % 50), x);
    const auto psd = estimate_psd(x);
    double sum = 0.0;
    for (double b : psd.bins) {
      ASSERT_GE(b, 0.0);
      sum += b;
    }
    EXPECT_NEAR(sum / static_cast<double>(n), mean_power(x), 1e-9 * mean_power(x));
    EXPECT_EQ(psd.statistic, *std::max_element(psd.bins.begin(), psd.bins.end()));
  }
}

TEST(EstimatePsd, RecoveredEqualsSpectrumMagnitude) {
  RecoveredSpectrum rec;
  rec.coefficients.assign(32, Complex{});
  rec.coefficients[3] = {2.0, 0.0};
  rec.coefficients[10] = {0.0, -1.0};
  const auto psd = estimate_psd(rec);
  EXPECT_NEAR(psd.bins[3], 4.0 / 32.0, 1e-15);
  EXPECT_NEAR(psd.bins[10], 1.0 / 32.0, 1e-15);
  EXPECT_NEAR(psd.statistic, 4.0 / 32.0, 1e-15);
}

TEST(Threshold, QuantileRuleExamples) {
  EXPECT_EQ(threshold_from_statistics({1, 2, 3, 4}, 0.25), 4.0);
  EXPECT_EQ(threshold_from_statistics({1, 2, 3, 4}, 0.5), 3.0);
  EXPECT_EQ(threshold_from_statistics({4, 1, 3, 2}, 0.5), 3.0);
  EXPECT_EQ(threshold_from_statistics({1, 2, 2, 2}, 0.5), std::nextafter(2.0, 3.0));
  EXPECT_EQ(threshold_from_statistics({1, 2, 3, 4}, 0.1), std::nextafter(4.0, 5.0));
  EXPECT_THROW(threshold_from_statistics({2, 2, 2}, 0.1), DegenerateCalibration);
  EXPECT_THROW(threshold_from_statistics({1, 2}, 0.0), InvalidArgument);
  EXPECT_THROW(threshold_from_statistics({1, 2}, 1.0), InvalidArgument);
  EXPECT_THROW(DetectionThreshold::manual(-1.0), InvalidArgument);
  EXPECT_THROW(DetectionThreshold::manual(INFINITY), InvalidArgument);
}

TEST(Threshold, QuantileRuleProperty) {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(10 + gen() % 200);
    for (auto& v : s) v = static_cast<double>(gen() % 40);
    if (*std::min_element(s.begin(), s.end()) == *std::max_element(s.begin(), s.end())) continue;
    const double target = 0.01 + static_cast<double>(gen() % 90) / 100.0;
    const double th = threshold_from_statistics(s, target);
    const auto count_ge = [&](double x) { return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v >= x; })); };
    const double n = static_cast<double>(s.size());
    EXPECT_LE(count_ge(th) / n, target);
    // No smaller sample value also satisfies the rule.
    for (double v : s)
      if (v < th) {
        EXPECT_GT(count_ge(v) / n, target);
      }
  }
}

TEST(Threshold, CalibrationIsReproducible) {
  auto stat = [](Seed s) {
    Rng rng = make_rng(s);
    ComplexVector x(64);
    fill_complex_gaussian(rng, 1.0, x);
    return estimate_psd(x).statistic;
  };
  const auto a = calibrate_threshold(0.1, 500, 42, stat);
  const auto b = calibrate_threshold(a.calibration->target_pfa, a.calibration->n_trials, a.calibration->seed, stat);
  EXPECT_EQ(a.value, b.value);
  EXPECT_THROW(calibrate_threshold(0.1, 99, 42, stat), InvalidArgument);
  EXPECT_THROW(calibrate_threshold(0.1, 200, 42, [](Seed) { return 1.0; }), DegenerateCalibration);

  // Hold-out: fresh seeds alarm at about the target rate (99% binomial band).
  int alarms = 0;
  const int hold = 10000;
  for (int i = 0; i < hold; ++i) alarms += stat(mix_seed(777, i)) >= a.value;
  const double band = 2.576 * std::sqrt(0.1 * 0.9 / hold) + 2.576 * std::sqrt(0.1 * 0.9 / 500);
  EXPECT_NEAR(alarms / static_cast<double>(hold), 0.1, band);
}

TEST(Detect, InclusiveBoundary) {
  PsdEstimate psd;
  psd.statistic = 5.0;
  EXPECT_EQ(detect(psd, DetectionThreshold::manual(5.0)).value, Occupancy::OCCUPIED);
  psd.statistic = 4.999;
  EXPECT_EQ(detect(psd, DetectionThreshold::manual(5.0)).value, Occupancy::FREE);
  psd.statistic = 0.0;
  EXPECT_EQ(detect(psd, DetectionThreshold::manual(0.1)).value, Occupancy::FREE);
  const auto d = detect(psd, DetectionThreshold::manual(0.1), 7);
  EXPECT_EQ(d.id, 7u);
  EXPECT_EQ(d.statistic, 0.0);
}

TEST(Detect, MonotoneInThreshold) {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 1000; ++t) {
    PsdEstimate psd;
    psd.statistic = static_cast<double>(gen() % 1000) / 100.0;
    const double g1 = static_cast<double>(gen() % 1000) / 100.0;
    const double g2 = g1 + static_cast<double>(gen() % 100) / 100.0;
    if (detect(psd, DetectionThreshold::manual(g1)).value == Occupancy::FREE) {
      EXPECT_EQ(detect(psd, DetectionThreshold::manual(g2)).value, Occupancy::FREE);
    }
  }
}

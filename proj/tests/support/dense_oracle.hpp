#pragma once

// Dense linear-algebra oracles shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <numbers>
#include <vector>

#include "specsense/compressive_acquisition.hpp"

namespace specsense::oracle {

// Dense oracle for the dictionary: column j is A times the inverse-DFT atom.
inline Eigen::MatrixXcd explicit_dictionary(const SensingMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Eigen::MatrixXcd d(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      Complex acc{};
      for (std::size_t t = 0; t < n; ++t)
        acc += a.entry(i, t) *
               std::polar(1.0 / static_cast<double>(n),
                          2.0 * std::numbers::pi * static_cast<double>(j * t % n) / static_cast<double>(n));
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
    }
  return d;
}

inline double ls_residual(const Eigen::MatrixXcd& d, const std::vector<Eigen::Index>& support, const Eigen::VectorXcd& y) {
  if (support.empty()) return y.norm();
  Eigen::MatrixXcd sub(d.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = d.col(support[c]);
  const Eigen::VectorXcd x = sub.colPivHouseholderQr().solve(y);
  return (y - sub * x).norm();
}

// Exhaustive l0 search: smallest residual over all supports of size <= k.
inline double l0_best_residual(const Eigen::MatrixXcd& d, const Eigen::VectorXcd& y, std::size_t k) {
  const auto n = d.cols();
  double best = y.norm();
  for (Eigen::Index a = 0; a < n; ++a) {
    best = std::min(best, ls_residual(d, {a}, y));
    if (k >= 2)
      for (Eigen::Index b = a + 1; b < n; ++b) best = std::min(best, ls_residual(d, {a, b}, y));
  }
  return best;
}

}  // namespace specsense::oracle

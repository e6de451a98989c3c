#pragma once

// Cluster formation, weak-SU discarding, decision fusion, and the closed-form
// cooperative / cluster-based detection analytics.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "specsense/errors.hpp"
#include "specsense/recovery_detection.hpp"
#include "specsense/signal_model.hpp"

namespace specsense {

struct Cluster {
  std::size_t cluster_id = 0;
  std::vector<SuId> members;  // sorted ascending
  SuId head = 0;
};

struct ClusterTopology {
  std::vector<Cluster> clusters;

  std::size_t n_clusters() const noexcept { return clusters.size(); }
  std::size_t n_sus() const noexcept {
    std::size_t total = 0;
    for (const auto& c : clusters) total += c.members.size();
    return total;
  }
};

struct EqualSplit {
  std::size_t n_clusters = 1;
};

using ExplicitAssignment = std::vector<std::vector<SuId>>;

using ClusterSpec = std::variant<EqualSplit, ExplicitAssignment>;

/// SU ids are 0..l_total-1. An equal split hands out contiguous id ranges and
/// gives one extra member to each of the first (L mod J) clusters. Heads are
/// the lowest id in each cluster.
inline ClusterTopology assign_clusters(std::size_t l_total, const ClusterSpec& spec) {
  detail::require(l_total >= 1, "assign_clusters: need at least one SU");
  ClusterTopology topo;
  if (const auto* split = std::get_if<EqualSplit>(&spec)) {
    const std::size_t j = split->n_clusters;
    detail::require(j >= 1 && j <= l_total, "assign_clusters: cluster count must lie in [1, L]");
    const std::size_t base = l_total / j;
    const std::size_t extra = l_total % j;
    SuId next = 0;
    for (std::size_t c = 0; c < j; ++c) {
      Cluster cl;
      cl.cluster_id = c;
      const std::size_t size = base + (c < extra ? 1 : 0);
      for (std::size_t k = 0; k < size; ++k) cl.members.push_back(next++);
      cl.head = cl.members.front();
      topo.clusters.push_back(std::move(cl));
    }
    return topo;
  }

  const auto& groups = std::get<ExplicitAssignment>(spec);
  detail::require(!groups.empty(), "assign_clusters: explicit assignment has no clusters");
  std::set<SuId> seen;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    detail::require(!groups[c].empty(), "assign_clusters: cluster " + std::to_string(c) + " is empty");
    Cluster cl;
    cl.cluster_id = c;
    cl.members = groups[c];
    std::sort(cl.members.begin(), cl.members.end());
    for (SuId id : cl.members) {
      detail::require(id < l_total, "assign_clusters: SU id " + std::to_string(id) + " out of range");
      detail::require(seen.insert(id).second, "assign_clusters: SU " + std::to_string(id) + " in two clusters");
    }
    cl.head = cl.members.front();
    topo.clusters.push_back(std::move(cl));
  }
  detail::require(seen.size() == l_total, "assign_clusters: assignment does not cover every SU");
  return topo;
}

struct DiscardPolicy {
  double delta = 0.0;
};

/// Keeps SUs with P_i >= delta, in input order.
inline std::vector<SuId> discard_weak(std::span<const std::pair<SuId, double>> powers, const DiscardPolicy& policy) {
  detail::require(std::isfinite(policy.delta) && policy.delta >= 0.0, "discard_weak: delta must be finite and >= 0");
  std::vector<SuId> kept;
  for (const auto& [id, p] : powers)
    if (p >= policy.delta) kept.push_back(id);
  return kept;
}

enum class FusionRule { AND, OR, MAJORITY };

inline std::string_view to_string(FusionRule r) {
  switch (r) {
    case FusionRule::AND: return "and";
    case FusionRule::OR: return "or";
    case FusionRule::MAJORITY: return "majority";
  }
  return "unknown";
}

inline FusionRule parse_fusion_rule(std::string_view s) {
  if (s == "and" || s == "AND") return FusionRule::AND;
  if (s == "or" || s == "OR") return FusionRule::OR;
  if (s == "majority" || s == "MAJORITY") return FusionRule::MAJORITY;
  throw InvalidArgument("unknown fusion rule: " + std::string(s));
}

struct GlobalDecision {
  Occupancy value = Occupancy::FREE;
  std::vector<LocalDecision> contributing;
  FusionRule rule = FusionRule::MAJORITY;
};

/// Votes needed for OCCUPIED under MAJORITY: strictly more than half, with an
/// exact tie on an even count resolved to OCCUPIED.
constexpr std::size_t majority_quorum(std::size_t n) noexcept { return (n + 1) / 2; }

inline Occupancy fuse(std::span<const Occupancy> votes, FusionRule rule) {
  detail::require(!votes.empty(), "fuse_decisions: no decisions to fuse");
  const auto occupied = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), Occupancy::OCCUPIED));
  bool result = false;
  switch (rule) {
    case FusionRule::AND: result = occupied == votes.size(); break;
    case FusionRule::OR: result = occupied > 0; break;
    case FusionRule::MAJORITY: result = occupied >= majority_quorum(votes.size()); break;
  }
  return result ? Occupancy::OCCUPIED : Occupancy::FREE;
}

inline GlobalDecision fuse_decisions(std::span<const LocalDecision> decisions, FusionRule rule) {
  detail::require(!decisions.empty(), "fuse_decisions: no decisions to fuse");
  std::vector<Occupancy> votes;
  votes.reserve(decisions.size());
  for (const auto& d : decisions) votes.push_back(d.value);
  return GlobalDecision{fuse(votes, rule), std::vector<LocalDecision>(decisions.begin(), decisions.end()), rule};
}

/// For inputs that each declare OCCUPIED iff gamma <= value, returns the value
/// c such that the fused decision is OCCUPIED iff gamma <= c.
inline double fused_critical_value(std::vector<double> values, FusionRule rule) {
  detail::require(!values.empty(), "fused_critical_value: no inputs");
  std::sort(values.begin(), values.end(), std::greater<>());
  switch (rule) {
    case FusionRule::AND: return values.back();
    case FusionRule::OR: return values.front();
    case FusionRule::MAJORITY: return values[majority_quorum(values.size()) - 1];
  }
  return values.front();
}

namespace detail {
inline void require_probability(double p, const char* what) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0, std::string(what) + ": probability outside [0, 1]");
}

// 1 - prod (1 - q_i), evaluated identically for the repeated and the
// per-cluster forms so that equal inputs give bit-equal results.
template <typename Next>
double or_combine(std::size_t count, Next next) {
  if (count == 1) return next(0);
  double miss = 1.0;
  for (std::size_t i = 0; i < count; ++i) miss *= 1.0 - next(i);
  return 1.0 - miss;
}
}  // namespace detail

/// C_d = 1 - (1 - P_d)^L
inline double coop_pd(double pd, std::size_t l) {
  detail::require_probability(pd, "coop_pd");
  detail::require(l >= 1, "coop_pd: need at least one SU");
  return detail::or_combine(l, [pd](std::size_t) { return pd; });
}

/// C_fa = 1 - (1 - P_fa)^L
inline double coop_pfa(double pfa, std::size_t l) {
  detail::require_probability(pfa, "coop_pfa");
  detail::require(l >= 1, "coop_pfa: need at least one SU");
  return detail::or_combine(l, [pfa](std::size_t) { return pfa; });
}

/// Density of the largest of n_k iid exponential SNRs with mean gamma_bar:
/// (n_k / gamma_bar) e^{-gamma/gamma_bar} (1 - e^{-gamma/gamma_bar})^{n_k - 1}.
inline double max_snr_pdf(double gamma, double gamma_bar, std::size_t n_k) {
  detail::require(std::isfinite(gamma) && gamma >= 0.0, "max_snr_pdf: gamma must be >= 0");
  detail::require(std::isfinite(gamma_bar) && gamma_bar > 0.0, "max_snr_pdf: gamma_bar must be > 0");
  detail::require(n_k >= 1, "max_snr_pdf: n_k must be >= 1");
  const double u = gamma / gamma_bar;
  const double e = std::exp(-u);
  const double nk = static_cast<double>(n_k);
  if (n_k == 1) return e / gamma_bar;
  return nk / gamma_bar * e * std::pow(-std::expm1(-u), nk - 1.0);
}

struct QuadratureSettings {
  // Upper integration limit; defaults to gamma_bar * (20 + 5 ln n_k).
  std::optional<double> upper_limit;
  double relative_tolerance = 1e-8;
  unsigned max_depth = 20;
};

inline double default_upper_limit(double gamma_bar, std::size_t n_k) {
  return gamma_bar * (20.0 + 5.0 * std::log(static_cast<double>(n_k)));
}

/// Integral over SNR of a probability curve against the max-SNR density of a
/// cluster of n_k SUs (the cluster-level Q_d,k or Q_fa,k).
inline double cluster_coop_prob(const std::function<double(double)>& prob_curve, double gamma_bar,
                                std::size_t n_k, const QuadratureSettings& quad = {}) {
  detail::require(std::isfinite(gamma_bar) && gamma_bar > 0.0, "cluster_coop_prob: gamma_bar must be > 0");
  detail::require(n_k >= 1, "cluster_coop_prob: n_k must be >= 1");
  const double upper = quad.upper_limit.value_or(default_upper_limit(gamma_bar, n_k));
  detail::require(std::isfinite(upper) && upper > 0.0, "cluster_coop_prob: upper limit must be positive");

  bool curve_out_of_range = false;
  auto integrand = [&](double g) {
    const double p = prob_curve(g);
    if (!(p >= 0.0 && p <= 1.0)) curve_out_of_range = true;
    return p * max_snr_pdf(g, gamma_bar, n_k);
  };
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, upper, quad.max_depth, quad.relative_tolerance, &error, &l1);
  if (curve_out_of_range) throw NumericalFailure("cluster_coop_prob: probability curve left [0, 1]");
  if (!std::isfinite(value) || error > quad.relative_tolerance * std::max(l1, 1e-300) + 1e-15)
    throw NumericalFailure("cluster_coop_prob: quadrature did not converge (error estimate " +
                           std::to_string(error) + ")");
  if (value < -1e-9 || value > 1.0 + 1e-9)
    throw NumericalFailure("cluster_coop_prob: integral " + std::to_string(value) + " is not a probability");
  return value;
}

/// Q = 1 - prod_k (1 - q_k)
inline double global_coop_prob(std::span<const double> per_cluster) {
  detail::require(!per_cluster.empty(), "global_coop_prob: no clusters");
  for (double q : per_cluster) detail::require_probability(q, "global_coop_prob");
  return detail::or_combine(per_cluster.size(), [&](std::size_t i) { return per_cluster[i]; });
}

}  // namespace specsense

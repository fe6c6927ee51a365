#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>

#include "hetq/closed_form.hpp"
#include "hetq/model.hpp"

namespace hetq {

/// Enumeration guard: the oracle walks all 2^n boundary states. The cap
/// documents the oracle's scope, not the closed form's.
inline constexpr std::size_t kMaxOracleServers = 20;

/// Full enumerated state space: the 2^n boundary states first (index ==
/// busy bitmask, so the all-busy/empty-queue state sits at 2^n - 1),
/// then the truncated queue tail, levels 1..truncation, consecutively.
struct StateSpace {
  std::size_t n = 0;
  int truncation = 0;

  std::size_t size() const { return (std::size_t{1} << n) + static_cast<std::size_t>(truncation); }
  std::size_t boundary_count() const { return std::size_t{1} << n; }
  bool is_tail(std::size_t index) const { return index >= boundary_count(); }
  /// Busy-server bitmask of a state (all ones for tail states).
  std::uint32_t busy_mask(std::size_t index) const {
    return is_tail(index) ? static_cast<std::uint32_t>(boundary_count() - 1)
                          : static_cast<std::uint32_t>(index);
  }
  int queue_len(std::size_t index) const {
    return is_tail(index) ? static_cast<int>(index - boundary_count() + 1) : 0;
  }
  std::size_t customers(std::size_t index) const;

  /// Truncation depth at which the dropped tail mass is provably
  /// negligible for every aggregated metric.
  static int default_truncation(const SystemConfig& config);
};

/// Transition-rate matrix over a StateSpace: off-diagonal entries are the
/// rates q(i,j), diagonals the negated row sums (every row sums to zero).
/// The arrival transition out of the last tail level is dropped, which
/// makes the truncated chain a proper process whose stationary vector is
/// the original distribution conditioned on the retained states.
struct GeneratorMatrix {
  Eigen::MatrixXd rates;
};

/// Builds the state space and generator for a valid config. An absent
/// truncation selects the default depth; an explicit depth below 1 is
/// rejected, as is any combination whose 2^n + K state count exceeds
/// what the dense solve can reasonably hold.
std::pair<StateSpace, GeneratorMatrix> build_generator(
    const SystemConfig& config, std::optional<int> truncation = std::nullopt);

/// Solves pi Q = 0, sum(pi) = 1 by a dense LU with one refinement pass;
/// the empty-state balance row is replaced by the normalization row.
Eigen::VectorXd stationary(const GeneratorMatrix& generator);

/// Sums the stationary vector over the state sets behind each metric.
/// The report has exactly the closed form's shape, so the two can be
/// compared entrywise.
MetricsReport aggregate(const StateSpace& space, const Eigen::VectorXd& pi,
                        const SystemConfig& config);

/// Convenience: build, solve, aggregate.
MetricsReport oracle_metrics(const SystemConfig& config,
                             std::optional<int> truncation = std::nullopt);

/// Substitutes the closed-form distribution into every boundary balance
/// equation and the queue-tail recursion; returns the largest residual
/// relative to the gross probability flow of its equation.
double balance_residual(const SystemConfig& config, const StationaryDistribution& dist);

}  // namespace hetq

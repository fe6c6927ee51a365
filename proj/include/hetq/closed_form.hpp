#pragma once

#include <cstddef>
#include <vector>

#include "hetq/model.hpp"

namespace hetq {

/// Above this server count the normalization and per-server sums are
/// accumulated in log space; factorial ratios and ESP magnitudes leave
/// the double range well beyond it, the threshold is conservative.
inline constexpr std::size_t kLogDomainServerLimit = 200;

/// Product-form stationary distribution of the M|M|n system with
/// uninformed (uniform-among-idle) routing. A boundary state with busy
/// set S has probability ((n-|S|)!/n!) * lambda^|S| / prod_{j in S} mu_j * p0,
/// and queue levels decay geometrically with ratio rho = lambda/mu_total.
/// Evaluation cost is polynomial in n; the 2^n states are never enumerated.
class StationaryDistribution {
 public:
  const SystemConfig& config() const { return config_; }
  std::size_t servers() const { return config_.servers(); }
  /// Probability of the empty system. Underflows to zero only when the
  /// true value is below the double range (huge n at high utilization).
  double p0() const { return p0_; }
  double log_p0() const { return log_p0_; }
  double rho() const { return rho_; }
  /// level_probs()[k] = P(exactly k customers) for k = 0..n. The entry at
  /// n doubles as the base of the geometric queue tail.
  const std::vector<double>& level_probs() const { return level_; }
  /// Dimensionless rates lambda/mu_j the ESP machinery works over.
  const std::vector<double>& dimensionless() const { return z_; }
  bool log_domain() const { return log_domain_; }

 private:
  friend StationaryDistribution solve_in_domain(const SystemConfig& config, bool log_domain);
  StationaryDistribution() = default;

  SystemConfig config_{1.0, {2.0}};
  std::vector<double> z_;
  std::vector<double> level_;
  double p0_ = 0.0;
  double log_p0_ = 0.0;
  double rho_ = 0.0;
  bool log_domain_ = false;
};

/// Solves for the stationary distribution of a valid config.
StationaryDistribution solve(const SystemConfig& config);

/// Forces the accumulation domain; solve() picks it from the server
/// count. Exposed so the two routes can be checked against each other.
StationaryDistribution solve_in_domain(const SystemConfig& config, bool log_domain);

/// Probability of the boundary state with the given busy set (queue empty).
double boundary_state_prob(const StationaryDistribution& dist, const BoundaryState& state);

/// P(all servers busy, exactly queue_len >= 1 customers waiting).
double tail_prob(const StationaryDistribution& dist, int queue_len);

/// Long-run probability that server l is busy.
double busy_probability(const StationaryDistribution& dist, std::size_t l);

/// Long-run probability that server l is busy while server m is idle.
double busy_idle_probability(const StationaryDistribution& dist, std::size_t l, std::size_t m);

/// Probability that every server is busy (the delay probability).
double prob_all_busy(const StationaryDistribution& dist);

/// Throughput of server l: mu_l times its busy probability.
double effective_rate(const StationaryDistribution& dist, std::size_t l);

/// Full report: per-server, pairwise, and aggregate steady-state metrics.
/// mean_sojourn is mean_customers / lambda by construction.
MetricsReport metrics(const StationaryDistribution& dist);

/// For every pair with strictly ordered rates, the margins of the three
/// orderings: the faster server is busy less, does more effective work,
/// and its busy probability is sandwiched between (mu_s/mu_f) * P_slower
/// and P_slower. Pairs with equal rates are skipped.
std::vector<PairVerdict> theorem_check(const StationaryDistribution& dist);

}  // namespace hetq

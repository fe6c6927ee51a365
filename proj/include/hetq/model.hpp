#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hetq {

enum class ErrorCode {
  NonPositiveRate,
  Unstable,
  EmptyServerList,
  NegativeValue,
  IndexOutOfRange,
  SameServer,
  TooManyServers,
  BadTruncation,
  InvalidHorizon,
  SingularSystem,
};

const char* to_string(ErrorCode code);

/// Error thrown by validation and by operations called outside their domain.
class ModelError : public std::runtime_error {
 public:
  ModelError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Validated M|M|n input: arrival rate lambda and one service rate per
/// server. Construction enforces lambda > 0, mu[j] > 0, n >= 1 and the
/// stability condition lambda < sum(mu). Server identity is positional;
/// no ordering of the rates is assumed anywhere.
class SystemConfig {
 public:
  SystemConfig(double lambda, std::vector<double> mu);

  double lambda() const { return lambda_; }
  const std::vector<double>& mu() const { return mu_; }
  std::size_t servers() const { return mu_.size(); }
  double mu_total() const { return mu_total_; }
  /// Utilization lambda / sum(mu); strictly inside (0, 1) for a valid config.
  double rho() const { return lambda_ / mu_total_; }

  friend bool operator==(const SystemConfig& a, const SystemConfig& b) {
    return a.lambda_ == b.lambda_ && a.mu_ == b.mu_;
  }

 private:
  double lambda_;
  std::vector<double> mu_;
  double mu_total_;
};

/// Checks raw rates and returns the validated configuration.
/// Idempotent: re-validating an accepted config yields an equal one.
SystemConfig validate(double lambda, std::vector<double> mu);

/// A set of busy servers with an empty queue: one of the 2^n product-form
/// states. Stored as sorted server indices so n is not capped; mask()
/// provides the bit encoding used when states are enumerated.
class BoundaryState {
 public:
  BoundaryState() = default;
  explicit BoundaryState(std::vector<std::size_t> busy);
  static BoundaryState from_mask(std::uint64_t mask);
  static BoundaryState all_busy(std::size_t n);

  const std::vector<std::size_t>& busy() const { return busy_; }
  std::size_t count() const { return busy_.size(); }
  bool contains(std::size_t server) const;
  /// Bitmask with bit j set iff server j is busy; indices must be < 64.
  std::uint64_t mask() const;

 private:
  std::vector<std::size_t> busy_;  // sorted, unique
};

/// All servers busy plus queue_len >= 1 waiting customers.
struct TailState {
  int queue_len = 1;
};

/// Verdict for one strictly-ordered server pair (mu[faster] > mu[slower]):
/// the three inequality margins, each positive exactly when the
/// corresponding ordering holds.
struct PairVerdict {
  std::size_t faster = 0;
  std::size_t slower = 0;
  double busy_margin = 0.0;            // P_slower - P_faster
  double rate_margin = 0.0;            // mu_f*P_f - mu_s*P_s
  double sandwich_lower_margin = 0.0;  // P_f - (mu_s/mu_f)*P_s
  bool holds() const {
    return busy_margin > 0.0 && rate_margin > 0.0 && sandwich_lower_margin > 0.0;
  }
};

/// Everything the closed form and the oracles report for one config.
/// busy_idle[l][m] is P(server l busy, server m idle); the diagonal is
/// meaningless and kept at zero. p_k runs k = 0..n; the queue tail beyond
/// n customers is geometric with ratio rho.
struct MetricsReport {
  double p0 = 0.0;
  double rho = 0.0;
  std::vector<double> busy;
  std::vector<std::vector<double>> busy_idle;
  std::vector<double> effective_rate;
  double prob_all_busy = 0.0;
  std::vector<double> p_k;
  double mean_customers = 0.0;
  double mean_sojourn = 0.0;
};

/// Flat (name, value) view of a report in a fixed order: scalars, then
/// busy[l], effective_rate[l], p_k[k], busy_idle[l][m] for l != m.
/// Used for CSV output and entrywise report comparison.
std::vector<std::pair<std::string, double>> report_entries(const MetricsReport& report);

}  // namespace hetq

#include "hetq/ctmc.hpp"

#include <bit>
#include <cmath>
#include <string>
#include <vector>

namespace hetq {

namespace {

// Target for the dropped tail mass. Keeps the truncation bias on the
// mean-customers aggregate an order of magnitude below the 1e-10 window
// the oracle is compared at, even at rho = 0.95.
constexpr double kTailMassTarget = 1e-15;

// Dense-solve cap on 2^n + K. The LU needs O(states^2) memory, so the
// enumeration guard on n alone cannot prevent absurd allocations (n = 20
// alone would mean a million states). 6000 states ~ 300 MB, comfortably
// covers n <= 12 at any utilization the default truncation handles.
constexpr std::size_t kMaxOracleStates = 6000;

void check_scope(const SystemConfig& config, int truncation) {
  if (config.servers() > kMaxOracleServers) {
    throw ModelError(ErrorCode::TooManyServers,
                     "state enumeration is capped at " + std::to_string(kMaxOracleServers) +
                         " servers");
  }
  if (truncation < 1) {
    throw ModelError(ErrorCode::BadTruncation, "truncation depth must be at least 1");
  }
  const std::size_t states =
      (std::size_t{1} << config.servers()) + static_cast<std::size_t>(truncation);
  if (states > kMaxOracleStates) {
    throw ModelError(ErrorCode::TooManyServers,
                     "state space has " + std::to_string(states) +
                         " states; the dense solve is capped at " +
                         std::to_string(kMaxOracleStates) +
                         " (fewer servers or a shallower explicit truncation needed)");
  }
}

}  // namespace

std::size_t StateSpace::customers(std::size_t index) const {
  if (is_tail(index)) return n + static_cast<std::size_t>(queue_len(index));
  return static_cast<std::size_t>(std::popcount(busy_mask(index)));
}

int StateSpace::default_truncation(const SystemConfig& config) {
  const double rho = config.rho();
  const int depth = static_cast<int>(std::ceil(std::log(kTailMassTarget) / std::log(rho)));
  return std::max(30, depth);
}

std::pair<StateSpace, GeneratorMatrix> build_generator(const SystemConfig& config,
                                                       std::optional<int> truncation) {
  const int depth = truncation.value_or(StateSpace::default_truncation(config));
  check_scope(config, depth);

  StateSpace space;
  space.n = config.servers();
  space.truncation = depth;

  const std::size_t n = space.n;
  const std::size_t boundary = space.boundary_count();
  const std::size_t total = space.size();
  const double lambda = config.lambda();
  const auto& mu = config.mu();

  GeneratorMatrix gen;
  gen.rates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total),
                                    static_cast<Eigen::Index>(total));
  auto& q = gen.rates;

  for (std::size_t mask = 0; mask < boundary; ++mask) {
    const std::size_t busy = static_cast<std::size_t>(std::popcount(mask));
    if (busy < n) {
      // Uninformed arrival: uniform among the idle servers.
      const double per_idle = lambda / static_cast<double>(n - busy);
      for (std::size_t j = 0; j < n; ++j) {
        if (!(mask >> j & 1u)) {
          q(static_cast<Eigen::Index>(mask), static_cast<Eigen::Index>(mask | (1ull << j))) +=
              per_idle;
        }
      }
    } else {
      q(static_cast<Eigen::Index>(mask), static_cast<Eigen::Index>(boundary)) += lambda;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1u) {
        q(static_cast<Eigen::Index>(mask), static_cast<Eigen::Index>(mask & ~(1ull << j))) +=
            mu[j];
      }
    }
  }

  for (int level = 1; level <= depth; ++level) {
    const std::size_t idx = boundary - 1 + static_cast<std::size_t>(level);
    if (level < depth) {
      q(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx + 1)) += lambda;
    }
    // A completion hands the queue head straight to the freed server.
    q(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx - 1)) += config.mu_total();
  }

  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    q(i, i) = 0.0;
    q(i, i) = -q.row(i).sum();
  }
  return {space, std::move(gen)};
}

Eigen::VectorXd stationary(const GeneratorMatrix& generator) {
  const auto& q = generator.rates;
  const Eigen::Index size = q.rows();

  Eigen::MatrixXd balance = q.transpose();
  balance.row(0).setOnes();  // empty state carries the normalization
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
  rhs(0) = 1.0;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(balance);
  Eigen::VectorXd pi = lu.solve(rhs);
  pi += lu.solve(rhs - balance * pi);  // one refinement pass

  const double scale = q.cwiseAbs().maxCoeff();
  const double residual = (q.transpose() * pi).cwiseAbs().maxCoeff();
  if (!pi.allFinite() || !(residual <= 1e-8 * scale)) {
    throw ModelError(ErrorCode::SingularSystem,
                     "stationary solve failed; the generator is malformed");
  }
  pi = pi.cwiseMax(0.0);  // shave solver noise off the deep tail
  return pi;
}

MetricsReport aggregate(const StateSpace& space, const Eigen::VectorXd& pi,
                        const SystemConfig& config) {
  const std::size_t n = space.n;

  MetricsReport report;
  report.rho = config.rho();
  report.p0 = pi(0);
  report.p_k.assign(n + 1, 0.0);
  report.busy.assign(n, 0.0);
  report.effective_rate.assign(n, 0.0);
  report.busy_idle.assign(n, std::vector<double>(n, 0.0));

  long double all_busy = 0.0L;
  long double customers = 0.0L;
  std::vector<long double> busy(n, 0.0L);

  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    const double prob = pi(static_cast<Eigen::Index>(idx));
    const std::uint32_t mask = space.busy_mask(idx);
    customers += static_cast<long double>(space.customers(idx)) * prob;
    if (space.is_tail(idx) || mask == space.boundary_count() - 1) all_busy += prob;

    const std::size_t users = space.customers(idx);
    if (users <= n) report.p_k[users] += prob;

    for (std::size_t l = 0; l < n; ++l) {
      if (!(mask >> l & 1u)) continue;
      busy[l] += prob;
      if (!space.is_tail(idx)) {
        for (std::size_t m = 0; m < n; ++m) {
          if (!(mask >> m & 1u)) report.busy_idle[l][m] += prob;
        }
      }
    }
  }

  report.prob_all_busy = static_cast<double>(all_busy);
  report.mean_customers = static_cast<double>(customers);
  report.mean_sojourn = report.mean_customers / config.lambda();
  for (std::size_t l = 0; l < n; ++l) {
    report.busy[l] = static_cast<double>(busy[l]);
    report.effective_rate[l] = config.mu()[l] * report.busy[l];
  }
  return report;
}

MetricsReport oracle_metrics(const SystemConfig& config, std::optional<int> truncation) {
  const auto [space, generator] = build_generator(config, truncation);
  return aggregate(space, stationary(generator), config);
}

double balance_residual(const SystemConfig& config, const StationaryDistribution& dist) {
  const std::size_t n = config.servers();
  if (n > kMaxOracleServers) {
    throw ModelError(ErrorCode::TooManyServers,
                     "balance check enumerates states; capped at " +
                         std::to_string(kMaxOracleServers) + " servers");
  }
  const std::size_t boundary = std::size_t{1} << n;
  const double lambda = config.lambda();
  const auto& mu = config.mu();

  std::vector<double> prob(boundary);
  for (std::size_t mask = 0; mask < boundary; ++mask) {
    prob[mask] = boundary_state_prob(dist, BoundaryState::from_mask(mask));
  }

  double worst = 0.0;
  for (std::size_t mask = 0; mask < boundary; ++mask) {
    const std::size_t busy = static_cast<std::size_t>(std::popcount(mask));
    double service_out = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1u) service_out += mu[j];
    }
    const double outflow = (lambda + service_out) * prob[mask];

    double inflow = 0.0;
    // Arrivals from states with one fewer busy server; the arriving
    // customer picked j among the n - (busy - 1) idle ones.
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1u) {
        inflow += lambda / static_cast<double>(n - busy + 1) * prob[mask & ~(1ull << j)];
      }
    }
    if (busy < n) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!(mask >> j & 1u)) inflow += mu[j] * prob[mask | (1ull << j)];
      }
    } else {
      inflow += config.mu_total() * tail_prob(dist, 1);  // coupling to queue level 1
    }

    const double gross = outflow + inflow;
    if (gross > 0.0) worst = std::max(worst, std::abs(outflow - inflow) / gross);
  }

  // Queue-tail recursion lambda * p_{level-1} = mu_total * p_level.
  double upper = prob[boundary - 1];
  for (int level = 1; level <= 3; ++level) {
    const double lower = tail_prob(dist, level);
    const double lhs = lambda * upper;
    const double rhs = config.mu_total() * lower;
    if (lhs + rhs > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / (lhs + rhs));
    upper = lower;
  }
  return worst;
}

}  // namespace hetq

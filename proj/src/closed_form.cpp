#include "hetq/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hetq/esp.hpp"

namespace hetq {

namespace {

double log_sum_exp(std::span<const double> terms) {
  const double peak = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

void check_server(const StationaryDistribution& dist, std::size_t l) {
  if (l >= dist.servers()) {
    throw ModelError(ErrorCode::IndexOutOfRange,
                     "server index " + std::to_string(l) + " is out of range");
  }
}

// Total probability of the boundary states in which server l is busy,
// every server in `excluded` other than l is idle, and at least one
// server is idle: z_l * p0 * sum_{k=1}^{n-1} ((n-k)!/n!) * E_excl[k-1]
// over the dimensionless set with `excluded` removed.
double partial_busy_mass(const StationaryDistribution& dist, std::size_t l,
                         std::initializer_list<std::size_t> excluded) {
  const std::size_t n = dist.servers();
  const auto& z = dist.dimensionless();
  if (n < 2) return 0.0;  // the k = 1..n-1 series is empty

  if (!dist.log_domain()) {
    const ScaledEspTable table = esp_scaled_excluding(z, excluded, n);
    double series = 0.0;
    for (std::size_t k = 1; k <= n - 1; ++k) {
      series += table.at(static_cast<int>(k) - 1) / static_cast<double>(n - k + 1);
    }
    return z[l] * dist.p0() * series;
  }

  const LogEspTable table = esp_excluding_log(z, excluded);
  const double base = std::log(z[l]) + dist.log_p0();
  double log_weight = -std::log(static_cast<double>(n));  // (n-1)!/n! at k = 1
  double mass = 0.0;
  for (std::size_t k = 1; k <= n - 1; ++k) {
    mass += std::exp(base + log_weight + table.at(static_cast<int>(k) - 1));
    log_weight -= std::log(static_cast<double>(n - k));
  }
  return mass;
}

}  // namespace

StationaryDistribution solve_in_domain(const SystemConfig& config, bool log_domain) {
  StationaryDistribution dist;
  dist.config_ = config;
  dist.rho_ = config.rho();
  dist.log_domain_ = log_domain;

  const std::size_t n = config.servers();
  dist.z_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    dist.z_[j] = config.lambda() / config.mu()[j];
  }
  dist.level_.assign(n + 1, 0.0);
  const double rho = dist.rho_;
  const double tail_factor = rho / (1.0 - rho);  // sum_{j>=1} rho^j

  if (!log_domain) {
    const ScaledEspTable table = esp_scaled(dist.z_, n);
    double norm = 0.0;
    for (std::size_t k = 0; k <= n; ++k) norm += table.f[k];
    norm += table.f[n] * tail_factor;
    dist.p0_ = 1.0 / norm;
    dist.log_p0_ = -std::log(norm);
    for (std::size_t k = 0; k <= n; ++k) dist.level_[k] = table.f[k] * dist.p0_;
    return dist;
  }

  const LogEspTable table = esp_all_log(dist.z_);
  std::vector<double> terms(n + 2);
  double log_weight = 0.0;  // log((n-k)!/n!), k ascending
  for (std::size_t k = 0; k <= n; ++k) {
    terms[k] = log_weight + table.at(static_cast<int>(k));
    if (k < n) log_weight -= std::log(static_cast<double>(n - k));
  }
  terms[n + 1] = terms[n] + std::log(tail_factor);
  dist.log_p0_ = -log_sum_exp(terms);
  dist.p0_ = std::exp(dist.log_p0_);
  for (std::size_t k = 0; k <= n; ++k) dist.level_[k] = std::exp(terms[k] + dist.log_p0_);
  return dist;
}

StationaryDistribution solve(const SystemConfig& config) {
  return solve_in_domain(config, config.servers() > kLogDomainServerLimit);
}

double boundary_state_prob(const StationaryDistribution& dist, const BoundaryState& state) {
  const std::size_t n = dist.servers();
  const auto& z = dist.dimensionless();
  for (std::size_t j : state.busy()) check_server(dist, j);

  if (!dist.log_domain()) {
    double prob = dist.p0();
    std::size_t placed = 0;
    for (std::size_t j : state.busy()) {
      ++placed;
      prob *= z[j] / static_cast<double>(n - placed + 1);
    }
    return prob;
  }
  double log_prob = dist.log_p0();
  std::size_t placed = 0;
  for (std::size_t j : state.busy()) {
    ++placed;
    log_prob += std::log(z[j]) - std::log(static_cast<double>(n - placed + 1));
  }
  return std::exp(log_prob);
}

double tail_prob(const StationaryDistribution& dist, int queue_len) {
  if (queue_len < 1) {
    throw ModelError(ErrorCode::IndexOutOfRange, "queue length must be at least 1");
  }
  return dist.level_probs().back() * std::pow(dist.rho(), queue_len);
}

double prob_all_busy(const StationaryDistribution& dist) {
  return dist.level_probs().back() / (1.0 - dist.rho());
}

double busy_probability(const StationaryDistribution& dist, std::size_t l) {
  check_server(dist, l);
  return partial_busy_mass(dist, l, {l}) + prob_all_busy(dist);
}

double busy_idle_probability(const StationaryDistribution& dist, std::size_t l, std::size_t m) {
  check_server(dist, l);
  check_server(dist, m);
  if (l == m) {
    throw ModelError(ErrorCode::SameServer, "busy/idle probability needs two distinct servers");
  }
  return partial_busy_mass(dist, l, {l, m});
}

double effective_rate(const StationaryDistribution& dist, std::size_t l) {
  check_server(dist, l);
  return dist.config().mu()[l] * busy_probability(dist, l);
}

MetricsReport metrics(const StationaryDistribution& dist) {
  const std::size_t n = dist.servers();
  const double rho = dist.rho();

  MetricsReport report;
  report.p0 = dist.p0();
  report.rho = rho;
  report.p_k = dist.level_probs();
  report.prob_all_busy = prob_all_busy(dist);

  report.busy.resize(n);
  report.effective_rate.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    report.busy[l] = busy_probability(dist, l);
    report.effective_rate[l] = dist.config().mu()[l] * report.busy[l];
  }
  report.busy_idle.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t m = 0; m < n; ++m) {
      if (l != m) report.busy_idle[l][m] = busy_idle_probability(dist, l, m);
    }
  }

  // E[customers] = sum_k k P_k plus the geometric tail
  // sum_{j>=1} (n+j) P_n rho^j, summed in closed form.
  double mean = 0.0;
  for (std::size_t k = 1; k <= n; ++k) mean += static_cast<double>(k) * report.p_k[k];
  const double tail_base = report.p_k[n];
  mean += tail_base * (static_cast<double>(n) * rho / (1.0 - rho) +
                       rho / ((1.0 - rho) * (1.0 - rho)));
  report.mean_customers = mean;
  report.mean_sojourn = mean / dist.config().lambda();
  return report;
}

std::vector<PairVerdict> theorem_check(const StationaryDistribution& dist) {
  const std::size_t n = dist.servers();
  const auto& mu = dist.config().mu();
  std::vector<double> busy(n);
  for (std::size_t l = 0; l < n; ++l) busy[l] = busy_probability(dist, l);

  std::vector<PairVerdict> verdicts;
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t m = 0; m < n; ++m) {
      if (l == m || !(mu[l] > mu[m])) continue;  // strict ordering only
      PairVerdict verdict;
      verdict.faster = l;
      verdict.slower = m;
      verdict.busy_margin = busy[m] - busy[l];
      verdict.rate_margin = mu[l] * busy[l] - mu[m] * busy[m];
      verdict.sandwich_lower_margin = busy[l] - (mu[m] / mu[l]) * busy[m];
      verdicts.push_back(verdict);
    }
  }
  return verdicts;
}

}  // namespace hetq

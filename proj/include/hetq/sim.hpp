#pragma once

#include <cstdint>
#include <vector>

#include "hetq/model.hpp"

namespace hetq {

/// One simulation run: Poisson arrivals, exponential service, uniform
/// routing among idle servers, FIFO queue. Estimates are time averages
/// over the post-warmup window with batch-means confidence intervals.
struct SimConfig {
  SystemConfig system;
  double horizon = 1.0e6;       // simulated time units
  double warmup_fraction = 0.1; // leading fraction discarded
  int batches = 20;             // batch-means slices
  std::uint64_t seed = 1;
};

/// Point estimate with a 95% batch-means half width.
struct Estimate {
  double value = 0.0;
  double half_width = 0.0;

  bool covers(double reference) const;
};

struct SimEstimates {
  std::vector<Estimate> busy_fraction;
  std::vector<Estimate> effective_rate;  // departures per unit time
  Estimate mean_queue;
  Estimate mean_customers;
  Estimate mean_sojourn;
  std::uint64_t event_count = 0;
  /// Set when fewer than 100 events landed after warmup; the estimates
  /// and half widths are statistically meaningless then.
  bool low_events = false;
};

/// Runs the event loop. Identical configs (seed included) produce
/// bit-identical estimates.
SimEstimates simulate(const SimConfig& config);

/// Closed-form targets for each simulated estimate.
struct ReferenceValues {
  std::vector<double> busy;
  std::vector<double> effective_rate;
  double mean_queue = 0.0;
  double mean_customers = 0.0;
  double mean_sojourn = 0.0;
};

ReferenceValues closed_form_references(const SystemConfig& config);

/// Fraction of replications whose CI covered the reference, per metric.
struct CoverageReport {
  std::size_t replications = 0;
  std::vector<double> busy_fraction;
  std::vector<double> effective_rate;
  double mean_queue = 0.0;
  double mean_customers = 0.0;
  double mean_sojourn = 0.0;
};

/// Runs `replications` independent simulations with seeds derived
/// deterministically from config.seed and scores CI coverage against
/// the closed form (or explicit targets).
CoverageReport replicate(const SimConfig& config, std::size_t replications);
CoverageReport replicate(const SimConfig& config, std::size_t replications,
                         const ReferenceValues& targets);

/// Seed of the idx-th replication derived from a base seed.
std::uint64_t replication_seed(std::uint64_t base, std::size_t idx);

}  // namespace hetq

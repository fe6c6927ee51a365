#include "hetq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "hetq/closed_form.hpp"

namespace hetq {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent engine for stream `stream` under a common seed.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ull * (stream + 1));
  std::seed_seq seq{static_cast<unsigned>(splitmix64(state)),
                    static_cast<unsigned>(splitmix64(state) >> 32),
                    static_cast<unsigned>(splitmix64(state)),
                    static_cast<unsigned>(splitmix64(state) >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform in [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& gen, double rate) {
  return -std::log1p(-uniform01(gen)) / rate;
}

/// Unbiased integer in [0, bound) (Lemire multiply-shift with rejection).
std::size_t bounded(std::mt19937_64& gen, std::size_t bound) {
  using u128 = unsigned __int128;
  std::uint64_t x = gen();
  u128 m = static_cast<u128>(x) * static_cast<u128>(bound);
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = gen();
      m = static_cast<u128>(x) * static_cast<u128>(bound);
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;  // breaks ties in insertion order
  int server = -1;        // -1: arrival, otherwise service completion
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

double t_quantile_975(int dof) {
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

/// Batch-means estimate from per-batch means; the point value comes
/// from the pooled totals, not the batch averages.
Estimate batch_estimate(double point, const std::vector<double>& means) {
  Estimate est;
  est.value = point;
  std::size_t count = means.size();
  if (count < 2) {
    est.half_width = std::numeric_limits<double>::infinity();
    return est;
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(count);
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  double var = ss / static_cast<double>(count - 1);
  est.half_width = t_quantile_975(static_cast<int>(count) - 1) *
                   std::sqrt(var / static_cast<double>(count));
  return est;
}

void check_setup(const SimConfig& config) {
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
    throw ModelError(ErrorCode::InvalidHorizon,
                     "horizon must be positive and finite, got " +
                         std::to_string(config.horizon));
  }
  if (!(config.warmup_fraction >= 0.0) || !(config.warmup_fraction < 1.0)) {
    throw ModelError(ErrorCode::InvalidHorizon,
                     "warmup fraction must lie in [0, 1), got " +
                         std::to_string(config.warmup_fraction));
  }
  if (config.batches < 2) {
    throw ModelError(ErrorCode::InvalidHorizon,
                     "batch-means needs at least 2 batches, got " +
                         std::to_string(config.batches));
  }
}

}  // namespace

bool Estimate::covers(double reference) const {
  return std::abs(value - reference) <= half_width;
}

SimEstimates simulate(const SimConfig& config) {
  check_setup(config);
  const std::size_t n = config.system.servers();
  const double lambda = config.system.lambda();
  const std::vector<double>& mu = config.system.mu();
  const double horizon = config.horizon;
  const double measure_start = horizon * config.warmup_fraction;
  const std::size_t batches = static_cast<std::size_t>(config.batches);
  const double batch_len =
      (horizon - measure_start) / static_cast<double>(batches);

  // Separate streams so that e.g. changing a service rate never
  // perturbs the arrival process.
  std::mt19937_64 arrival_rng = make_stream(config.seed, 0);
  std::mt19937_64 routing_rng = make_stream(config.seed, 1);
  std::vector<std::mt19937_64> service_rng;
  service_rng.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    service_rng.push_back(make_stream(config.seed, 2 + j));
  }

  std::priority_queue<Event, std::vector<Event>, EventAfter> events;
  std::uint64_t next_seq = 0;
  events.push({exponential(arrival_rng, lambda), next_seq++, -1});

  std::vector<char> busy(n, 0);
  std::vector<double> serving_arrival(n, 0.0);  // arrival time of the job in service
  std::deque<double> waiting;                   // arrival times, FIFO
  std::size_t in_system = 0;
  std::vector<std::size_t> idle_scratch(n, 0);

  // Per-batch accumulators.
  std::vector<double> nsys_area(batches, 0.0);
  std::vector<double> queue_area(batches, 0.0);
  std::vector<double> busy_area(n * batches, 0.0);
  std::vector<double> sojourn_sum(batches, 0.0);
  std::vector<std::uint64_t> sojourn_count(batches, 0);
  std::vector<std::uint64_t> departures(n * batches, 0);

  auto batch_of = [&](double t) {
    auto idx = static_cast<std::size_t>((t - measure_start) / batch_len);
    return std::min(idx, batches - 1);
  };

  auto integrate = [&](double from, double to) {
    double a = std::max(from, measure_start);
    const double b = std::min(to, horizon);
    while (a < b) {
      std::size_t bi = batch_of(a);
      double end = std::min(b, measure_start + static_cast<double>(bi + 1) * batch_len);
      if (end <= a) end = b;  // guards rounding at batch boundaries
      const double len = end - a;
      nsys_area[bi] += len * static_cast<double>(in_system);
      queue_area[bi] += len * static_cast<double>(waiting.size());
      if (in_system > 0) {
        for (std::size_t j = 0; j < n; ++j) {
          if (busy[j]) busy_area[j * batches + bi] += len;
        }
      }
      a = end;
    }
  };

  double now = 0.0;
  std::uint64_t processed = 0;
  std::uint64_t post_warmup = 0;

  while (true) {
    const Event ev = events.top();
    if (ev.time >= horizon) {
      integrate(now, horizon);
      break;
    }
    events.pop();
    integrate(now, ev.time);
    now = ev.time;
    ++processed;
    if (now >= measure_start) ++post_warmup;

    if (ev.server < 0) {
      ++in_system;
      std::size_t idle_count = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!busy[j]) idle_scratch[idle_count++] = j;
      }
      if (idle_count > 0) {
        const std::size_t pick = idle_scratch[bounded(routing_rng, idle_count)];
        busy[pick] = 1;
        serving_arrival[pick] = now;
        events.push({now + exponential(service_rng[pick], mu[pick]),
                     next_seq++, static_cast<int>(pick)});
      } else {
        waiting.push_back(now);
      }
      events.push({now + exponential(arrival_rng, lambda), next_seq++, -1});
    } else {
      const auto j = static_cast<std::size_t>(ev.server);
      const double sojourn = now - serving_arrival[j];
      --in_system;
      if (now >= measure_start) {
        const std::size_t bi = batch_of(now);
        sojourn_sum[bi] += sojourn;
        ++sojourn_count[bi];
        ++departures[j * batches + bi];
      }
      if (!waiting.empty()) {
        serving_arrival[j] = waiting.front();
        waiting.pop_front();
        events.push({now + exponential(service_rng[j], mu[j]), next_seq++,
                     static_cast<int>(j)});
      } else {
        busy[j] = 0;
      }
    }
  }

  const double window = horizon - measure_start;
  SimEstimates out;
  out.event_count = processed;
  out.low_events = post_warmup < 100;

  std::vector<double> means(batches, 0.0);

  double nsys_total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    nsys_total += nsys_area[b];
    means[b] = nsys_area[b] / batch_len;
  }
  out.mean_customers = batch_estimate(nsys_total / window, means);

  double queue_total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    queue_total += queue_area[b];
    means[b] = queue_area[b] / batch_len;
  }
  out.mean_queue = batch_estimate(queue_total / window, means);

  out.busy_fraction.reserve(n);
  out.effective_rate.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    double busy_total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      busy_total += busy_area[j * batches + b];
      means[b] = busy_area[j * batches + b] / batch_len;
    }
    out.busy_fraction.push_back(batch_estimate(busy_total / window, means));

    std::uint64_t dep_total = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      dep_total += departures[j * batches + b];
      means[b] = static_cast<double>(departures[j * batches + b]) / batch_len;
    }
    out.effective_rate.push_back(
        batch_estimate(static_cast<double>(dep_total) / window, means));
  }

  // Sojourn is event-averaged, so only batches that saw a departure
  // contribute a batch mean.
  std::vector<double> sojourn_means;
  sojourn_means.reserve(batches);
  double sojourn_total = 0.0;
  std::uint64_t sojourn_events = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    sojourn_total += sojourn_sum[b];
    sojourn_events += sojourn_count[b];
    if (sojourn_count[b] > 0) {
      sojourn_means.push_back(sojourn_sum[b] /
                              static_cast<double>(sojourn_count[b]));
    }
  }
  const double sojourn_point =
      sojourn_events > 0 ? sojourn_total / static_cast<double>(sojourn_events)
                         : 0.0;
  out.mean_sojourn = batch_estimate(sojourn_point, sojourn_means);

  return out;
}

ReferenceValues closed_form_references(const SystemConfig& config) {
  const StationaryDistribution dist = solve(config);
  const MetricsReport report = metrics(dist);
  ReferenceValues ref;
  ref.busy = report.busy;
  ref.effective_rate = report.effective_rate;
  ref.mean_customers = report.mean_customers;
  ref.mean_sojourn = report.mean_sojourn;
  double busy_sum = 0.0;
  for (double b : report.busy) busy_sum += b;
  ref.mean_queue = report.mean_customers - busy_sum;
  return ref;
}

std::uint64_t replication_seed(std::uint64_t base, std::size_t idx) {
  std::uint64_t state =
      base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(idx + 1);
  std::uint64_t mixed = splitmix64(state);
  return mixed ^ splitmix64(state);
}

CoverageReport replicate(const SimConfig& config, std::size_t replications,
                         const ReferenceValues& targets) {
  check_setup(config);
  const std::size_t n = config.system.servers();
  std::vector<SimEstimates> runs(replications);

  auto worker = [&](std::size_t offset, std::size_t stride) {
    for (std::size_t r = offset; r < replications; r += stride) {
      SimConfig local = config;
      local.seed = replication_seed(config.seed, r);
      runs[r] = simulate(local);
    }
  };

  const std::size_t hw = std::thread::hardware_concurrency();
  const std::size_t threads = std::max<std::size_t>(
      1, std::min({hw == 0 ? std::size_t{1} : hw, replications,
                   std::size_t{8}}));
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(worker, t, threads);
    }
    for (std::thread& t : pool) t.join();
  }

  CoverageReport report;
  report.replications = replications;
  report.busy_fraction.assign(n, 0.0);
  report.effective_rate.assign(n, 0.0);
  if (replications == 0) return report;

  double queue_hits = 0.0;
  double customers_hits = 0.0;
  double sojourn_hits = 0.0;
  for (const SimEstimates& run : runs) {
    for (std::size_t j = 0; j < n; ++j) {
      if (run.busy_fraction[j].covers(targets.busy[j])) {
        report.busy_fraction[j] += 1.0;
      }
      if (run.effective_rate[j].covers(targets.effective_rate[j])) {
        report.effective_rate[j] += 1.0;
      }
    }
    if (run.mean_queue.covers(targets.mean_queue)) queue_hits += 1.0;
    if (run.mean_customers.covers(targets.mean_customers)) {
      customers_hits += 1.0;
    }
    if (run.mean_sojourn.covers(targets.mean_sojourn)) sojourn_hits += 1.0;
  }
  const auto total = static_cast<double>(replications);
  for (std::size_t j = 0; j < n; ++j) {
    report.busy_fraction[j] /= total;
    report.effective_rate[j] /= total;
  }
  report.mean_queue = queue_hits / total;
  report.mean_customers = customers_hits / total;
  report.mean_sojourn = sojourn_hits / total;
  return report;
}

CoverageReport replicate(const SimConfig& config, std::size_t replications) {
  return replicate(config, replications,
                   closed_form_references(config.system));
}

}  // namespace hetq

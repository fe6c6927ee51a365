// Command-line front end: analyze | oracle | simulate | verify | sweep.
//
// Exit codes: 0 success, 1 oracle tolerance exceeded, 2 invalid input,
// 3 theorem violation, 4 scope guard (oracle size cap).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hetq/closed_form.hpp"
#include "hetq/ctmc.hpp"
#include "hetq/model.hpp"
#include "hetq/sim.hpp"

namespace {

using nlohmann::json;

constexpr double kOracleTolerance = 1e-8;

enum ExitCode : int {
  kOk = 0,
  kToleranceExceeded = 1,
  kBadInput = 2,
  kTheoremViolation = 3,
  kScopeGuard = 4,
};

int exit_code_for(const hetq::ModelError& err) {
  return err.code() == hetq::ErrorCode::TooManyServers ? kScopeGuard
                                                       : kBadInput;
}

/// Round-trippable decimal form used in CSV cells.
std::string fmt(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                           "cannot open output file " + out_path);
  }
  file << text;
}

/// Shared config flags. A config file is a flat JSON document with
/// "lambda" (number) and "mu" (array); inline flags override it.
struct ConfigFlags {
  std::string config_path;
  double lambda = 0.0;
  bool lambda_set = false;
  std::vector<double> mu;
};

struct RawConfig {
  std::optional<double> lambda;
  std::vector<double> mu;
};

/// Merges flag and file values without validating them.
RawConfig read_raw(const ConfigFlags& flags) {
  double lambda = flags.lambda;
  bool have_lambda = flags.lambda_set;
  std::vector<double> mu = flags.mu;

  if (!flags.config_path.empty()) {
    std::ifstream file(flags.config_path);
    if (!file) {
      throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                             "cannot read config file " + flags.config_path);
    }
    json doc;
    try {
      doc = json::parse(file);
    } catch (const json::exception& err) {
      throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                             std::string("malformed config file: ") +
                                 err.what());
    }
    if (!have_lambda) {
      if (!doc.contains("lambda") || !doc["lambda"].is_number()) {
        throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                               "config file lacks numeric \"lambda\"");
      }
      lambda = doc["lambda"].get<double>();
      have_lambda = true;
    }
    if (mu.empty()) {
      if (!doc.contains("mu") || !doc["mu"].is_array()) {
        throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                               "config file lacks array \"mu\"");
      }
      mu = doc["mu"].get<std::vector<double>>();
    }
  }
  RawConfig raw;
  if (have_lambda) raw.lambda = lambda;
  raw.mu = std::move(mu);
  return raw;
}

hetq::SystemConfig resolve_config(const ConfigFlags& flags) {
  RawConfig raw = read_raw(flags);
  if (!raw.lambda || raw.mu.empty()) {
    throw hetq::ModelError(
        hetq::ErrorCode::IndexOutOfRange,
        "need an arrival rate and service rates (--lambda/--mu or --config)");
  }
  return hetq::validate(*raw.lambda, std::move(raw.mu));
}

struct RhoRange {
  double lo = 0.1;
  double hi = 0.9;
  int steps = 9;  // grid size when a deterministic sweep is requested
};

RhoRange parse_rho_range(const std::string& text) {
  RhoRange range;
  std::istringstream stream(text);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(stream, part, ':')) parts.push_back(part);
  try {
    if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("");
    std::size_t used = 0;
    range.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("");
    range.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("");
    if (parts.size() == 3) {
      range.steps = std::stoi(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("");
    }
  } catch (const std::exception&) {
    throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                           "--rho-range expects lo:hi or lo:hi:steps, got " +
                               text);
  }
  if (!(range.lo > 0.0) || !(range.hi < 1.0) || !(range.lo <= range.hi) ||
      range.steps < 1) {
    throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                           "--rho-range needs 0 < lo <= hi < 1 and steps >= 1, got " +
                               text);
  }
  return range;
}

/// Random stable configs: service rates log-uniform in [1, ratio_max]
/// (so the fastest/slowest ratio is bounded by ratio_max), utilization
/// uniform in the requested range, lambda = rho * sum(mu).
std::vector<hetq::SystemConfig> random_grid(int count, std::size_t n,
                                            const RhoRange& range,
                                            double ratio_max,
                                            std::uint64_t seed) {
  if (count < 0) {
    throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                           "--random must be non-negative");
  }
  if (n == 0) {
    throw hetq::ModelError(hetq::ErrorCode::EmptyServerList,
                           "--n must be at least 1");
  }
  if (!(ratio_max >= 1.0)) {
    throw hetq::ModelError(hetq::ErrorCode::IndexOutOfRange,
                           "--ratio-max must be >= 1");
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> log_rate(0.0, std::log(ratio_max));
  std::uniform_real_distribution<double> rho_draw(range.lo, range.hi);
  std::vector<hetq::SystemConfig> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::vector<double> mu(n);
    for (double& rate : mu) rate = std::exp(log_rate(gen));
    const double rho = rho_draw(gen);
    double total = 0.0;
    for (double rate : mu) total += rate;
    try {
      grid.push_back(hetq::validate(rho * total, std::move(mu)));
    } catch (const hetq::ModelError& err) {
      std::cerr << "skipping unstable grid point " << i << ": " << err.what()
                << "\n";
    }
  }
  return grid;
}

json config_json(const hetq::SystemConfig& config) {
  return json{{"lambda", config.lambda()}, {"mu", config.mu()}};
}

json report_json(const hetq::MetricsReport& report) {
  return json{
      {"p0", report.p0},
      {"rho", report.rho},
      {"busy", report.busy},
      {"busy_idle", report.busy_idle},
      {"effective_rate", report.effective_rate},
      {"prob_all_busy", report.prob_all_busy},
      {"p_k", report.p_k},
      {"mean_customers", report.mean_customers},
      {"mean_sojourn", report.mean_sojourn},
  };
}

// ---------------------------------------------------------------- analyze

int run_analyze(const ConfigFlags& flags, const std::string& format,
                const std::string& out_path) {
  const hetq::SystemConfig config = resolve_config(flags);
  const hetq::MetricsReport report = hetq::metrics(hetq::solve(config));

  std::string text;
  if (format == "csv") {
    std::ostringstream csv;
    csv << "metric,value\n";
    for (const auto& [name, value] : hetq::report_entries(report)) {
      csv << name << ',' << fmt(value) << '\n';
    }
    text = csv.str();
  } else {
    json doc = report_json(report);
    doc.update(config_json(config));
    text = doc.dump(2) + "\n";
  }
  emit(out_path, text);
  return kOk;
}

// ----------------------------------------------------------------- oracle

int run_oracle(const ConfigFlags& flags, std::optional<int> truncation,
               const std::string& format, const std::string& out_path) {
  const hetq::SystemConfig config = resolve_config(flags);
  const hetq::StationaryDistribution dist = hetq::solve(config);
  const hetq::MetricsReport closed = hetq::metrics(dist);
  const hetq::MetricsReport oracle = hetq::oracle_metrics(config, truncation);
  const double residual = hetq::balance_residual(config, dist);
  const int used_truncation =
      truncation.value_or(hetq::StateSpace::default_truncation(config));

  const auto closed_entries = hetq::report_entries(closed);
  const auto oracle_entries = hetq::report_entries(oracle);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < closed_entries.size(); ++i) {
    max_diff = std::max(
        max_diff,
        std::abs(closed_entries[i].second - oracle_entries[i].second));
  }

  std::string text;
  if (format == "csv") {
    std::ostringstream csv;
    csv << "metric,closed_form,oracle,abs_diff\n";
    for (std::size_t i = 0; i < closed_entries.size(); ++i) {
      csv << closed_entries[i].first << ',' << fmt(closed_entries[i].second)
          << ',' << fmt(oracle_entries[i].second) << ','
          << fmt(std::abs(closed_entries[i].second -
                          oracle_entries[i].second))
          << '\n';
    }
    csv << "balance_residual," << fmt(residual) << ",,\n";
    text = csv.str();
  } else {
    json entries = json::array();
    for (std::size_t i = 0; i < closed_entries.size(); ++i) {
      entries.push_back(
          {{"metric", closed_entries[i].first},
           {"closed_form", closed_entries[i].second},
           {"oracle", oracle_entries[i].second},
           {"abs_diff", std::abs(closed_entries[i].second -
                                 oracle_entries[i].second)}});
    }
    json doc{{"entries", std::move(entries)},
             {"balance_residual", residual},
             {"max_abs_diff", max_diff},
             {"tolerance", kOracleTolerance},
             {"truncation", used_truncation}};
    doc.update(config_json(config));
    text = doc.dump(2) + "\n";
  }
  emit(out_path, text);
  return max_diff < kOracleTolerance ? kOk : kToleranceExceeded;
}

// --------------------------------------------------------------- simulate

int run_simulate(const ConfigFlags& flags, double horizon, double warmup,
                 int batches, std::uint64_t seed, const std::string& format,
                 const std::string& out_path) {
  const hetq::SystemConfig config = resolve_config(flags);
  hetq::SimConfig sim_config{config, horizon, warmup, batches, seed};
  const hetq::SimEstimates est = hetq::simulate(sim_config);
  const hetq::ReferenceValues ref = hetq::closed_form_references(config);

  struct Row {
    std::string name;
    hetq::Estimate estimate;
    double reference;
  };
  std::vector<Row> rows;
  for (std::size_t j = 0; j < config.servers(); ++j) {
    rows.push_back({"busy_fraction[" + std::to_string(j) + "]",
                    est.busy_fraction[j], ref.busy[j]});
  }
  for (std::size_t j = 0; j < config.servers(); ++j) {
    rows.push_back({"effective_rate[" + std::to_string(j) + "]",
                    est.effective_rate[j], ref.effective_rate[j]});
  }
  rows.push_back({"mean_queue", est.mean_queue, ref.mean_queue});
  rows.push_back({"mean_customers", est.mean_customers, ref.mean_customers});
  rows.push_back({"mean_sojourn", est.mean_sojourn, ref.mean_sojourn});

  std::string text;
  if (format == "csv") {
    std::ostringstream csv;
    csv << "metric,value,half_width,reference,covered\n";
    for (const Row& row : rows) {
      csv << row.name << ',' << fmt(row.estimate.value) << ','
          << fmt(row.estimate.half_width) << ',' << fmt(row.reference) << ','
          << (row.estimate.covers(row.reference) ? "true" : "false") << '\n';
    }
    text = csv.str();
  } else {
    json metrics_doc = json::object();
    for (const Row& row : rows) {
      metrics_doc[row.name] = {
          {"value", row.estimate.value},
          {"half_width", row.estimate.half_width},
          {"reference", row.reference},
          {"covered", row.estimate.covers(row.reference)}};
    }
    json doc{{"metrics", std::move(metrics_doc)},
             {"event_count", est.event_count},
             {"low_events", est.low_events},
             {"horizon", horizon},
             {"warmup_fraction", warmup},
             {"batches", batches},
             {"seed", seed}};
    doc.update(config_json(config));
    text = doc.dump(2) + "\n";
  }
  emit(out_path, text);
  return kOk;
}

// ----------------------------------------------------------------- verify

int run_verify(const std::vector<hetq::SystemConfig>& grid,
               bool single_config, const std::string& format,
               const std::string& out_path) {
  struct ConfigVerdicts {
    const hetq::SystemConfig* config;
    std::vector<hetq::PairVerdict> pairs;
  };
  std::vector<ConfigVerdicts> all;
  all.reserve(grid.size());
  std::size_t violations = 0;
  for (const hetq::SystemConfig& config : grid) {
    ConfigVerdicts entry{&config,
                         hetq::theorem_check(hetq::solve(config))};
    for (const hetq::PairVerdict& verdict : entry.pairs) {
      if (!verdict.holds()) {
        ++violations;
        std::cerr << "theorem violation: lambda=" << fmt(config.lambda())
                  << " mu=[";
        for (std::size_t j = 0; j < config.mu().size(); ++j) {
          std::cerr << (j ? "," : "") << fmt(config.mu()[j]);
        }
        std::cerr << "] pair fast=" << verdict.faster
                  << " slow=" << verdict.slower
                  << " busy_margin=" << fmt(verdict.busy_margin)
                  << " rate_margin=" << fmt(verdict.rate_margin)
                  << " sandwich_margin=" << fmt(verdict.sandwich_lower_margin)
                  << "\n";
      }
    }
    all.push_back(std::move(entry));
  }

  std::string text;
  if (format == "csv") {
    std::ostringstream csv;
    csv << "config,lambda,rho,faster,slower,mu_faster,mu_slower,"
           "busy_margin,rate_margin,sandwich_margin,holds\n";
    for (std::size_t c = 0; c < all.size(); ++c) {
      const hetq::SystemConfig& config = *all[c].config;
      for (const hetq::PairVerdict& v : all[c].pairs) {
        csv << c << ',' << fmt(config.lambda()) << ',' << fmt(config.rho())
            << ',' << v.faster << ',' << v.slower << ','
            << fmt(config.mu()[v.faster]) << ',' << fmt(config.mu()[v.slower])
            << ',' << fmt(v.busy_margin) << ',' << fmt(v.rate_margin) << ','
            << fmt(v.sandwich_lower_margin) << ','
            << (v.holds() ? "true" : "false") << '\n';
      }
    }
    text = csv.str();
  } else {
    json configs = json::array();
    for (std::size_t c = 0; c < all.size(); ++c) {
      const hetq::SystemConfig& config = *all[c].config;
      json pairs = json::array();
      for (const hetq::PairVerdict& v : all[c].pairs) {
        pairs.push_back({{"faster", v.faster},
                         {"slower", v.slower},
                         {"busy_margin", v.busy_margin},
                         {"rate_margin", v.rate_margin},
                         {"sandwich_margin", v.sandwich_lower_margin},
                         {"holds", v.holds()}});
      }
      configs.push_back({{"index", c},
                         {"lambda", config.lambda()},
                         {"mu", config.mu()},
                         {"rho", config.rho()},
                         {"pairs", std::move(pairs)}});
    }
    json doc{{"configs", std::move(configs)},
             {"violations", violations}};
    if (single_config && !grid.empty()) {
      doc.update(config_json(grid.front()));
    }
    text = doc.dump(2) + "\n";
  }
  emit(out_path, text);
  return violations == 0 ? kOk : kTheoremViolation;
}

// ------------------------------------------------------------------ sweep

int run_sweep(const std::vector<hetq::SystemConfig>& grid,
              const std::string& format, const std::string& out_path) {
  std::ostringstream csv;
  csv << "config,lambda,rho,server,mu,busy,effective_rate,prob_all_busy,"
         "mean_customers,mean_sojourn\n";
  json rows = json::array();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const hetq::SystemConfig& config = grid[c];
    const hetq::MetricsReport report = hetq::metrics(hetq::solve(config));
    for (std::size_t j = 0; j < config.servers(); ++j) {
      if (format == "json") {
        rows.push_back({{"config", c},
                        {"lambda", config.lambda()},
                        {"rho", config.rho()},
                        {"server", j},
                        {"mu", config.mu()[j]},
                        {"busy", report.busy[j]},
                        {"effective_rate", report.effective_rate[j]},
                        {"prob_all_busy", report.prob_all_busy},
                        {"mean_customers", report.mean_customers},
                        {"mean_sojourn", report.mean_sojourn}});
      } else {
        csv << c << ',' << fmt(config.lambda()) << ',' << fmt(config.rho())
            << ',' << j << ',' << fmt(config.mu()[j]) << ','
            << fmt(report.busy[j]) << ',' << fmt(report.effective_rate[j])
            << ',' << fmt(report.prob_all_busy) << ','
            << fmt(report.mean_customers) << ',' << fmt(report.mean_sojourn)
            << '\n';
      }
    }
  }
  emit(out_path, format == "json" ? json{{"rows", std::move(rows)}}.dump(2) + "\n"
                                  : csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact steady-state analysis of M|M|n queues with heterogeneous "
      "servers and random routing among idle servers"};
  app.require_subcommand(1);

  ConfigFlags flags;
  std::string format;
  std::string out_path;
  std::string rho_range_text = "0.1:0.9";
  bool rho_range_given = false;
  int truncation = 0;
  bool truncation_set = false;
  double horizon = 1.0e6;
  double warmup = 0.1;
  int batches = 20;
  std::uint64_t seed = 1;
  int random_count = -1;
  std::size_t grid_n = 2;
  double ratio_max = 10.0;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--lambda", flags.lambda, "Arrival rate")
        ->each([&](const std::string&) { flags.lambda_set = true; });
    cmd->add_option("--mu", flags.mu, "Service rates, comma separated")
        ->delimiter(',');
    cmd->add_option("--config", flags.config_path,
                    "JSON config file with lambda and mu");
  };
  auto add_output_flags = [&](CLI::App* cmd) {
    cmd->add_option("--format", format,
                    "Output format (json unless noted otherwise)")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--out", out_path, "Output path (default stdout)");
  };
  auto add_grid_flags = [&](CLI::App* cmd) {
    cmd->add_option("--random", random_count,
                    "Number of random configs to generate");
    cmd->add_option("--n", grid_n, "Servers per random config");
    cmd->add_option("--rho-range", rho_range_text,
                    "Utilization range lo:hi (optionally lo:hi:steps)")
        ->each([&](const std::string&) { rho_range_given = true; });
    cmd->add_option("--ratio-max", ratio_max,
                    "Upper bound on the service-rate ratio");
    cmd->add_option("--seed", seed, "Seed for random grids");
  };

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Closed-form steady-state metrics for one config");
  add_config_flags(analyze);
  add_output_flags(analyze);

  CLI::App* oracle = app.add_subcommand(
      "oracle", "Compare the closed form against the truncated-chain solve");
  add_config_flags(oracle);
  add_output_flags(oracle);
  oracle->add_option("--truncation", truncation,
                     "Queue-length truncation depth (default: automatic)")
      ->each([&](const std::string&) { truncation_set = true; });

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Discrete-event simulation with closed-form references");
  add_config_flags(simulate);
  add_output_flags(simulate);
  simulate->add_option("--horizon", horizon, "Simulated time horizon");
  simulate->add_option("--warmup", warmup, "Warmup fraction discarded");
  simulate->add_option("--batches", batches, "Batch-means batch count");
  simulate->add_option("--seed", seed, "Simulation seed");

  CLI::App* verify = app.add_subcommand(
      "verify", "Check the server-ordering inequalities on one or many configs");
  add_config_flags(verify);
  add_output_flags(verify);
  add_grid_flags(verify);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Emit long-format metric rows over a config grid");
  add_config_flags(sweep);
  add_output_flags(sweep);
  add_grid_flags(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kBadInput;
  }
  if (format.empty()) format = sweep->parsed() ? "csv" : "json";

  try {
    if (analyze->parsed()) return run_analyze(flags, format, out_path);
    if (oracle->parsed()) {
      return run_oracle(flags,
                        truncation_set ? std::optional<int>(truncation)
                                       : std::nullopt,
                        format, out_path);
    }
    if (simulate->parsed()) {
      return run_simulate(flags, horizon, warmup, batches, seed, format,
                          out_path);
    }

    // verify/sweep accept either a single config or a generated grid.
    const RhoRange range = parse_rho_range(rho_range_text);
    std::vector<hetq::SystemConfig> grid;
    bool single_config = false;
    if (random_count >= 0) {
      grid = random_grid(random_count, grid_n, range, ratio_max, seed);
    } else if (sweep->parsed() && (rho_range_given || !flags.lambda_set)) {
      // Deterministic utilization sweep over fixed service rates;
      // lambda comes from the rho grid, not the flags.
      const RawConfig raw = read_raw(flags);
      if (raw.mu.empty()) {
        throw hetq::ModelError(
            hetq::ErrorCode::IndexOutOfRange,
            "sweep needs service rates (--mu or --config) or --random");
      }
      double total = 0.0;
      for (double rate : raw.mu) total += rate;
      for (int i = 0; i < range.steps; ++i) {
        const double rho =
            range.steps == 1
                ? range.lo
                : range.lo + (range.hi - range.lo) * static_cast<double>(i) /
                                 static_cast<double>(range.steps - 1);
        grid.push_back(hetq::validate(rho * total, raw.mu));
      }
    } else {
      grid.push_back(resolve_config(flags));
      single_config = true;
    }

    if (verify->parsed()) {
      return run_verify(grid, single_config, format, out_path);
    }
    return run_sweep(grid, format, out_path);
  } catch (const hetq::ModelError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kBadInput;
  }
}

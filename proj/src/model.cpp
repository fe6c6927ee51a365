#include "hetq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hetq {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::EmptyServerList: return "EmptyServerList";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SameServer: return "SameServer";
    case ErrorCode::TooManyServers: return "TooManyServers";
    case ErrorCode::BadTruncation: return "BadTruncation";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::SingularSystem: return "SingularSystem";
  }
  return "Unknown";
}

SystemConfig::SystemConfig(double lambda, std::vector<double> mu)
    : lambda_(lambda), mu_(std::move(mu)) {
  if (mu_.empty()) {
    throw ModelError(ErrorCode::EmptyServerList, "at least one server is required");
  }
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) {
    throw ModelError(ErrorCode::NonPositiveRate, "arrival rate must be positive and finite");
  }
  for (std::size_t j = 0; j < mu_.size(); ++j) {
    if (!(mu_[j] > 0.0) || !std::isfinite(mu_[j])) {
      std::ostringstream msg;
      msg << "service rate for server " << j << " must be positive and finite";
      throw ModelError(ErrorCode::NonPositiveRate, msg.str());
    }
  }
  mu_total_ = std::accumulate(mu_.begin(), mu_.end(), 0.0);
  if (!(lambda_ < mu_total_)) {
    std::ostringstream msg;
    msg << "unstable: lambda = " << lambda_ << " must be smaller than the total service rate "
        << mu_total_;
    throw ModelError(ErrorCode::Unstable, msg.str());
  }
}

SystemConfig validate(double lambda, std::vector<double> mu) {
  return SystemConfig(lambda, std::move(mu));
}

BoundaryState::BoundaryState(std::vector<std::size_t> busy) : busy_(std::move(busy)) {
  std::sort(busy_.begin(), busy_.end());
  busy_.erase(std::unique(busy_.begin(), busy_.end()), busy_.end());
}

BoundaryState BoundaryState::from_mask(std::uint64_t mask) {
  std::vector<std::size_t> busy;
  for (std::size_t j = 0; mask != 0; ++j, mask >>= 1) {
    if (mask & 1u) busy.push_back(j);
  }
  BoundaryState state;
  state.busy_ = std::move(busy);
  return state;
}

BoundaryState BoundaryState::all_busy(std::size_t n) {
  BoundaryState state;
  state.busy_.resize(n);
  std::iota(state.busy_.begin(), state.busy_.end(), std::size_t{0});
  return state;
}

bool BoundaryState::contains(std::size_t server) const {
  return std::binary_search(busy_.begin(), busy_.end(), server);
}

std::uint64_t BoundaryState::mask() const {
  std::uint64_t mask = 0;
  for (std::size_t j : busy_) {
    if (j >= 64) {
      throw ModelError(ErrorCode::IndexOutOfRange, "bit encoding supports at most 64 servers");
    }
    mask |= std::uint64_t{1} << j;
  }
  return mask;
}

std::vector<std::pair<std::string, double>> report_entries(const MetricsReport& report) {
  std::vector<std::pair<std::string, double>> entries;
  const std::size_t n = report.busy.size();
  entries.reserve(5 + 2 * n + report.p_k.size() + n * n);
  entries.emplace_back("p0", report.p0);
  entries.emplace_back("rho", report.rho);
  entries.emplace_back("prob_all_busy", report.prob_all_busy);
  entries.emplace_back("mean_customers", report.mean_customers);
  entries.emplace_back("mean_sojourn", report.mean_sojourn);
  for (std::size_t l = 0; l < n; ++l) {
    entries.emplace_back("busy[" + std::to_string(l) + "]", report.busy[l]);
  }
  for (std::size_t l = 0; l < n; ++l) {
    entries.emplace_back("effective_rate[" + std::to_string(l) + "]", report.effective_rate[l]);
  }
  for (std::size_t k = 0; k < report.p_k.size(); ++k) {
    entries.emplace_back("p_k[" + std::to_string(k) + "]", report.p_k[k]);
  }
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t m = 0; m < n; ++m) {
      if (l == m) continue;
      entries.emplace_back(
          "busy_idle[" + std::to_string(l) + "][" + std::to_string(m) + "]",
          report.busy_idle[l][m]);
    }
  }
  return entries;
}

}  // namespace hetq

#include "hetq/esp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hetq/model.hpp"

namespace hetq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_positive(std::span<const double> values) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!(values[j] > 0.0)) {
      throw ModelError(ErrorCode::NegativeValue,
                       "esp input at index " + std::to_string(j) + " is not positive");
    }
  }
}

// Marks retained positions, rejecting out-of-range exclusions.
std::vector<bool> retained_mask(std::size_t n, std::span<const std::size_t> excluded) {
  std::vector<bool> keep(n, true);
  for (std::size_t idx : excluded) {
    if (idx >= n) {
      throw ModelError(ErrorCode::IndexOutOfRange,
                       "excluded index " + std::to_string(idx) + " is out of range");
    }
    keep[idx] = false;
  }
  return keep;
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

EspTable build_table(std::vector<double> values) {
  EspTable table;
  table.e.assign(values.size() + 1, 0.0);
  table.e[0] = 1.0;
  std::size_t added = 0;
  for (double x : values) {
    ++added;
    for (std::size_t k = added; k >= 1; --k) {
      table.e[k] += x * table.e[k - 1];
    }
  }
  table.values = std::move(values);
  return table;
}

LogEspTable build_log_table(const std::vector<double>& values) {
  LogEspTable table;
  table.n = values.size();
  table.log_e.assign(values.size() + 1, kNegInf);
  table.log_e[0] = 0.0;
  std::size_t added = 0;
  for (double x : values) {
    const double log_x = std::log(x);
    ++added;
    for (std::size_t k = added; k >= 1; --k) {
      table.log_e[k] = log_sum_exp(table.log_e[k], log_x + table.log_e[k - 1]);
    }
  }
  return table;
}

std::vector<double> retained_values(std::span<const double> values,
                                    std::span<const std::size_t> excluded) {
  check_positive(values);
  const std::vector<bool> keep = retained_mask(values.size(), excluded);
  std::vector<double> kept;
  kept.reserve(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (keep[j]) kept.push_back(values[j]);
  }
  return kept;
}

ScaledEspTable build_scaled_table(const std::vector<double>& values, std::size_t total) {
  if (total < values.size()) {
    throw ModelError(ErrorCode::IndexOutOfRange,
                     "scale size is smaller than the number of elements");
  }
  ScaledEspTable table;
  table.total = total;
  table.f.assign(values.size() + 1, 0.0);
  table.f[0] = 1.0;
  std::size_t added = 0;
  for (double x : values) {
    ++added;
    for (std::size_t k = added; k >= 1; --k) {
      table.f[k] += x * table.f[k - 1] / static_cast<double>(total - k + 1);
    }
  }
  return table;
}

}  // namespace

double LogEspTable::at(int k) const {
  if (k < 0 || k > static_cast<int>(n)) return kNegInf;
  return log_e[static_cast<std::size_t>(k)];
}

EspTable esp_all(std::span<const double> values) {
  check_positive(values);
  return build_table(std::vector<double>(values.begin(), values.end()));
}

EspTable esp_excluding(std::span<const double> values, std::span<const std::size_t> excluded) {
  return build_table(retained_values(values, excluded));
}

EspTable esp_excluding(std::span<const double> values,
                       std::initializer_list<std::size_t> excluded) {
  return esp_excluding(values, std::span<const std::size_t>(excluded.begin(), excluded.size()));
}

LogEspTable esp_all_log(std::span<const double> values) {
  check_positive(values);
  return build_log_table(std::vector<double>(values.begin(), values.end()));
}

LogEspTable esp_excluding_log(std::span<const double> values,
                              std::span<const std::size_t> excluded) {
  return build_log_table(retained_values(values, excluded));
}

LogEspTable esp_excluding_log(std::span<const double> values,
                              std::initializer_list<std::size_t> excluded) {
  return esp_excluding_log(values,
                           std::span<const std::size_t>(excluded.begin(), excluded.size()));
}

ScaledEspTable esp_scaled(std::span<const double> values, std::size_t total) {
  check_positive(values);
  return build_scaled_table(std::vector<double>(values.begin(), values.end()), total);
}

ScaledEspTable esp_scaled_excluding(std::span<const double> values,
                                    std::span<const std::size_t> excluded, std::size_t total) {
  return build_scaled_table(retained_values(values, excluded), total);
}

ScaledEspTable esp_scaled_excluding(std::span<const double> values,
                                    std::initializer_list<std::size_t> excluded,
                                    std::size_t total) {
  return esp_scaled_excluding(
      values, std::span<const std::size_t>(excluded.begin(), excluded.size()), total);
}

}  // namespace hetq

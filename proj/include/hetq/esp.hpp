#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hetq {

/// Elementary symmetric polynomials of a set of positive reals:
/// e[k] = sum over all size-k subsets of the product of their elements,
/// with e[0] = 1 and e[k] = 0 outside 0..n.
struct EspTable {
  std::vector<double> values;  // the inputs the table was built from
  std::vector<double> e;       // e[k] for k = 0..values.size()

  std::size_t size() const { return values.size(); }
  double at(int k) const {
    if (k < 0 || k > static_cast<int>(values.size())) return 0.0;
    return e[static_cast<std::size_t>(k)];
  }
};

/// Same table in log space, for sets large enough that e[k] overflows.
/// log_e[k] = log(e[k]); out-of-range k maps to -infinity.
struct LogEspTable {
  std::size_t n = 0;
  std::vector<double> log_e;

  double at(int k) const;
};

/// Builds the full table by the one-element-at-a-time recurrence
/// e'[k] = e[k] + x * e[k-1], in O(n^2). Inputs must be positive;
/// the empty set gives e = [1].
EspTable esp_all(std::span<const double> values);

/// Table over the input set with the given positions removed. Rebuilt
/// from scratch over the retained elements; deflating the full table
/// subtracts like-signed terms and loses precision, so it is avoided.
EspTable esp_excluding(std::span<const double> values, std::span<const std::size_t> excluded);
EspTable esp_excluding(std::span<const double> values,
                       std::initializer_list<std::size_t> excluded);

LogEspTable esp_all_log(std::span<const double> values);
LogEspTable esp_excluding_log(std::span<const double> values,
                              std::span<const std::size_t> excluded);
LogEspTable esp_excluding_log(std::span<const double> values,
                              std::initializer_list<std::size_t> excluded);

/// ESP table with the falling-factorial scale folded in:
/// f[k] = ((total-k)!/total!) * e_k(values). The divisor is applied one
/// factor 1/(total-k+1) at a time inside the recurrence, so every
/// intermediate stays bounded by the final (small) terms even when the
/// raw e_k would overflow.
struct ScaledEspTable {
  std::size_t total = 0;  // the N in the (N-k)!/N! scale
  std::vector<double> f;

  std::size_t size() const { return f.empty() ? 0 : f.size() - 1; }
  double at(int k) const {
    if (k < 0 || k >= static_cast<int>(f.size())) return 0.0;
    return f[static_cast<std::size_t>(k)];
  }
};

/// total must be >= values.size(); the scale normally uses the full set
/// size even when the table is built over a subset.
ScaledEspTable esp_scaled(std::span<const double> values, std::size_t total);
ScaledEspTable esp_scaled_excluding(std::span<const double> values,
                                    std::span<const std::size_t> excluded, std::size_t total);
ScaledEspTable esp_scaled_excluding(std::span<const double> values,
                                    std::initializer_list<std::size_t> excluded,
                                    std::size_t total);

}  // namespace hetq

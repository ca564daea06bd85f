#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "detphoton/records.hpp"

namespace detphoton {

/// A counting-statistics estimate. Ratios carry first-order (delta method)
/// errors computed from the multinomial covariance of the per-shot indicators.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
};

/// Associative partial counters; merging shards in any grouping gives the same totals.
struct ObservableCounts {
  std::uint64_t shots = 0;
  std::uint64_t d2 = 0;
  std::uint64_t d3 = 0;
  std::uint64_t d23 = 0;
  std::uint64_t heralded = 0;
  std::uint64_t h_d2 = 0;
  std::uint64_t h_d3 = 0;
  std::uint64_t h_d23 = 0;

  void add(bool heralded_shot, bool click_d2, bool click_d3) {
    ++shots;
    d2 += click_d2;
    d3 += click_d3;
    d23 += click_d2 && click_d3;
    if (heralded_shot) {
      ++heralded;
      h_d2 += click_d2;
      h_d3 += click_d3;
      h_d23 += click_d2 && click_d3;
    }
  }
  ObservableCounts& operator+=(const ObservableCounts& o);
  bool operator==(const ObservableCounts&) const = default;
};

/// Unconditional quantities use every shot; *_1, alpha and the numerator of
/// g_si use the heralded shots only. An empty optional marks an estimate whose
/// denominator count is zero.
struct ObservableEstimates {
  std::optional<Estimate> P2, P3, P23, g2, eta_D;
  std::optional<Estimate> p2_1, p3_1, p23_1, alpha, g_si;

  std::map<std::string, std::optional<Estimate>> as_map() const;
};

ObservableCounts count_observables(const DetectionRecord& record);
ObservableEstimates estimate_observables(const ObservableCounts& counts);
/// Throws DomainError on an empty record.
ObservableEstimates estimate_observables(const DetectionRecord& record);

}  // namespace detphoton

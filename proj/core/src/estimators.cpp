#include "detphoton/estimators.hpp"

#include <cmath>

#include "detphoton/errors.hpp"

namespace detphoton {
namespace {

double frac(std::uint64_t k, std::uint64_t n) {
  return static_cast<double>(k) / static_cast<double>(n);
}

std::optional<Estimate> proportion(std::uint64_t k, std::uint64_t n) {
  if (n == 0) return std::nullopt;
  const double p = frac(k, n);
  return Estimate{p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

double nonneg_sqrt(double v) { return v > 0.0 ? std::sqrt(v) : 0.0; }

// P23 / (P2 P3) over n shots with indicator means p2, p3 and p23.
std::optional<Estimate> coincidence_ratio(std::uint64_t k2, std::uint64_t k3, std::uint64_t k23,
                                          std::uint64_t n) {
  if (n == 0 || k2 == 0 || k3 == 0) return std::nullopt;
  const double p2 = frac(k2, n);
  const double p3 = frac(k3, n);
  const double p23 = frac(k23, n);
  const double g = p23 / (p2 * p3);
  // Gradient of g with respect to (p2, p3, p23).
  const double d2 = -g / p2;
  const double d3 = -g / p3;
  const double d23 = 1.0 / (p2 * p3);
  // X23 = X2 X3, so every cross moment involving X23 is p23.
  const double s22 = p2 * (1.0 - p2);
  const double s33 = p3 * (1.0 - p3);
  const double sxx = p23 * (1.0 - p23);
  const double s23 = p23 - p2 * p3;
  const double s2x = p23 * (1.0 - p2);
  const double s3x = p23 * (1.0 - p3);
  const double var = d2 * d2 * s22 + d3 * d3 * s33 + d23 * d23 * sxx + 2.0 * d2 * d3 * s23 +
                     2.0 * d2 * d23 * s2x + 2.0 * d3 * d23 * s3x;
  return Estimate{g, nonneg_sqrt(var / static_cast<double>(n)), n};
}

std::optional<Estimate> sum_estimate(const ObservableCounts& c) {
  if (c.shots == 0) return std::nullopt;
  const double p2 = frac(c.d2, c.shots);
  const double p3 = frac(c.d3, c.shots);
  const double p23 = frac(c.d23, c.shots);
  const double var = p2 * (1.0 - p2) + p3 * (1.0 - p3) + 2.0 * (p23 - p2 * p3);
  return Estimate{p2 + p3, nonneg_sqrt(var / static_cast<double>(c.shots)), c.shots};
}

// g_si = a / (h s) with a = E[H S], h = E[H], s = E[S], S = X2 + X3.
std::optional<Estimate> cross_correlation(const ObservableCounts& c) {
  if (c.shots == 0 || c.heralded == 0 || c.d2 + c.d3 == 0) return std::nullopt;
  const double n = static_cast<double>(c.shots);
  const double a = frac(c.h_d2 + c.h_d3, c.shots);
  const double h = frac(c.heralded, c.shots);
  const double s = frac(c.d2 + c.d3, c.shots);
  const double p23 = frac(c.d23, c.shots);
  const double hp23 = frac(c.h_d23, c.shots);
  const double g = a / (h * s);

  const double ehs2 = a + 2.0 * hp23;  // E[H S^2], since S^2 = S + 2 X23
  const double v_a = ehs2 - a * a;
  const double v_h = h * (1.0 - h);
  const double v_s = s + 2.0 * p23 - s * s;
  const double c_ah = a * (1.0 - h);
  const double c_as = ehs2 - a * s;
  const double c_hs = a - h * s;

  const double da = 1.0 / (h * s);
  const double dh = -g / h;
  const double ds = -g / s;
  const double var = da * da * v_a + dh * dh * v_h + ds * ds * v_s + 2.0 * da * dh * c_ah +
                     2.0 * da * ds * c_as + 2.0 * dh * ds * c_hs;
  return Estimate{g, nonneg_sqrt(var / n), c.shots};
}

}  // namespace

ObservableCounts& ObservableCounts::operator+=(const ObservableCounts& o) {
  shots += o.shots;
  d2 += o.d2;
  d3 += o.d3;
  d23 += o.d23;
  heralded += o.heralded;
  h_d2 += o.h_d2;
  h_d3 += o.h_d3;
  h_d23 += o.h_d23;
  return *this;
}

std::map<std::string, std::optional<Estimate>> ObservableEstimates::as_map() const {
  return {{"P2", P2},     {"P3", P3},     {"P23", P23},     {"g2", g2},       {"eta_D", eta_D},
          {"p2_1", p2_1}, {"p3_1", p3_1}, {"p23_1", p23_1}, {"alpha", alpha}, {"g_si", g_si}};
}

ObservableCounts count_observables(const DetectionRecord& record) {
  ObservableCounts c;
  for (const ShotEntry& e : record.shots) c.add(e.heralded(), e.click_d2(), e.click_d3());
  return c;
}

ObservableEstimates estimate_observables(const ObservableCounts& c) {
  ObservableEstimates out;
  out.P2 = proportion(c.d2, c.shots);
  out.P3 = proportion(c.d3, c.shots);
  out.P23 = proportion(c.d23, c.shots);
  out.g2 = coincidence_ratio(c.d2, c.d3, c.d23, c.shots);
  out.eta_D = sum_estimate(c);
  out.p2_1 = proportion(c.h_d2, c.heralded);
  out.p3_1 = proportion(c.h_d3, c.heralded);
  out.p23_1 = proportion(c.h_d23, c.heralded);
  out.alpha = coincidence_ratio(c.h_d2, c.h_d3, c.h_d23, c.heralded);
  out.g_si = cross_correlation(c);
  return out;
}

ObservableEstimates estimate_observables(const DetectionRecord& record) {
  if (record.shots.empty()) throw DomainError("cannot estimate from an empty record");
  return estimate_observables(count_observables(record));
}

}  // namespace detphoton

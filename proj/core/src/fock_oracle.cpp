#include "detphoton/fock_oracle.hpp"

#include <cmath>
#include <string>

#include "detphoton/errors.hpp"

namespace detphoton::fock {
namespace {

void check_max_number(int n_max) {
  if (n_max < 1) throw DomainError("n_max must be >= 1");
}

double thermal_tail(double n_mean, int n_max) {
  if (n_mean == 0.0) return 0.0;
  const double ratio = n_mean / (1.0 + n_mean);
  return std::pow(ratio, n_max + 1);
}

void check_tail(double tail, int n_max) {
  if (tail > kTailBound) {
    throw TruncationError("truncation at n_max=" + std::to_string(n_max) + " drops " +
                              std::to_string(tail) + " of the distribution",
                          tail);
  }
}

// Binomial(n, p) pmf at k, in log space so large n with p near 1 does not underflow.
double binomial_pmf(int n, int k, double p) {
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double log_choose =
      std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_choose + k * std::log(p) + (n - k) * std::log1p(-p));
}

}  // namespace

double PhotonNumberDist::total() const {
  double s = 0.0;
  for (double p : probs) s += p;
  return s;
}

double PhotonNumberDist::mean() const {
  double s = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) s += static_cast<double>(n) * probs[n];
  return s;
}

PhotonNumberDist tms_distribution(double n_mean, int n_max) {
  if (!(n_mean >= 0.0) || !std::isfinite(n_mean)) throw DomainError("n_mean must be >= 0");
  check_max_number(n_max);
  check_tail(thermal_tail(n_mean, n_max), n_max);

  PhotonNumberDist d;
  d.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double ratio = n_mean / (1.0 + n_mean);
  double w = 1.0 / (1.0 + n_mean);
  for (int n = 0; n <= n_max; ++n) {
    d.probs[n] = w;
    w *= ratio;
  }
  return d;
}

PhotonNumberDist conditional_distribution(double n_mean, double eta_s, int n_max,
                                          double bg_signal) {
  if (!(eta_s > 0.0 && eta_s <= 1.0)) throw DomainError("eta_s must be in (0,1]");
  if (!(bg_signal >= 0.0 && bg_signal < 1.0)) throw DomainError("bg_signal must be in [0,1)");
  PhotonNumberDist d = tms_distribution(n_mean, n_max);
  // Weight of a D1 miss given n quanta: the signal shares the atomic number.
  double miss = 1.0;
  double norm = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    d.probs[n] *= 1.0 - (1.0 - bg_signal) * miss;
    norm += d.probs[n];
    miss *= 1.0 - eta_s;
  }
  if (norm == 0.0) throw DomainError("heralding probability is zero");
  // Renormalizing by the herald probability magnifies the dropped thermal tail.
  check_tail(thermal_tail(n_mean, n_max) / norm, n_max);
  for (double& p : d.probs) p /= norm;
  return d;
}

PhotonNumberDist apply_loss(const PhotonNumberDist& dist, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must be in [0,1]");
  PhotonNumberDist out;
  out.probs.assign(dist.probs.size(), 0.0);
  for (int n = 0; n <= dist.n_max(); ++n) {
    if (dist.probs[n] == 0.0) continue;
    for (int k = 0; k <= n; ++k) out.probs[k] += dist.probs[n] * binomial_pmf(n, k, eta);
  }
  return out;
}

DetectionProbs detection_probs(const PhotonNumberDist& dist, double eta_total) {
  if (!(eta_total >= 0.0 && eta_total <= 1.0)) throw DomainError("eta_total must be in [0,1]");
  const double half = 0.5 * eta_total;
  DetectionProbs out;
  for (int n = 1; n <= dist.n_max(); ++n) {
    const double pn = dist.probs[n];
    if (pn == 0.0) continue;
    out.click_one += pn * -std::expm1(n * std::log1p(-half));
    out.click_either += pn * -std::expm1(n * std::log1p(-eta_total));
    // Group the trinomial routing by the number k of detected quanta; the k
    // quanta split 50:50 and hit both detectors unless all land on one side.
    double both = 0.0;
    for (int k = 2; k <= n; ++k) {
      both += binomial_pmf(n, k, eta_total) * -std::expm1((1 - k) * std::log(2.0));
    }
    out.coincidence += pn * both;
  }
  return out;
}

int required_max_number(double n_mean, int floor, double normalization) {
  int n_max = floor < 1 ? 1 : floor;
  if (n_mean <= 0.0) return n_max;
  const double bound = kTailBound * normalization;
  const double ratio = n_mean / (1.0 + n_mean);
  const double needed = std::log(bound) / std::log(ratio) - 1.0;
  if (needed > n_max) n_max = static_cast<int>(std::ceil(needed));
  while (thermal_tail(n_mean, n_max) > bound) ++n_max;
  return n_max;
}

}  // namespace detphoton::fock

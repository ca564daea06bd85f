#include "detphoton/analytic_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detphoton/errors.hpp"

namespace detphoton {
namespace {

void require(bool ok, const char* field, const char* range) {
  if (!ok) throw DomainError(std::string(field) + " must be in " + range);
}

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }
bool in_half_open_unit(double x) { return x > 0.0 && x <= 1.0; }

// Neumaier compensated sum; the protocol sums run to ~10^4 terms.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

void SourceParams::validate() const {
  require(in_open_unit(p1), "p1", "(0,1)");
  require(in_half_open_unit(eta_s), "eta_s", "(0,1]");
  require(in_half_open_unit(eta_i0), "eta_i0", "(0,1]");
  require(tau_c > 0.0, "tau_c", "(0,inf]");
  require(t0 > 0.0 && std::isfinite(t0), "t0", "(0,inf)");
  require(bg_idler >= 0.0 && bg_idler < 1.0, "bg_idler", "[0,1)");
  require(bg_signal >= 0.0 && bg_signal < 1.0, "bg_signal", "[0,1)");
  require(in_half_open_unit(read_factor), "read_factor", "(0,1]");
  require(in_half_open_unit(meta_eps_s), "meta_eps_s", "(0,1]");
  require(in_half_open_unit(meta_eps_i), "meta_eps_i", "(0,1]");
}

double SourceParams::mean_excitation() const { return detphoton::mean_excitation(p1, eta_s); }

double SourceParams::herald_probability() const {
  return 1.0 - (1.0 - p1) * (1.0 - bg_signal);
}

double mean_excitation(double p1, double eta_s) {
  require(in_open_unit(p1), "p1", "(0,1)");
  require(in_half_open_unit(eta_s), "eta_s", "(0,1]");
  return p1 / (eta_s * (1.0 - p1));
}

double pi_click(double eta, double p1, double eta_s) {
  return pi_click_with_herald_background(eta, p1, eta_s, 0.0);
}

double pi_click_with_herald_background(double eta, double p1, double eta_s, double bg_signal) {
  require(eta >= 0.0 && eta <= 1.0, "eta", "[0,1]");
  require(bg_signal >= 0.0 && bg_signal < 1.0, "bg_signal", "[0,1)");
  const double n = mean_excitation(p1, eta_s);
  // With s = eta_s n, a = eta n and b = s + eta (1 - eta_s) n, the heralded
  // no-click probability is (1 - eta)(1 + s) / ((1 + a)(1 + b)) for
  // bg_signal = 0; subtracting from one by hand leaves only positive terms.
  const double s = eta_s * n;
  const double a = eta * n;
  const double unheralded_part = (1.0 - eta_s) * n;
  const double b = s + eta * unheralded_part;
  const double k = 1.0 + n * (2.0 + s + eta * unheralded_part);
  const double num = eta * (s * k + bg_signal * (1.0 + a) * unheralded_part);
  const double den = (s + bg_signal) * (1.0 + a) * (1.0 + b);
  return std::min(1.0, num / den);
}

double herald_probability(double n_mean, double eta_s) {
  require(n_mean >= 0.0 && std::isfinite(n_mean), "n_mean", "[0,inf)");
  require(in_half_open_unit(eta_s), "eta_s", "(0,1]");
  const double x = eta_s * n_mean;
  return x / (1.0 + x);
}

double memory_efficiency(double tau, const SourceParams& sp) {
  require(tau >= 0.0, "tau", "[0,inf)");
  const double x = tau / sp.tau_c;
  return sp.read_factor * sp.eta_i0 * std::exp(-x * x);
}

ConditionalProbs conditional_probs(double tau, const SourceParams& sp) {
  sp.validate();
  const double eta = memory_efficiency(tau, sp);
  const double bg = sp.bg_idler;
  const double single =
      pi_click_with_herald_background(0.5 * eta, sp.p1, sp.eta_s, sp.bg_signal);
  const double either = pi_click_with_herald_background(eta, sp.p1, sp.eta_s, sp.bg_signal);

  ConditionalProbs out;
  out.tau = tau;
  // Independent background: no-click probabilities multiply.
  out.p2_1 = bg + (1.0 - bg) * single;
  out.p3_1 = out.p2_1;
  const double none = (1.0 - bg) * (1.0 - bg) * (1.0 - either);
  out.p23_1 = out.p2_1 + out.p3_1 - (1.0 - none);
  if (out.p23_1 < 0.0) out.p23_1 = 0.0;  // rounding only; exact value is >= 0
  out.alpha = ratio(out.p23_1, out.p2_1 * out.p3_1);
  return out;
}

UnconditionalProbs unconditional_probs(const SourceParams& sp, double tau) {
  sp.validate();
  const double eta = memory_efficiency(tau, sp);
  const double bg = sp.bg_idler;
  const double x = 0.5 * eta * sp.mean_excitation();

  UnconditionalProbs out;
  out.p2 = (x + bg) / (1.0 + x);
  out.p3 = out.p2;
  out.p23 = (2.0 * x * x + 2.0 * bg * x + bg * bg * (1.0 + x)) / ((1.0 + x) * (1.0 + 2.0 * x));
  const ConditionalProbs c = conditional_probs(tau, sp);
  out.g_si = ratio(c.p2_1 + c.p3_1, out.p2 + out.p3);
  return out;
}

ProtocolObservables protocol_observables(const SourceParams& sp, int trials,
                                         double halt_offset) {
  sp.validate();
  if (trials < 1) throw DomainError("N must be >= 1");
  if (!(halt_offset >= 0.0)) throw DomainError("halt_offset must be >= 0");

  const double q1 = sp.herald_probability();
  const double log_miss = std::log1p(-q1);
  const double bg = sp.bg_idler;

  CompensatedSum p2;
  CompensatedSum p23;
  for (int j = 1; j <= trials; ++j) {
    const double storage = static_cast<double>(trials - j) * sp.t0 + halt_offset;
    if (storage < 0.0) throw DomainError("negative storage time");
    const double w = q1 * std::exp(static_cast<double>(j - 1) * log_miss);
    const ConditionalProbs c = conditional_probs(storage, sp);
    p2.add(w * c.p2_1);
    p23.add(w * c.p23_1);
  }
  const double herald_fraction = -std::expm1(static_cast<double>(trials) * log_miss);
  const double residual = std::exp(static_cast<double>(trials) * log_miss);

  ProtocolObservables out;
  out.trials = trials;
  out.delta_t = static_cast<double>(trials) * sp.t0;
  out.herald_fraction = herald_fraction;
  out.P2_h = p2.value() / herald_fraction;
  out.P3_h = out.P2_h;
  out.P23_h = p23.value() / herald_fraction;
  // The unheralded branch only sees background in the read gate.
  out.P2 = p2.value() + residual * bg;
  out.P3 = out.P2;
  out.P23 = p23.value() + residual * bg * bg;
  out.g2 = ratio(out.P23, out.P2 * out.P3);
  out.eta_D = out.P2 + out.P3;
  out.alpha_h = ratio(out.P23_h, out.P2_h * out.P3_h);
  out.g_si_h = ratio(out.P2_h + out.P3_h, out.P2 + out.P3);
  return out;
}

std::vector<ProtocolObservables> protocol_curve(const SourceParams& sp, int max_trials,
                                                double halt_offset) {
  std::vector<ProtocolObservables> out;
  out.reserve(max_trials > 0 ? static_cast<std::size_t>(max_trials) : 0);
  for (int n = 1; n <= max_trials; ++n) out.push_back(protocol_observables(sp, n, halt_offset));
  return out;
}

}  // namespace detphoton

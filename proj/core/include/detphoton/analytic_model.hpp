#pragma once

#include <optional>
#include <vector>

namespace detphoton {

/// Parameters of one write/read channel of the ensemble source.
///
/// `p1` is the primary input: the probability per write trial that the
/// signal photons produce at least one detection at D1. The mean excitation
/// number is always derived from it (see mean_excitation). Times are in
/// seconds; `tau_c` may be +infinity to switch memory decay off.
struct SourceParams {
  double p1 = 0.003;
  double eta_s = 0.08;
  double eta_i0 = 0.075;
  double tau_c = 31.5e-6;
  double t0 = 300e-9;
  double bg_idler = 0.0;   // per idler detector per read gate
  double bg_signal = 0.0;  // per D1 gate, i.e. per write trial
  double read_factor = 1.0;
  // Passive loss factors. Only used to report intrinsic efficiencies.
  double meta_eps_s = 1.0;
  double meta_eps_i = 1.0;

  /// Throws DomainError naming the first offending field.
  void validate() const;

  double mean_excitation() const;
  /// Probability per write trial that D1 fires, counting background clicks.
  double herald_probability() const;
  double intrinsic_eta_s() const { return eta_s / meta_eps_s; }
  double intrinsic_eta_i0() const { return eta_i0 / meta_eps_i; }
  bool operator==(const SourceParams&) const = default;
};

struct ConditionalProbs {
  double tau = 0.0;
  double p2_1 = 0.0;
  double p3_1 = 0.0;
  double p23_1 = 0.0;
  std::optional<double> alpha;  // empty when p2_1 * p3_1 == 0
};

/// Idler statistics of every read, regardless of heralding.
struct UnconditionalProbs {
  double p2 = 0.0;
  double p3 = 0.0;
  double p23 = 0.0;
  std::optional<double> g_si;  // empty when p2 + p3 == 0
};

struct ProtocolObservables {
  int trials = 0;        // N
  double delta_t = 0.0;  // N * t0, seconds
  double P2 = 0.0;
  double P3 = 0.0;
  double P23 = 0.0;
  std::optional<double> g2;
  double eta_D = 0.0;
  // Probability that some trial heralded, and the statistics restricted to those shots.
  double herald_fraction = 0.0;
  double P2_h = 0.0;
  double P3_h = 0.0;
  double P23_h = 0.0;
  std::optional<double> alpha_h;
  std::optional<double> g_si_h;
};

/// sinh^2(chi) = p1 / (eta_s (1 - p1)).
double mean_excitation(double p1, double eta_s);

/// Inverse of mean_excitation: 1 - 1/(1 + eta_s n), evaluated without cancellation.
double herald_probability(double n_mean, double eta_s);

/// Probability that a detector of efficiency `eta` fires at least once on the
/// heralded atomic state. Evaluated in a cancellation-free rearrangement of
///   1 - (1/p1) [1/(1 + eta n) - 1/(1 + (eta_s + eta (1 - eta_s)) n)].
double pi_click(double eta, double p1, double eta_s);

/// As pi_click, with heralds that may also come from a D1 background click
/// of probability `bg_signal` per trial. Reduces to pi_click at bg_signal = 0.
double pi_click_with_herald_background(double eta, double p1, double eta_s, double bg_signal);

/// read_factor * eta_i0 * exp(-(tau / tau_c)^2).
double memory_efficiency(double tau, const SourceParams& sp);

ConditionalProbs conditional_probs(double tau, const SourceParams& sp);

UnconditionalProbs unconditional_probs(const SourceParams& sp, double tau);

/// Geometric-trial protocol with Delta t = N t0. `halt_offset` is added to
/// every storage time (zero reproduces the textbook sum).
ProtocolObservables protocol_observables(const SourceParams& sp, int trials,
                                         double halt_offset = 0.0);

/// Convenience: protocol_observables over N = 1..max_trials.
std::vector<ProtocolObservables> protocol_curve(const SourceParams& sp, int max_trials,
                                                double halt_offset = 0.0);

}  // namespace detphoton

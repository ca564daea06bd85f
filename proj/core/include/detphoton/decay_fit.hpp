#pragma once

#include <array>
#include <span>
#include <vector>

#include "detphoton/estimators.hpp"

namespace detphoton {

struct DecayPoint {
  double tau = 0.0;  // storage time, seconds
  Estimate g_si;
};

/// Result of fitting g_si(tau) = 1 + B exp(-tau^2 / tau_c^2).
struct DecayFit {
  double B = 0.0;
  double tau_c = 0.0;
  double residual_norm = 0.0;              // sqrt of the (weighted) sum of squares
  std::array<double, 3> covariance{};      // var(B), cov(B, tau_c), var(tau_c)
  int iterations = 0;
  std::vector<double> objective_history;   // after each accepted step, starting with the initial guess
};

struct FitOptions {
  bool weighted = true;  // weights 1/std_error^2; off for noiseless data
  int max_iterations = 200;
};

double decay_model(double tau, double B, double tau_c);

/// Damped Gauss-Newton. Needs at least three distinct storage times.
/// Throws FitError: kDegenerate when all g_si are equal (B ~ 0, tau_c not
/// identifiable), kNonConvergence when the iteration budget runs out.
DecayFit fit_memory_decay(std::span<const DecayPoint> points, const FitOptions& options = {});

}  // namespace detphoton

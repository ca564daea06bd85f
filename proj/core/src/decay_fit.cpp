#include "detphoton/decay_fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "detphoton/errors.hpp"

namespace detphoton {
namespace {

struct Sample {
  double t;  // tau / scale
  double y;
  double w;
};

double objective(const std::vector<Sample>& s, double b, double u) {
  double f = 0.0;
  for (const Sample& p : s) {
    const double x = p.t / u;
    const double r = p.y - 1.0 - b * std::exp(-x * x);
    f += p.w * r * r;
  }
  return f;
}

// tau where g_si - 1 first falls to half of its peak, linearly interpolated.
double half_amplitude_tau(std::vector<DecayPoint> pts, double amplitude) {
  std::sort(pts.begin(), pts.end(),
            [](const DecayPoint& a, const DecayPoint& b) { return a.tau < b.tau; });
  const double half = 0.5 * amplitude;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double y0 = pts[i - 1].g_si.value - 1.0;
    const double y1 = pts[i].g_si.value - 1.0;
    if (y0 >= half && y1 < half) {
      const double f = (y0 - half) / (y0 - y1);
      return pts[i - 1].tau + f * (pts[i].tau - pts[i - 1].tau);
    }
  }
  return pts.back().tau;
}

}  // namespace

double decay_model(double tau, double B, double tau_c) {
  const double x = tau / tau_c;
  return 1.0 + B * std::exp(-x * x);
}

DecayFit fit_memory_decay(std::span<const DecayPoint> points, const FitOptions& options) {
  if (points.size() < 3) throw FitError(FitError::Kind::kBadInput, "need at least 3 points");
  std::set<double> distinct;
  double y_min = points.front().g_si.value;
  double y_max = y_min;
  for (const DecayPoint& p : points) {
    if (!std::isfinite(p.tau) || p.tau < 0.0 || !std::isfinite(p.g_si.value)) {
      throw FitError(FitError::Kind::kBadInput, "storage times and g_si must be finite");
    }
    if (options.weighted && !(p.g_si.std_error > 0.0 && std::isfinite(p.g_si.std_error))) {
      throw FitError(FitError::Kind::kBadInput, "weighted fit needs positive std_error");
    }
    distinct.insert(p.tau);
    y_min = std::min(y_min, p.g_si.value);
    y_max = std::max(y_max, p.g_si.value);
  }
  if (distinct.size() < 3) throw FitError(FitError::Kind::kBadInput, "need 3 distinct storage times");
  if (y_max - y_min <= 1e-14 * std::max(1.0, std::abs(y_max))) {
    throw FitError(FitError::Kind::kDegenerate,
                   "constant g_si: B = " + std::to_string(y_max - 1.0) +
                       ", tau_c not identifiable");
  }

  const double b0 = y_max - 1.0;
  const double tau0 = half_amplitude_tau({points.begin(), points.end()}, b0);
  const double scale = tau0 > 0.0 ? tau0 : *distinct.rbegin();

  std::vector<Sample> s;
  s.reserve(points.size());
  double y_norm = 0.0;
  for (const DecayPoint& p : points) {
    const double w = options.weighted ? 1.0 / (p.g_si.std_error * p.g_si.std_error) : 1.0;
    s.push_back({p.tau / scale, p.g_si.value, w});
    y_norm += w * p.g_si.value * p.g_si.value;
  }
  y_norm = std::sqrt(y_norm);

  double b = b0;
  double u = 1.0;
  double f = objective(s, b, u);
  DecayFit fit;
  fit.objective_history.push_back(f);

  double a00 = 0.0, a01 = 0.0, a11 = 0.0;
  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    a00 = a01 = a11 = 0.0;
    double g0 = 0.0, g1 = 0.0;
    for (const Sample& p : s) {
      const double x = p.t / u;
      const double e = std::exp(-x * x);
      const double j0 = e;
      const double j1 = b * e * 2.0 * x * x / u;
      const double r = p.y - 1.0 - b * e;
      a00 += p.w * j0 * j0;
      a01 += p.w * j0 * j1;
      a11 += p.w * j1 * j1;
      g0 += p.w * j0 * r;
      g1 += p.w * j1 * r;
    }
    const double det = a00 * a11 - a01 * a01;
    if (!(det > 1e-300)) {
      throw FitError(FitError::Kind::kDegenerate, "normal matrix singular; tau_c not identifiable");
    }
    const double grad_norm = std::hypot(g0, g1);
    const double jac_norm = std::sqrt(a00 + a11);
    if (grad_norm <= 1e-10 * jac_norm * y_norm) {
      converged = true;
      break;
    }
    const double db = (a11 * g0 - a01 * g1) / det;
    const double du = (a00 * g1 - a01 * g0) / det;

    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, lambda *= 0.5) {
      const double nb = b + lambda * db;
      const double nu = u + lambda * du;
      if (!(nu > 0.0)) continue;
      const double nf = objective(s, nb, nu);
      if (nf <= f) {
        const bool tiny = std::abs(lambda * db) <= 1e-15 * std::max(1.0, std::abs(b)) &&
                          std::abs(lambda * du) <= 1e-15 * u;
        b = nb;
        u = nu;
        f = nf;
        accepted = true;
        fit.objective_history.push_back(f);
        ++fit.iterations;
        if (tiny) converged = true;
        break;
      }
    }
    if (converged) break;
    if (!accepted) {
      // No descent left at machine precision.
      converged = grad_norm <= 1e-6 * jac_norm * y_norm;
      break;
    }
  }
  if (!converged) {
    throw FitError(FitError::Kind::kNonConvergence,
                   "Gauss-Newton did not converge in " + std::to_string(options.max_iterations) +
                       " iterations");
  }

  fit.B = b;
  fit.tau_c = u * scale;
  fit.residual_norm = std::sqrt(f);
  const double det = a00 * a11 - a01 * a01;
  double sigma2 = 1.0;
  if (!options.weighted) {
    sigma2 = s.size() > 2 ? f / static_cast<double>(s.size() - 2) : 0.0;
  }
  fit.covariance = {sigma2 * a11 / det, -sigma2 * a01 / det * scale,
                    sigma2 * a00 / det * scale * scale};
  return fit;
}

}  // namespace detphoton

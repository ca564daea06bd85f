#include "detphoton/sweep.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "detphoton/errors.hpp"
#include "detphoton/fock_oracle.hpp"
#include "detphoton/rng.hpp"

namespace detphoton {
namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

struct ClickStats {
  double single;  // one detector
  double both;
};

// Combine signal clicks with independent background b per detector, summing
// only nonnegative branches.
ClickStats with_background(const fock::DetectionProbs& d, double b) {
  const double one_only = d.click_one - d.coincidence;
  return {b + (1.0 - b) * d.click_one,
          d.coincidence + 2.0 * b * one_only + b * b * (1.0 - d.click_either)};
}

fock::PhotonNumberDist heralded_state(const SourceParams& sp) {
  const double n = sp.mean_excitation();
  const int n_max = fock::required_max_number(n, fock::kDefaultMaxNumber, sp.herald_probability());
  return fock::conditional_distribution(n, sp.eta_s, n_max, sp.bg_signal);
}

std::optional<Estimate> exact(std::optional<double> v) {
  if (!v) return std::nullopt;
  return Estimate{*v, 0.0, 0};
}

std::optional<Estimate> exact(double v) { return Estimate{v, 0.0, 0}; }

PointValues from_estimates(const ObservableEstimates& e) {
  PointValues p;
  p.columns = {e.P2, e.P3, e.P23, e.g2, e.eta_D, e.alpha, e.g_si};
  return p;
}

PointValues protocol_values(const ProtocolObservables& o) {
  PointValues p;
  p.columns = {exact(o.P2),    exact(o.P3),      exact(o.P23),   exact(o.g2),
               exact(o.eta_D), exact(o.alpha_h), exact(o.g_si_h)};
  return p;
}

PointValues heralded_values(const ConditionalProbs& c, const UnconditionalProbs& u) {
  PointValues p;
  p.columns = {exact(u.p2),           exact(u.p3),    exact(u.p23),
               exact(ratio(u.p23, u.p2 * u.p3)), exact(u.p2 + u.p3), exact(c.alpha),
               exact(u.g_si)};
  return p;
}

void put_number(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
    return;
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

const std::optional<Estimate>& PointValues::operator[](std::string_view name) const {
  for (std::size_t i = 0; i < kObservableColumns.size(); ++i) {
    if (kObservableColumns[i] == name) return columns[i];
  }
  throw std::out_of_range("unknown observable " + std::string(name));
}

ConditionalProbs oracle_conditional_probs(double tau, const SourceParams& sp) {
  sp.validate();
  const fock::DetectionProbs d = fock::detection_probs(heralded_state(sp), memory_efficiency(tau, sp));
  const ClickStats s = with_background(d, sp.bg_idler);
  ConditionalProbs out;
  out.tau = tau;
  out.p2_1 = s.single;
  out.p3_1 = s.single;
  out.p23_1 = s.both;
  out.alpha = ratio(s.both, s.single * s.single);
  return out;
}

UnconditionalProbs oracle_unconditional_probs(const SourceParams& sp, double tau) {
  sp.validate();
  const double n = sp.mean_excitation();
  const fock::PhotonNumberDist thermal = fock::tms_distribution(n, fock::required_max_number(n));
  const ClickStats s =
      with_background(fock::detection_probs(thermal, memory_efficiency(tau, sp)), sp.bg_idler);
  UnconditionalProbs out;
  out.p2 = s.single;
  out.p3 = s.single;
  out.p23 = s.both;
  const ConditionalProbs c = oracle_conditional_probs(tau, sp);
  out.g_si = ratio(c.p2_1 + c.p3_1, out.p2 + out.p3);
  return out;
}

ProtocolObservables oracle_protocol_observables(const SourceParams& sp, int trials,
                                                double halt_offset) {
  sp.validate();
  if (trials < 1) throw DomainError("N must be >= 1");
  const fock::PhotonNumberDist state = heralded_state(sp);
  const double q1 = sp.herald_probability();
  const double b = sp.bg_idler;
  double weight = q1;
  double p2 = 0.0, p23 = 0.0, heralded = 0.0;
  for (int j = 1; j <= trials; ++j) {
    const double storage = static_cast<double>(trials - j) * sp.t0 + halt_offset;
    const ClickStats s =
        with_background(fock::detection_probs(state, memory_efficiency(storage, sp)), b);
    p2 += weight * s.single;
    p23 += weight * s.both;
    heralded += weight;
    weight *= 1.0 - q1;
  }
  const double residual = 1.0 - heralded;
  ProtocolObservables out;
  out.trials = trials;
  out.delta_t = trials * sp.t0;
  out.herald_fraction = heralded;
  out.P2_h = p2 / heralded;
  out.P3_h = out.P2_h;
  out.P23_h = p23 / heralded;
  out.P2 = p2 + residual * b;
  out.P3 = out.P2;
  out.P23 = p23 + residual * b * b;
  out.g2 = ratio(out.P23, out.P2 * out.P3);
  out.eta_D = out.P2 + out.P3;
  out.alpha_h = ratio(out.P23_h, out.P2_h * out.P3_h);
  out.g_si_h = ratio(out.P2_h + out.P3_h, out.P2 + out.P3);
  return out;
}

PointValues evaluate_point(const RunConfig& cfg, EvalMode mode, std::uint64_t seed) {
  const SourceParams sp = cfg.source_params();
  const double halt = cfg.halt_offset_ns * 1e-9;
  const double tau = cfg.tau_us * 1e-6;
  const bool protocol = cfg.experiment == Experiment::kProtocol;
  switch (mode) {
    case EvalMode::kAnalytic:
      if (protocol) return protocol_values(protocol_observables(sp, cfg.N, halt));
      return heralded_values(conditional_probs(tau, sp), unconditional_probs(sp, tau));
    case EvalMode::kOracle:
      if (protocol) return protocol_values(oracle_protocol_observables(sp, cfg.N, halt));
      return heralded_values(oracle_conditional_probs(tau, sp), oracle_unconditional_probs(sp, tau));
    case EvalMode::kMonteCarlo:
      break;
  }
  if (protocol) {
    ProtocolConfig pc = cfg.protocol_config();
    pc.seed = seed;
    return from_estimates(estimate_observables(run_campaign_counts(pc, cfg.workers)));
  }
  HeraldedSourceConfig hc = cfg.heralded_config();
  hc.seed = seed;
  return from_estimates(estimate_observables(run_heralded_source(hc, cfg.workers)));
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg) {
  std::vector<SweepRow> rows;
  if (!cfg.sweep) return rows;
  std::uint64_t seeds = cfg.seed;
  for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i) {
    const double v = cfg.sweep->values[i];
    RunConfig point = cfg;
    point.sweep.reset();
    set_axis_value(point, cfg.sweep->name, v);
    const std::uint64_t row_seed = splitmix64(seeds);
    rows.push_back({v, evaluate_point(point, cfg.mode, row_seed)});
  }
  return rows;
}

std::string sweep_csv_header(std::string_view axis) {
  std::string h(axis);
  for (std::string_view c : kObservableColumns) h += "," + std::string(c);
  for (std::string_view c : kObservableColumns) h += "," + std::string(c) + "_se";
  return h;
}

void write_sweep_csv(std::ostream& out, std::string_view axis, const std::vector<SweepRow>& rows) {
  out << sweep_csv_header(axis) << '\n';
  const double nan = std::nan("");
  for (const SweepRow& row : rows) {
    put_number(out, row.value);
    for (const auto& c : row.values.columns) {
      out << ',';
      put_number(out, c ? c->value : nan);
    }
    for (const auto& c : row.values.columns) {
      out << ',';
      put_number(out, c ? c->std_error : nan);
    }
    out << '\n';
  }
}

}  // namespace detphoton

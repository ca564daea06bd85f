// Acceptance suite: one [PASS]/[FAIL] line per criterion, details indented
// below it. Exit status is the number of failed criteria (0 = all pass).
//
//   detphoton_acceptance [--cli path/to/detphoton] [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "detphoton/analytic_model.hpp"
#include "detphoton/decay_fit.hpp"
#include "detphoton/errors.hpp"
#include "detphoton/estimators.hpp"
#include "detphoton/fock_oracle.hpp"
#include "detphoton/protocol_design.hpp"
#include "detphoton/rng.hpp"
#include "detphoton/run_config.hpp"
#include "detphoton/sweep.hpp"
#include "detphoton/trial_simulator.hpp"

#ifndef DETPHOTON_CLI_PATH
#define DETPHOTON_CLI_PATH "detphoton"
#endif

using namespace detphoton;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string num(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

double rel_err(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

double pull(const Estimate& e, double truth) {
  return e.std_error > 0.0 ? std::abs(e.value - truth) / e.std_error : kInf;
}

SourceParams reference() {
  SourceParams sp;
  sp.p1 = 0.003;
  sp.eta_s = 0.08;
  sp.eta_i0 = 0.075;
  sp.tau_c = 31.5e-6;
  sp.t0 = 300e-9;
  return sp;
}

// 1. closed forms vs Fock enumeration on a 5x5x5 grid, n_max = 64
Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> p1s = geomspace(1e-4, 0.3, 5);
  const std::vector<double> eta_ss = geomspace(0.01, 1.0, 5);
  const std::vector<double> etas = {0.0, 0.25, 0.5, 0.75, 1.0};

  int points = 0, agree = 0, truncated = 0;
  int escalated_agree = 0;
  double worst = 0.0, worst_escalated = 0.0, worst_tail = 0.0;
  std::string first_truncated;
  for (double p1 : p1s) {
    for (double eta_s : eta_ss) {
      const double n = mean_excitation(p1, eta_s);
      std::optional<fock::PhotonNumberDist> fixed;
      try {
        fixed = fock::conditional_distribution(n, eta_s, fock::kDefaultMaxNumber);
      } catch (const TruncationError& e) {
        worst_tail = std::max(worst_tail, e.tail());
        if (first_truncated.empty()) {
          first_truncated = "p1=" + num(p1) + " eta_s=" + num(eta_s) + " (n=" + num(n, 4) + ")";
        }
      }
      const fock::PhotonNumberDist wide = fock::conditional_distribution(
          n, eta_s, fock::required_max_number(n, fock::kDefaultMaxNumber, p1));
      for (double eta : etas) {
        ++points;
        const double p2 = pi_click(eta / 2, p1, eta_s);
        const double p23 = 2 * p2 - pi_click(eta, p1, eta_s);
        auto err = [&](const fock::PhotonNumberDist& d) {
          const fock::DetectionProbs o = fock::detection_probs(d, eta);
          return std::max(rel_err(o.click_one, p2), rel_err(o.coincidence, p23));
        };
        const double e_wide = err(wide);
        worst_escalated = std::max(worst_escalated, e_wide);
        escalated_agree += e_wide < 1e-10;
        if (!fixed) {
          ++truncated;
          continue;
        }
        const double e = err(*fixed);
        worst = std::max(worst, e);
        agree += e < 1e-10;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome out;
  out.pass = agree == points && secs < 10.0;
  out.summary = std::to_string(agree) + "/" + std::to_string(points) +
                " grid points agree to 1e-10 at n_max = 64 (max rel err " + num(worst, 3) + ", " +
                num(secs, 3) + " s)";
  if (truncated > 0) {
    out.details.push_back(std::to_string(truncated) +
                          " points cannot be enumerated at n_max = 64: the dropped thermal tail "
                          "exceeds 1e-12 (worst " + num(worst_tail, 3) + ", first at " +
                          first_truncated + ")");
  }
  out.details.push_back("with n_max raised until the tail bound holds: " +
                        std::to_string(escalated_agree) + "/" + std::to_string(points) +
                        " agree, max rel err " + num(worst_escalated, 3));
  return out;
}

// 2. Monte-Carlo vs closed forms at reference parameters, 1e7 samples, 4 sigma
Outcome monte_carlo_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const SourceParams sp = reference();
  Outcome out;
  out.pass = true;
  double worst = 0.0;
  auto check = [&](const char* name, const std::optional<Estimate>& e, double truth) {
    if (!e) {
      out.pass = false;
      out.details.push_back(std::string(name) + ": undefined estimate");
      return;
    }
    const double z = pull(*e, truth);
    worst = std::max(worst, z);
    if (!(z < 4.0)) out.pass = false;
    out.details.push_back(std::string(name) + ": mc " + num(e->value) + " +- " + num(e->std_error, 2) +
                          ", model " + num(truth) + " (" + num(z, 2) + " sigma)");
  };

  // conditional probabilities: 1e7 heralded write/read pairs at tau = 0
  HeraldedSourceConfig hc;
  hc.source = sp;
  hc.tau = 0.0;
  hc.trials = static_cast<std::uint64_t>(std::ceil(1e7 / sp.p1));
  hc.seed = 20240601;
  const ObservableCounts hcounts = run_heralded_source(hc);
  const ObservableEstimates h = estimate_observables(hcounts);
  const ConditionalProbs c = conditional_probs(0.0, sp);
  out.details.push_back("heralded source, tau = 0: " + std::to_string(hcounts.heralded) +
                        " heralded samples");
  check("p2|1", h.p2_1, c.p2_1);
  check("p23|1", h.p23_1, c.p23_1);
  check("alpha", h.alpha, *c.alpha);

  // protocol observables: 1e7 shots, N = 150
  ProtocolConfig pc;
  pc.source = sp;
  pc.trials = 150;
  pc.shots = 10000000;
  pc.seed = 20240602;
  const ObservableEstimates p = estimate_observables(run_campaign_counts(pc));
  const ProtocolObservables a = protocol_observables(sp, pc.trials);
  out.details.push_back("protocol, N = 150: " + std::to_string(pc.shots) + " shots");
  check("P2", p.P2, a.P2);
  check("P23", p.P23, a.P23);
  check("g2", p.g2, *a.g2);
  check("eta_D", p.eta_D, a.eta_D);

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 300.0) out.pass = false;
  out.summary = "7 observables within 4 sigma at 1e7 samples (worst " + num(worst, 3) + " sigma, " +
                num(secs, 3) + " s)";
  return out;
}

// 3. infinite memory limits
Outcome limit_laws() {
  SourceParams sp = reference();
  sp.tau_c = kInf;
  sp.bg_idler = 0.0;
  Outcome out;

  const ConditionalProbs c = conditional_probs(0.0, sp);
  double worst_closed = 0.0;
  for (int n : {1, 2, 3, 10, 50, 150, 1000, 10000}) {
    const ProtocolObservables o = protocol_observables(sp, n);
    const double w = -std::expm1(n * std::log1p(-sp.p1));
    worst_closed = std::max({worst_closed, rel_err(o.P2, c.p2_1 * w), rel_err(o.P3, c.p3_1 * w),
                             rel_err(o.P23, c.p23_1 * w)});
  }
  const bool closed_ok = worst_closed < 1e-12;
  out.details.push_back("P_mu(N) = p_mu|1 (1 - (1 - p1)^N): max rel err " + num(worst_closed, 3) +
                        (closed_ok ? " < 1e-12" : " >= 1e-12"));

  const int n_big = static_cast<int>(std::ceil(std::log(1e-9) / std::log1p(-sp.p1))) + 1;
  const ProtocolObservables o = protocol_observables(sp, n_big);
  const double g2_err = rel_err(*o.g2, *c.alpha);
  const double target = sp.read_factor * sp.eta_i0;
  const double eta_err = rel_err(o.eta_D, target);
  const double exact_limit = c.p2_1 + c.p3_1;
  const bool g2_ok = g2_err < 1e-6;
  const bool eta_ok = eta_err < 1e-6;
  out.details.push_back("N = " + std::to_string(n_big) + ": g2 " + num(*o.g2, 10) +
                        " vs alpha(0) " + num(*c.alpha, 10) + ", rel err " + num(g2_err, 3));
  out.details.push_back("N = " + std::to_string(n_big) + ": eta_D " + num(o.eta_D, 10) +
                        " vs read_factor*eta_i0 " + num(target, 10) + ", rel err " + num(eta_err, 3));
  out.details.push_back("eta_D limit is p2|1 + p3|1 = 2 Pi(eta_i0/2) = " + num(exact_limit, 10) +
                        " (rel err " + num(rel_err(o.eta_D, exact_limit), 3) +
                        "); it reaches eta_i0 only as p1 -> 0");
  out.pass = closed_ok && g2_ok && eta_ok;
  out.summary = std::string("closed form ") + (closed_ok ? "ok" : "off") + ", g2 -> alpha(0) " +
                (g2_ok ? "ok" : "off") + ", eta_D -> read_factor*eta_i0 " +
                (eta_ok ? "ok" : "off by " + num(100 * eta_err, 3) + "%");
  return out;
}

// 4. fig3 presets
Outcome figure_shape() {
  const FigurePreset preset = figure_preset(FigureId::kFig3a);
  const std::vector<SweepRow> rows = run_sweep(preset.model);
  auto g2_at = [&](int n) { return rows.at(n - 1).values["g2"]->value; };
  const double g2 = g2_at(150);
  const double eta = rows.at(149).values["eta_D"]->value;

  int first_rise = 0;
  for (int n = 3; n <= 150; ++n) {
    if (!(g2_at(n) < g2_at(n - 1))) {
      first_rise = n;
      break;
    }
  }
  const bool decreasing = first_rise == 0 && g2_at(1) > g2;
  bool vacuum = true;
  for (int n = 1; n <= 5; ++n) vacuum = vacuum && g2_at(n) > 1.0;
  const bool g2_ok = g2 >= 0.31 && g2 <= 0.51;
  const bool eta_ok = eta >= 0.006 && eta <= 0.024;

  int n_min = 1;
  for (int n = 1; n <= static_cast<int>(rows.size()); ++n) {
    if (g2_at(n) < g2_at(n_min)) n_min = n;
  }

  // fig3c/d at p1 = 0.003 gives the same point
  const FigurePreset cd = figure_preset(FigureId::kFig3c);
  RunConfig point = cd.model;
  point.sweep.reset();
  point.p1 = 0.003;
  const PointValues pv = evaluate_point(point, EvalMode::kAnalytic, 1);
  const bool same = rel_err(pv["g2"]->value, g2) < 1e-12 && rel_err(pv["eta_D"]->value, eta) < 1e-12;

  Outcome out;
  out.pass = g2_ok && eta_ok && decreasing && vacuum && same;
  out.summary = "g2(150) = " + num(g2, 4) + " in [0.31, 0.51], eta_D(150) = " + num(eta, 4) +
                " in [0.006, 0.024]";
  out.details.push_back("bg_idler = " + num(preset.model.bg_idler, 6) +
                        " per gate puts the analytic min alpha at 0.012; read_factor = 2/3");
  out.details.push_back("g2(N=1..5) = " + num(g2_at(1), 4) + ", " + num(g2_at(2), 4) + ", " +
                        num(g2_at(3), 4) + ", " + num(g2_at(4), 4) + ", " + num(g2_at(5), 4) +
                        (vacuum ? " (all > 1)" : " (not all > 1)"));
  out.details.push_back(
      decreasing ? "g2 strictly decreasing on N = 2..150 and g2(1) > g2(150)"
                 : "g2 not decreasing: rises at N = " + std::to_string(first_rise));
  out.details.push_back("g2 minimum over N = 1..300 at N = " + std::to_string(n_min) +
                        " (g2 = " + num(g2_at(n_min), 4) + ")");
  if (!same) out.details.push_back("fig3c preset disagrees with fig3a at p1 = 0.003");
  return out;
}

// 5. coherent and thermal baselines
Outcome coherent_baseline() {
  Outcome out;
  ProtocolConfig pc;
  pc.source = reference();
  pc.source.read_factor = 2.0 / 3.0;
  pc.trials = 150;
  pc.shots = 10000000;
  pc.seed = 777;
  pc.mode = SourceMode::kCoherent;
  const ObservableEstimates coh = estimate_observables(run_campaign_counts(pc));
  const double z_coh = pull(*coh.g2, 1.0);

  HeraldedSourceConfig hc;
  hc.source = reference();
  hc.trials = 10000000;
  hc.seed = 778;
  const ObservableEstimates th = estimate_observables(run_heralded_source(hc));
  const double z_th = th.g2 ? pull(*th.g2, 2.0) : kInf;

  out.pass = z_coh < 3.0 && z_th < 3.0;
  out.summary = "coherent g2 = " + num(coh.g2->value, 4) + " +- " + num(coh.g2->std_error, 2) +
                " (" + num(z_coh, 2) + " sigma from 1); thermal idler g2 = " +
                (th.g2 ? num(th.g2->value, 4) + " +- " + num(th.g2->std_error, 2) : "undefined") +
                " (" + num(z_th, 2) + " sigma from 2)";
  out.details.push_back("coherent: 1e7 protocol shots, per-detector click probability matched to "
                        "the thermal protocol (" + num(coh.P2->value, 4) + ")");
  const UnconditionalProbs u = unconditional_probs(hc.source, 0.0);
  out.details.push_back("thermal: 1e7 unheralded reads at tau = 0; click-detector model value " +
                        num(u.p23 / (u.p2 * u.p3), 6));
  return out;
}

// 6. decay fit recovery
Outcome fit_recovery() {
  const double B = 16.0, tau_c = 31.5e-6;
  auto make = [&](double noise, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<DecayPoint> pts;
    for (int i = 0; i < 20; ++i) {
      const double tau = 90e-6 * i / 19.0;
      const double g = decay_model(tau, B, tau_c);
      double z = 0.0;
      if (noise > 0.0) {
        // Box-Muller
        const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
        z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      }
      pts.push_back({tau, Estimate{g * (1.0 + noise * z), noise > 0 ? noise * g : 0.0, 0}});
    }
    return pts;
  };
  Outcome out;
  FitOptions exact;
  exact.weighted = false;
  const DecayFit clean = fit_memory_decay(make(0.0, 0), exact);
  const double e_b = rel_err(clean.B, B), e_t = rel_err(clean.tau_c, tau_c);
  const bool clean_ok = e_b < 1e-9 && e_t < 1e-9;

  const DecayFit noisy = fit_memory_decay(make(0.03, 2024));
  const double n_b = rel_err(noisy.B, B), n_t = rel_err(noisy.tau_c, tau_c);
  const bool noisy_ok = n_b < 0.05 && n_t < 0.05;

  int within = 0;
  const int reps = 500;
  for (int s = 1; s <= reps; ++s) {
    const DecayFit f = fit_memory_decay(make(0.03, 10000 + s));
    within += rel_err(f.B, B) < 0.05 && rel_err(f.tau_c, tau_c) < 0.05;
  }
  out.pass = clean_ok && noisy_ok;
  out.summary = "noiseless rel err B " + num(e_b, 2) + ", tau_c " + num(e_t, 2) +
                "; 3% noise, 20 points: B " + num(noisy.B, 5) + ", tau_c " +
                num(noisy.tau_c * 1e6, 5) + " us";
  out.details.push_back("3% noise over " + std::to_string(reps) + " seeds: " + std::to_string(within) +
                        " recover both parameters within 5%");
  return out;
}

// 7. byte-identical records across runs and worker counts, through the CLI
Outcome determinism(const std::string& cli) {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / ("detphoton_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  RunConfig cfg;
  cfg.read_factor = 2.0 / 3.0;
  cfg.bg_idler = preset_idler_background();
  cfg.shard_size = 50000;
  {
    std::ofstream f(dir / "run.json");
    f << serialize_run_config(cfg);
  }
  auto run = [&](const std::string& name, int workers) {
    const std::string cmd = "\"" + cli + "\" simulate --config \"" + (dir / "run.json").string() +
                            "\" --seed 424242 --shots 400000 --workers " + std::to_string(workers) +
                            " --out \"" + (dir / name).string() + "\" > /dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) throw std::runtime_error("'" + cmd + "' exited with " + std::to_string(rc));
    std::ifstream in(dir / name / "record.phrc", std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  try {
    const std::string a = run("a", 1);
    const std::string b = run("b", 1);
    const std::string c = run("c", 4);
    const std::string d = run("d", 3);
    const bool same = !a.empty() && a == b && a == c && a == d;
    out.pass = same;
    out.summary = std::string(same ? "identical" : "different") + " record files (" +
                  std::to_string(a.size()) + " bytes) for workers 1, 1, 4, 3";
  } catch (const std::exception& e) {
    out.pass = false;
    out.summary = e.what();
  }
  fs::remove_all(dir);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = DETPHOTON_CLI_PATH;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: " << argv[0] << " [--cli path] [--only N]\n";
      return 64;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "Monte-Carlo consistency", monte_carlo_consistency},
      {3, "limit laws", limit_laws},
      {4, "figure shape", figure_shape},
      {5, "coherent baseline", coherent_baseline},
      {6, "fit recovery", fit_recovery},
      {7, "determinism", [&] { return determinism(cli); }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": " << o.summary << '\n';
    for (const std::string& d : o.details) std::cout << "       " << d << '\n';
    std::cout.flush();
  }
  return failed;
}

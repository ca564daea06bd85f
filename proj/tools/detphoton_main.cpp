// detphoton: command-line front end.
//
//   detphoton analytic  --config run.json [--mode oracle]
//   detphoton simulate  --config run.json --seed 7 --shots 1000000 --out runs/a [--csv] [--workers 4]
//   detphoton sweep     --config sweep.json --out runs/sweep
//   detphoton fit       --input decay.csv
//   detphoton optimize  --config run.json --g2-max 0.5 [--n-limit 1000]
//   detphoton reproduce --figure fig3a --out figures
//
// Exit codes: 0 ok, 1 other errors, 2 config, 3 infeasible, 4 non-convergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detphoton/decay_fit.hpp"
#include "detphoton/errors.hpp"
#include "detphoton/protocol_design.hpp"
#include "detphoton/records.hpp"
#include "detphoton/run_config.hpp"
#include "detphoton/sweep.hpp"
#include "detphoton/trial_simulator.hpp"

namespace fs = std::filesystem;
using namespace detphoton;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kInfeasible = 3, kNonConvergence = 4 };

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shots;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "master seed (u64)");
  cmd->add_option("--shots", f.shots, "Monte-Carlo shots");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--mode", f.mode, "analytic|oracle|montecarlo");
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.shots) cfg.shots = *f.shots;
  if (f.out) cfg.out = *f.out;
  if (f.mode) cfg.mode = parse_eval_mode(*f.mode);
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void print_point(const PointValues& p) {
  for (std::size_t i = 0; i < kObservableColumns.size(); ++i) {
    const auto& e = p.columns[i];
    std::cout << kObservableColumns[i] << " = ";
    if (!e) {
      std::cout << "undefined\n";
    } else if (e->std_error > 0.0) {
      std::cout << fmt(e->value) << " +- " << fmt(e->std_error) << '\n';
    } else {
      std::cout << fmt(e->value) << '\n';
    }
  }
}

int cmd_analytic(const CommonFlags& f) {
  RunConfig cfg = resolve(f);
  if (!f.mode) cfg.mode = EvalMode::kAnalytic;
  std::cout << "# " << to_string(cfg.experiment) << ", mode " << to_string(cfg.mode) << '\n';
  print_point(evaluate_point(cfg, cfg.mode, cfg.seed));
  return kOk;
}

int cmd_simulate(const CommonFlags& f, bool csv) {
  const RunConfig cfg = resolve(f);
  if (cfg.experiment != Experiment::kProtocol) {
    throw ConfigError("experiment: simulate writes protocol records; use sweep for 'heralded'");
  }
  const ProtocolConfig pc = cfg.protocol_config();
  fs::create_directories(cfg.out);
  const fs::path record = fs::path(cfg.out) / "record.phrc";
  const ObservableCounts counts = run_campaign_to_file(pc, record, cfg.workers);
  std::cout << "wrote " << record.string() << " (" << pc.shots << " shots)\n";
  if (csv) {
    std::ifstream in(record, std::ios::binary);
    const DetectionRecord rec = read_record(in);
    const fs::path path = fs::path(cfg.out) / "record.csv";
    std::ofstream out(path);
    export_csv(out, rec);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::cout << "wrote " << path.string() << '\n';
  }
  const ObservableEstimates e = estimate_observables(counts);
  PointValues p;
  p.columns = {e.P2, e.P3, e.P23, e.g2, e.eta_D, e.alpha, e.g_si};
  print_point(p);
  return kOk;
}

int cmd_sweep(const CommonFlags& f) {
  const RunConfig cfg = resolve(f);
  const std::vector<SweepRow> rows = run_sweep(cfg);
  fs::create_directories(cfg.out);
  const fs::path path = fs::path(cfg.out) / "sweep.csv";
  std::ofstream out(path);
  write_sweep_csv(out, cfg.sweep ? std::string_view(cfg.sweep->name) : "value", rows);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
  return kOk;
}

// CSV with header tau_us,g_si,se
std::vector<DecayPoint> read_decay_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<DecayPoint> pts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() < 2 || v.size() > 3) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected tau_us,g_si[,se]");
    }
    pts.push_back({v[0] * 1e-6, Estimate{v[1], v.size() == 3 ? v[2] : 0.0, 0}});
  }
  return pts;
}

int cmd_fit(const std::string& input, bool unweighted) {
  const std::vector<DecayPoint> pts = read_decay_csv(input);
  FitOptions opt;
  opt.weighted = !unweighted;
  for (const DecayPoint& p : pts) {
    if (!(p.g_si.std_error > 0.0)) opt.weighted = false;
  }
  const DecayFit fit = fit_memory_decay(pts, opt);
  std::cout << "B = " << fmt(fit.B) << " +- " << fmt(std::sqrt(fit.covariance[0])) << '\n';
  std::cout << "tau_c_us = " << fmt(fit.tau_c * 1e6) << " +- "
            << fmt(std::sqrt(fit.covariance[2]) * 1e6) << '\n';
  std::cout << "residual_norm = " << fmt(fit.residual_norm) << '\n';
  std::cout << "iterations = " << fit.iterations << '\n';
  return kOk;
}

int cmd_optimize(const CommonFlags& f, double g2_max, int n_limit) {
  const RunConfig cfg = resolve(f);
  const auto best = optimize_protocol(cfg.source_params(), g2_max, n_limit, cfg.halt_offset_ns * 1e-9);
  if (!best) {
    std::cerr << "infeasible: no N in [1, " << n_limit << "] has g2 <= " << fmt(g2_max) << '\n';
    return kInfeasible;
  }
  std::cout << "N_star = " << best->n_star << '\n';
  std::cout << "eta_D = " << fmt(best->eta_D) << '\n';
  std::cout << "g2 = " << fmt(best->g2) << '\n';
  return kOk;
}

int cmd_reproduce(const CommonFlags& f, const std::string& figure) {
  const fs::path out = f.out.value_or("figures");
  std::vector<FigureId> ids;
  if (figure == "all") {
    ids = {FigureId::kFig2a, FigureId::kFig2inset, FigureId::kFig2b, FigureId::kFig3a,
           FigureId::kFig3b, FigureId::kFig3c, FigureId::kFig3d};
  } else {
    ids = {parse_figure_id(figure)};
  }
  for (FigureId id : ids) {
    const ReproduceResult r =
        reproduce(id, out, f.shots.value_or(200000), f.seed.value_or(1), f.workers.value_or(1));
    for (const fs::path& p : r.files) std::cout << "wrote " << p.string() << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded single-photon source and feedback protocol model"};
  app.require_subcommand(1);

  CommonFlags an, sim, sw, opt, rep;
  add_common(app.add_subcommand("analytic", "evaluate one configuration point"), an);

  auto* simulate = app.add_subcommand("simulate", "run a Monte-Carlo campaign and write the record");
  add_common(simulate, sim);
  bool csv = false;
  simulate->add_flag("--csv", csv, "also write record.csv");

  add_common(app.add_subcommand("sweep", "sweep one parameter and write sweep.csv"), sw);

  auto* fit = app.add_subcommand("fit", "fit 1 + B exp(-tau^2/tau_c^2) to a CSV");
  std::string input;
  bool unweighted = false;
  fit->add_option("--input", input, "CSV with tau_us,g_si,se")->required();
  fit->add_flag("--unweighted", unweighted);

  auto* optimize = app.add_subcommand("optimize", "choose N maximizing eta_D under a g2 bound");
  add_common(optimize, opt);
  double g2_max = 0.5;
  int n_limit = 1000;
  optimize->add_option("--g2-max", g2_max)->required();
  optimize->add_option("--n-limit", n_limit)->check(CLI::PositiveNumber);

  auto* repro = app.add_subcommand("reproduce", "write model, Monte-Carlo and annotation CSVs");
  add_common(repro, rep);
  std::string figure;
  repro->add_option("--figure", figure, "fig2a|fig2inset|fig2b|fig3a|fig3b|fig3c|fig3d|all")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (app.got_subcommand("analytic")) return cmd_analytic(an);
    if (app.got_subcommand("simulate")) return cmd_simulate(sim, csv);
    if (app.got_subcommand("sweep")) return cmd_sweep(sw);
    if (app.got_subcommand("fit")) return cmd_fit(input, unweighted);
    if (app.got_subcommand("optimize")) return cmd_optimize(opt, g2_max, n_limit);
    if (app.got_subcommand("reproduce")) return cmd_reproduce(rep, figure);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const FitError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return e.kind() == FitError::Kind::kBadInput ? kConfig : kNonConvergence;
  } catch (const TruncationError& e) {
    std::cerr << "truncation: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

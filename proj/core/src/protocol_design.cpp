#include "detphoton/protocol_design.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "detphoton/decay_fit.hpp"
#include "detphoton/errors.hpp"
#include "detphoton/sweep.hpp"

namespace detphoton {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double alpha_min(const SourceParams& base, double tau, double bg, std::span<const double> grid) {
  double best = std::numeric_limits<double>::infinity();
  for (double p1 : grid) {
    SourceParams sp = base;
    sp.p1 = p1;
    sp.bg_idler = bg;
    const ConditionalProbs c = conditional_probs(tau, sp);
    if (c.alpha) best = std::min(best, *c.alpha);
  }
  return best;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

std::vector<double> integer_range(int lo, int hi) {
  std::vector<double> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

RunConfig base_config(const SourceParams& sp) {
  RunConfig c;
  c.p1 = sp.p1;
  c.eta_s = sp.eta_s;
  c.eta_i0 = sp.eta_i0;
  c.tau_c_us = sp.tau_c * 1e6;
  c.t0_ns = sp.t0 * 1e9;
  c.bg_idler = sp.bg_idler;
  c.bg_signal = sp.bg_signal;
  c.read_factor = sp.read_factor;
  c.eps_s = sp.meta_eps_s;
  c.eps_i = sp.meta_eps_i;
  return c;
}

void write_annotations(const std::filesystem::path& path, const std::vector<Annotation>& notes) {
  std::ofstream out(path);
  out.precision(17);
  out << "key,value,uncertainty,kind\n";
  for (const Annotation& a : notes) {
    out << a.key << ',' << a.value << ',';
    if (std::isnan(a.uncertainty)) {
      out << "nan";
    } else {
      out << a.uncertainty;
    }
    out << ',' << a.kind << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::filesystem::path write_sweep_file(const std::filesystem::path& path, const RunConfig& cfg,
                                       const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  write_sweep_csv(out, cfg.sweep->name, rows);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return path;
}

std::optional<double> column_at(const std::vector<SweepRow>& rows, double x, std::string_view col) {
  for (const SweepRow& r : rows) {
    if (r.value == x && r.values[col]) return r.values[col]->value;
  }
  return std::nullopt;
}

}  // namespace

std::optional<OptimizeResult> optimize_protocol(const SourceParams& sp, double g2_max, int n_limit,
                                                double halt_offset) {
  if (!(g2_max > 0.0)) throw DomainError("g2_max must be > 0");
  if (n_limit < 1) throw DomainError("n_limit must be >= 1");
  std::optional<OptimizeResult> best;
  for (int n = 1; n <= n_limit; ++n) {
    const ProtocolObservables o = protocol_observables(sp, n, halt_offset);
    if (!o.g2 || *o.g2 > g2_max) continue;
    if (!best || o.eta_D > best->eta_D) best = OptimizeResult{n, o.eta_D, *o.g2};
  }
  return best;
}

SourceParams reference_source() {
  SourceParams sp;
  sp.p1 = 0.003;
  sp.eta_s = 0.08;
  sp.eta_i0 = 0.075;
  sp.tau_c = 31.5e-6;
  sp.t0 = 300e-9;
  sp.meta_eps_s = 0.3;
  sp.meta_eps_i = 0.22;
  return sp;
}

double calibrate_idler_background(const SourceParams& sp, double tau, double target_alpha_min,
                                  std::span<const double> p1_grid) {
  if (p1_grid.empty()) throw DomainError("empty p1 grid");
  double lo = 0.0;
  double hi = 0.5;
  if (alpha_min(sp, tau, lo, p1_grid) > target_alpha_min) {
    throw DomainError("target alpha below the background-free minimum");
  }
  if (alpha_min(sp, tau, hi, p1_grid) < target_alpha_min) {
    throw DomainError("target alpha not reachable with background <= 0.5");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (alpha_min(sp, tau, mid, p1_grid) < target_alpha_min) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> geomspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? lo : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  if (n > 1) {
    v.front() = lo;
    v.back() = hi;
  }
  return v;
}

std::string_view to_string(FigureId id) {
  switch (id) {
    case FigureId::kFig2a: return "fig2a";
    case FigureId::kFig2inset: return "fig2inset";
    case FigureId::kFig2b: return "fig2b";
    case FigureId::kFig3a: return "fig3a";
    case FigureId::kFig3b: return "fig3b";
    case FigureId::kFig3c: return "fig3c";
    case FigureId::kFig3d: return "fig3d";
  }
  return "fig3a";
}

FigureId parse_figure_id(std::string_view name) {
  for (FigureId id : {FigureId::kFig2a, FigureId::kFig2inset, FigureId::kFig2b, FigureId::kFig3a,
                      FigureId::kFig3b, FigureId::kFig3c, FigureId::kFig3d}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown figure '" + std::string(name) +
                    "' (fig2a|fig2inset|fig2b|fig3a|fig3b|fig3c|fig3d)");
}

std::vector<double> characterization_p1_grid() { return geomspace(1e-4, 0.05, 25); }

double preset_idler_background() {
  static const double bg = [] {
    const std::vector<double> grid = characterization_p1_grid();
    return calibrate_idler_background(reference_source(), kCharacterizationTau, 0.012, grid);
  }();
  return bg;
}

FigurePreset figure_preset(FigureId id, std::uint64_t shots, std::uint64_t seed) {
  SourceParams sp = reference_source();
  sp.bg_idler = preset_idler_background();

  FigurePreset preset;
  preset.id = id;
  RunConfig model;
  RunConfig overlay;
  switch (id) {
    case FigureId::kFig2a:
    case FigureId::kFig2b: {
      model = base_config(sp);
      model.experiment = Experiment::kHeralded;
      model.tau_us = kCharacterizationTau * 1e6;
      model.sweep = SweepAxis{"p1", geomspace(1e-4, 0.05, 60)};
      overlay = model;
      overlay.sweep = SweepAxis{"p1", geomspace(1e-3, 0.05, 8)};
      if (id == FigureId::kFig2a) {
        preset.anchors = {{"eta_s", 0.08, kNaN, "measured"}, {"eta_i", 0.075, kNaN, "measured"}};
      } else {
        preset.anchors = {{"alpha_min", 0.012, 0.007, "measured"}};
      }
      break;
    }
    case FigureId::kFig2inset: {
      sp.p1 = 0.005;
      model = base_config(sp);
      model.experiment = Experiment::kHeralded;
      model.sweep = SweepAxis{"tau_us", linspace(0.0, 90.0, 91)};
      overlay = model;
      overlay.sweep = SweepAxis{"tau_us", linspace(0.0, 90.0, 19)};
      preset.anchors = {{"B", 16.0, kNaN, "measured"}, {"tau_c_us", 31.5, kNaN, "measured"}};
      break;
    }
    case FigureId::kFig3a:
    case FigureId::kFig3b: {
      sp.read_factor = 2.0 / 3.0;
      model = base_config(sp);
      model.sweep = SweepAxis{"N", integer_range(1, 300)};
      overlay = model;
      overlay.sweep = SweepAxis{"N", {1, 2, 5, 10, 20, 50, 100, 150, 200, 300}};
      if (id == FigureId::kFig3a) {
        preset.anchors = {{"g2_min", 0.41, 0.04, "measured"}, {"g2_coherent", 1.0, kNaN, "reference"}};
      } else {
        preset.anchors = {{"eta_D", 0.012, kNaN, "measured"}};
      }
      break;
    }
    case FigureId::kFig3c:
    case FigureId::kFig3d: {
      sp.read_factor = 2.0 / 3.0;
      model = base_config(sp);
      model.N = 150;
      model.sweep = SweepAxis{"p1", geomspace(5e-4, 0.02, 40)};
      overlay = model;
      overlay.sweep = SweepAxis{"p1", geomspace(1e-3, 0.02, 6)};
      if (id == FigureId::kFig3c) {
        preset.anchors = {{"g2_min", 0.41, 0.04, "measured"}, {"g2_coherent", 1.0, kNaN, "reference"}};
      } else {
        preset.anchors = {{"eta_D", 0.012, kNaN, "measured"}};
      }
      break;
    }
  }
  model.mode = EvalMode::kAnalytic;
  overlay.mode = EvalMode::kMonteCarlo;
  overlay.shots = shots;
  overlay.seed = seed;
  preset.anchors.push_back({"bg_idler", sp.bg_idler, kNaN, "preset"});
  preset.anchors.push_back({"read_factor", sp.read_factor, kNaN, "preset"});
  preset.model = std::move(model);
  preset.overlay = std::move(overlay);
  return preset;
}

ReproduceResult reproduce(FigureId id, const std::filesystem::path& out_dir, std::uint64_t shots,
                          std::uint64_t seed, unsigned workers) {
  FigurePreset preset = figure_preset(id, shots, seed);
  preset.overlay.workers = workers;
  std::filesystem::create_directories(out_dir);
  const std::string stem(to_string(id));

  ReproduceResult result;
  result.annotations = preset.anchors;
  const std::vector<SweepRow> model_rows = run_sweep(preset.model);
  const std::vector<SweepRow> mc_rows = run_sweep(preset.overlay);
  result.files.push_back(write_sweep_file(out_dir / (stem + "_model.csv"), preset.model, model_rows));
  result.files.push_back(write_sweep_file(out_dir / (stem + "_mc.csv"), preset.overlay, mc_rows));

  auto note = [&](std::string key, std::optional<double> v, std::string kind) {
    if (v) result.annotations.push_back({std::move(key), *v, kNaN, std::move(kind)});
  };
  switch (id) {
    case FigureId::kFig2a:
      note("g_si_p1_at_smallest_p1",
           model_rows.front().values["g_si"]
               ? std::optional<double>(model_rows.front().values["g_si"]->value * model_rows.front().value)
               : std::nullopt,
           "model");
      break;
    case FigureId::kFig2b: {
      double best = std::numeric_limits<double>::infinity();
      for (const SweepRow& r : model_rows) {
        if (r.values["alpha"]) best = std::min(best, r.values["alpha"]->value);
      }
      note("alpha_min", best, "model");
      break;
    }
    case FigureId::kFig2inset: {
      std::ofstream form(out_dir / (stem + "_fitform.csv"));
      form.precision(17);
      form << "tau_us,g_si\n";
      for (double t : linspace(0.0, 90.0, 91)) form << t << ',' << decay_model(t, 16.0, 31.5) << '\n';
      result.files.push_back(out_dir / (stem + "_fitform.csv"));
      std::vector<DecayPoint> pts;
      for (const SweepRow& r : mc_rows) {
        const auto& g = r.values["g_si"];
        if (g && g->std_error > 0.0) pts.push_back({r.value * 1e-6, *g});
      }
      try {
        const DecayFit fit = fit_memory_decay(pts);
        note("B", fit.B, "fit");
        note("tau_c_us", fit.tau_c * 1e6, "fit");
      } catch (const FitError& e) {
        note("fit_failed", 1.0, "fit");
      }
      break;
    }
    case FigureId::kFig3a:
    case FigureId::kFig3b:
      note("g2_at_N150", column_at(model_rows, 150, "g2"), "model");
      note("eta_D_at_N150", column_at(model_rows, 150, "eta_D"), "model");
      break;
    case FigureId::kFig3c:
    case FigureId::kFig3d: {
      SourceParams sp = preset.model.source_params();
      sp.p1 = 0.003;
      const ProtocolObservables o = protocol_observables(sp, 150);
      note("g2_at_p1_0.003", o.g2, "model");
      note("eta_D_at_p1_0.003", o.eta_D, "model");
      break;
    }
  }
  const std::filesystem::path notes = out_dir / (stem + "_annotations.csv");
  write_annotations(notes, result.annotations);
  result.files.push_back(notes);
  return result;
}

}  // namespace detphoton

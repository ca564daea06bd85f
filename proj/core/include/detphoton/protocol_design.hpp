#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detphoton/analytic_model.hpp"
#include "detphoton/run_config.hpp"

namespace detphoton {

struct OptimizeResult {
  int n_star = 0;
  double eta_D = 0.0;
  double g2 = 0.0;
};

/// Exhaustive scan over N in [1, n_limit] with Delta t = N t0: the N with the
/// largest eta_D among those with g2 <= g2_max, ties to the smaller N.
/// Empty when no N is feasible.
std::optional<OptimizeResult> optimize_protocol(const SourceParams& sp, double g2_max, int n_limit,
                                                double halt_offset = 0.0);

/// Source parameters of the rubidium-ensemble experiment (read_factor 1, no background).
SourceParams reference_source();

/// Storage time of the heralded-source characterization runs.
inline constexpr double kCharacterizationTau = 80e-9;

/// Idler background per detector such that the minimum of alpha over
/// `p1_grid` at storage time `tau` equals `target_alpha_min`. Bisection on
/// [0, 0.5]; throws DomainError if the target is below the background-free minimum.
double calibrate_idler_background(const SourceParams& sp, double tau, double target_alpha_min,
                                  std::span<const double> p1_grid);

std::vector<double> geomspace(double lo, double hi, std::size_t n);

enum class FigureId { kFig2a, kFig2inset, kFig2b, kFig3a, kFig3b, kFig3c, kFig3d };

std::string_view to_string(FigureId id);
/// Throws ConfigError for unknown ids.
FigureId parse_figure_id(std::string_view name);

struct Annotation {
  std::string key;
  double value = 0.0;
  double uncertainty = 0.0;  // NaN when none is quoted
  std::string kind;          // measured | model | fit | preset
};

struct FigurePreset {
  FigureId id = FigureId::kFig3a;
  RunConfig model;                // analytic sweep
  RunConfig overlay;              // Monte-Carlo sweep on a coarser grid
  std::vector<Annotation> anchors;  // quoted experimental values
};

/// The p1 grid shared by the source-characterization figures and the background calibration.
std::vector<double> characterization_p1_grid();

/// Background that puts the analytic alpha minimum at the quoted 0.012.
double preset_idler_background();

FigurePreset figure_preset(FigureId id, std::uint64_t shots = 200000, std::uint64_t seed = 1);

struct ReproduceResult {
  std::vector<std::filesystem::path> files;
  std::vector<Annotation> annotations;
};

/// Writes <id>_model.csv, <id>_mc.csv and <id>_annotations.csv (plus
/// <id>_fitform.csv for the storage-time inset) into out_dir.
ReproduceResult reproduce(FigureId id, const std::filesystem::path& out_dir, std::uint64_t shots,
                          std::uint64_t seed, unsigned workers = 1);

}  // namespace detphoton

#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "detphoton/estimators.hpp"
#include "detphoton/run_config.hpp"

namespace detphoton {

inline constexpr std::array<std::string_view, 7> kObservableColumns = {
    "P2", "P3", "P23", "g2", "eta_D", "alpha", "g_si"};

/// One evaluated parameter point. Analytic and oracle values carry a zero
/// std_error; empty entries are undefined ratios.
struct PointValues {
  std::array<std::optional<Estimate>, kObservableColumns.size()> columns;

  const std::optional<Estimate>& operator[](std::string_view name) const;
};

struct SweepRow {
  double value = 0.0;
  PointValues values;
};

/// Fock-enumeration counterparts of the closed forms, with the same
/// background model. Used by the oracle mode and by tests.
ConditionalProbs oracle_conditional_probs(double tau, const SourceParams& sp);
UnconditionalProbs oracle_unconditional_probs(const SourceParams& sp, double tau);
ProtocolObservables oracle_protocol_observables(const SourceParams& sp, int trials,
                                                double halt_offset = 0.0);

/// Evaluates cfg at its current parameters in the given mode. Monte-Carlo
/// uses cfg.shots and `seed`.
PointValues evaluate_point(const RunConfig& cfg, EvalMode mode, std::uint64_t seed);

/// One row per sweep value (empty when there is no sweep or no values).
/// Monte-Carlo rows use seeds derived from cfg.seed and the row index.
std::vector<SweepRow> run_sweep(const RunConfig& cfg);

void write_sweep_csv(std::ostream& out, std::string_view axis, const std::vector<SweepRow>& rows);
std::string sweep_csv_header(std::string_view axis);

}  // namespace detphoton

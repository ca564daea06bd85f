#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "detphoton/analytic_model.hpp"
#include "detphoton/trial_simulator.hpp"

namespace detphoton {

enum class EvalMode { kAnalytic, kOracle, kMonteCarlo };
/// protocol: N-trial feedback protocol. heralded: write/read pairs at a fixed
/// storage time, the source characterization experiment.
enum class Experiment { kProtocol, kHeralded };

std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view name);
std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view name);

struct SweepAxis {
  std::string name;
  std::vector<double> values;
  bool operator==(const SweepAxis&) const = default;
};

/// The config document. Field units follow the document keys (tau_c_us,
/// t0_ns, ...) so a parse/serialize round trip is exact; conversion to SI
/// happens in source_params() and protocol_config().
struct RunConfig {
  // source
  double p1 = 0.003;
  double eta_s = 0.08;
  double eta_i0 = 0.075;
  double tau_c_us = 31.5;  // may be +inf ("inf" in the document)
  double t0_ns = 300.0;
  double bg_idler = 0.0;
  double bg_signal = 0.0;
  double read_factor = 1.0;
  double eps_s = 1.0;
  double eps_i = 1.0;
  // protocol
  int N = 150;
  std::uint64_t shots = 100000;
  std::uint64_t seed = 1;
  SourceMode source_mode = SourceMode::kThermal;
  double halt_offset_ns = 0.0;
  std::uint64_t shard_size = 1 << 16;
  std::uint64_t memory_budget_mb = 1024;
  double tick_ns = 2.0;
  GateWindow d1{20, 60};
  GateWindow d2{0, 50};
  GateWindow d3{0, 50};
  std::optional<double> coherent_click_probability;
  // run
  Experiment experiment = Experiment::kProtocol;
  double tau_us = 0.08;  // storage time of the heralded experiment
  std::optional<SweepAxis> sweep;
  EvalMode mode = EvalMode::kAnalytic;
  std::string out = "out";
  unsigned workers = 1;

  SourceParams source_params() const;
  ProtocolConfig protocol_config() const;
  HeraldedSourceConfig heralded_config() const;
  /// Throws ConfigError with the offending field path.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

inline constexpr std::string_view kSweepAxes[] = {
    "p1",          "eta_s", "eta_i0", "tau_c_us", "t0_ns",         "bg_idler",
    "bg_signal",   "read_factor", "N", "tau_us",  "halt_offset_ns"};

/// Sets one named parameter; throws ConfigError for unknown names.
void set_axis_value(RunConfig& cfg, std::string_view axis, double value);

/// Parses a JSON document. Unknown keys and out-of-domain values are errors;
/// syntax errors report line and column.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace detphoton

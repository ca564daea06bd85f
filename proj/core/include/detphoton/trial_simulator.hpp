#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "detphoton/analytic_model.hpp"
#include "detphoton/estimators.hpp"
#include "detphoton/records.hpp"
#include "detphoton/rng.hpp"

namespace detphoton {

/// thermal: pair source, thermal atomic number.
/// coherent: weak coherent reference at the read; D2/D3 see an uncorrelated
///   coherent field whose click rate matches the thermal protocol's flux.
///   Write trials still run (Poisson signal) so records keep herald tags.
/// single_emitter: exactly one excitation per write trial.
enum class SourceMode { kThermal, kCoherent, kSingleEmitter };

std::string_view to_string(SourceMode mode);
SourceMode parse_source_mode(std::string_view name);

struct ProtocolConfig {
  SourceParams source;
  int trials = 150;  // N, Delta t = N t0
  std::uint64_t shots = 100000;
  std::uint64_t seed = 1;
  SourceMode mode = SourceMode::kThermal;
  double tick_seconds = 2e-9;
  GateWindow d1{20, 60};  // 120 ns, relative to each trial start
  GateWindow d2{0, 50};   // 100 ns, relative to the read
  GateWindow d3{0, 50};
  double halt_offset = 0.0;  // seconds added to every storage time
  std::uint64_t shard_size = 1 << 16;
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
  // Per-detector click probability of the coherent reference. Empty: match
  // the bg-free thermal protocol.
  std::optional<double> coherent_click_probability;

  void validate() const;
  GateLayout layout() const;
  std::int64_t trial_ticks() const;
  /// Canonical text used for the record header hash.
  std::string canonical() const;
  std::uint64_t hash() const;
};

struct WriteTrial {
  bool heralded = false;
  int n = 0;
};

struct ShotOutcome {
  std::optional<int> herald_trial;
  int stored_n = 0;
  double storage_time = 0.0;
  bool click_d2 = false;
  bool click_d3 = false;
  std::int32_t d1_tick = kNoClick;
  std::int32_t d2_tick = kNoClick;
  std::int32_t d3_tick = kNoClick;
};

/// Samples one write trial; precomputes the number distribution once.
class WriteTrialSampler {
 public:
  WriteTrialSampler(const SourceParams& sp, SourceMode mode);
  WriteTrial operator()(Rng& rng) const;

 private:
  int sample_number(Rng& rng) const;

  SourceMode mode_;
  double n_mean_;
  double ratio_;      // n / (1 + n), thermal
  double log_ratio_;
  double poisson_p0_; // exp(-n), coherent
  double eta_s_;
  double bg_signal_;
};

WriteTrial simulate_write_trial(Rng& rng, const SourceParams& sp,
                                SourceMode mode = SourceMode::kThermal);

/// One full protocol repetition: up to N write trials, storage, read-out.
class ShotSimulator {
 public:
  explicit ShotSimulator(const ProtocolConfig& cfg);
  ShotOutcome operator()(Rng& rng) const;
  const GateLayout& layout() const { return layout_; }

 private:
  void read_out(Rng& rng, int n, double eta, ShotOutcome& out) const;

  ProtocolConfig cfg_;
  GateLayout layout_;
  WriteTrialSampler sampler_;
  std::vector<double> eta_by_trial_;      // index j-1
  std::vector<double> storage_by_trial_;
  double coherent_click_ = 0.0;
};

ShotOutcome simulate_shot(Rng& rng, const ProtocolConfig& cfg);

/// Click probability per idler detector of the thermal protocol without background.
double matched_coherent_click_probability(const ProtocolConfig& cfg);

/// In-memory campaign. Shard k covers shots [k S, (k+1) S) and draws from
/// Rng::stream(seed, k), so the result depends only on (config, shard size).
/// Throws ResourceError when the record would exceed the memory budget.
DetectionRecord run_campaign(const ProtocolConfig& cfg, unsigned workers = 1);

/// Streams the same record to `path` shard by shard and returns its counts.
ObservableCounts run_campaign_to_file(const ProtocolConfig& cfg, const std::filesystem::path& path,
                                      unsigned workers = 1);

/// Counts only, for large campaigns that do not need the record.
ObservableCounts run_campaign_counts(const ProtocolConfig& cfg, unsigned workers = 1);

/// Heralded-source characterization: every write trial is followed by a read
/// after a fixed storage time; heralding only tags the shot.
struct HeraldedSourceConfig {
  SourceParams source;
  double tau = 0.0;
  std::uint64_t trials = 1000000;
  std::uint64_t seed = 1;
  SourceMode mode = SourceMode::kThermal;
  std::uint64_t shard_size = 1 << 20;

  void validate() const;
};

ObservableCounts run_heralded_source(const HeraldedSourceConfig& cfg, unsigned workers = 1);

/// Runs fn(shard) for shard in [0, shards) on up to `workers` threads.
template <typename Fn>
void for_each_shard(std::uint64_t shards, unsigned workers, Fn&& fn);

}  // namespace detphoton

#include "detphoton/detail/shards.hpp"

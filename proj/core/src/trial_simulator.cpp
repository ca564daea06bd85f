#include "detphoton/trial_simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "detphoton/errors.hpp"

namespace detphoton {
namespace {

std::int64_t ticks_for(double seconds, double tick, const char* what) {
  const double exact = seconds / tick;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-6 * std::max(1.0, exact)) {
    throw DomainError(std::string(what) + " must be a whole number of ticks");
  }
  return static_cast<std::int64_t>(rounded);
}

std::uint64_t shard_count(std::uint64_t total, std::uint64_t shard_size) {
  return (total + shard_size - 1) / shard_size;
}

struct ShardRange {
  std::uint64_t begin;
  std::uint64_t end;
};

ShardRange shard_range(std::uint64_t k, std::uint64_t total, std::uint64_t shard_size) {
  const std::uint64_t begin = k * shard_size;
  return {begin, std::min(total, begin + shard_size)};
}

ShotEntry to_entry(std::uint64_t shot, const ShotOutcome& o) {
  ShotEntry e;
  e.shot = shot;
  e.herald_trial = o.herald_trial.value_or(0);
  e.d1_tick = o.d1_tick;
  e.d2_tick = o.d2_tick;
  e.d3_tick = o.d3_tick;
  return e;
}

RecordHeader header_for(const ProtocolConfig& cfg) {
  RecordHeader h;
  h.tick_ns = static_cast<std::uint32_t>(std::llround(cfg.tick_seconds * 1e9));
  h.config_hash = cfg.hash();
  h.seed = cfg.seed;
  h.shot_count = cfg.shots;
  return h;
}

void simulate_shard(const ShotSimulator& sim, const ProtocolConfig& cfg, std::uint64_t k,
                    std::vector<ShotEntry>& out) {
  const ShardRange r = shard_range(k, cfg.shots, cfg.shard_size);
  Rng rng = Rng::stream(cfg.seed, k);
  out.clear();
  out.reserve(r.end - r.begin);
  for (std::uint64_t shot = r.begin; shot < r.end; ++shot) out.push_back(to_entry(shot, sim(rng)));
}

}  // namespace

std::string_view to_string(SourceMode mode) {
  switch (mode) {
    case SourceMode::kThermal: return "thermal";
    case SourceMode::kCoherent: return "coherent";
    case SourceMode::kSingleEmitter: return "single_emitter";
  }
  return "thermal";
}

SourceMode parse_source_mode(std::string_view name) {
  if (name == "thermal") return SourceMode::kThermal;
  if (name == "coherent") return SourceMode::kCoherent;
  if (name == "single_emitter") return SourceMode::kSingleEmitter;
  throw DomainError("unknown source mode '" + std::string(name) + "'");
}

void ProtocolConfig::validate() const {
  source.validate();
  if (trials < 1) throw DomainError("N must be >= 1");
  if (!(tick_seconds > 0.0)) throw DomainError("tick must be > 0");
  if (shard_size < 1) throw DomainError("shard_size must be >= 1");
  if (!(halt_offset >= 0.0)) throw DomainError("halt_offset must be >= 0");
  if (coherent_click_probability &&
      !(*coherent_click_probability >= 0.0 && *coherent_click_probability <= 1.0)) {
    throw DomainError("coherent click probability must be in [0,1]");
  }
  layout().validate();
}

std::int64_t ProtocolConfig::trial_ticks() const { return ticks_for(source.t0, tick_seconds, "t0"); }

GateLayout ProtocolConfig::layout() const {
  GateLayout g;
  g.trial_ticks = trial_ticks();
  g.trials = trials;
  g.read_start_ticks = static_cast<std::int64_t>(trials) * g.trial_ticks +
                       ticks_for(halt_offset, tick_seconds, "halt_offset");
  g.d1 = d1;
  g.d2 = d2;
  g.d3 = d3;
  return g;
}

std::string ProtocolConfig::canonical() const {
  char buf[768];
  std::snprintf(buf, sizeof(buf),
                "p1=%.17g;eta_s=%.17g;eta_i0=%.17g;tau_c=%.17g;t0=%.17g;bg_idler=%.17g;"
                "bg_signal=%.17g;read_factor=%.17g;N=%d;shots=%llu;seed=%llu;mode=%s;"
                "tick=%.17g;d1=%lld/%lld;d2=%lld/%lld;d3=%lld/%lld;halt=%.17g;shard=%llu;"
                "coherent=%.17g",
                source.p1, source.eta_s, source.eta_i0, source.tau_c, source.t0, source.bg_idler,
                source.bg_signal, source.read_factor, trials,
                static_cast<unsigned long long>(shots), static_cast<unsigned long long>(seed),
                std::string(to_string(mode)).c_str(), tick_seconds,
                static_cast<long long>(d1.offset_ticks), static_cast<long long>(d1.width_ticks),
                static_cast<long long>(d2.offset_ticks), static_cast<long long>(d2.width_ticks),
                static_cast<long long>(d3.offset_ticks), static_cast<long long>(d3.width_ticks),
                halt_offset, static_cast<unsigned long long>(shard_size),
                coherent_click_probability.value_or(-1.0));
  return buf;
}

std::uint64_t ProtocolConfig::hash() const { return fnv1a64(canonical()); }

WriteTrialSampler::WriteTrialSampler(const SourceParams& sp, SourceMode mode)
    : mode_(mode),
      n_mean_(sp.mean_excitation()),
      ratio_(n_mean_ / (1.0 + n_mean_)),
      log_ratio_(std::log(ratio_)),
      poisson_p0_(std::exp(-n_mean_)),
      eta_s_(sp.eta_s),
      bg_signal_(sp.bg_signal) {}

int WriteTrialSampler::sample_number(Rng& rng) const {
  switch (mode_) {
    case SourceMode::kSingleEmitter:
      return 1;
    case SourceMode::kCoherent: {
      const double u = rng.uniform();
      int k = 0;
      double p = poisson_p0_;
      double cdf = p;
      while (u >= cdf && k < 10000) {
        ++k;
        p *= n_mean_ / k;
        cdf += p;
      }
      return k;
    }
    case SourceMode::kThermal:
      break;
  }
  // P(n >= k) = ratio^k; v in (0, 1].
  const double v = 1.0 - rng.uniform();
  if (v > ratio_) return 0;
  return static_cast<int>(std::floor(std::log(v) / log_ratio_));
}

WriteTrial WriteTrialSampler::operator()(Rng& rng) const {
  WriteTrial t;
  t.n = sample_number(rng);
  for (int i = 0; i < t.n && !t.heralded; ++i) t.heralded = rng.bernoulli(eta_s_);
  if (!t.heralded && bg_signal_ > 0.0) t.heralded = rng.bernoulli(bg_signal_);
  return t;
}

WriteTrial simulate_write_trial(Rng& rng, const SourceParams& sp, SourceMode mode) {
  return WriteTrialSampler(sp, mode)(rng);
}

double matched_coherent_click_probability(const ProtocolConfig& cfg) {
  SourceParams clean = cfg.source;
  clean.bg_idler = 0.0;
  clean.bg_signal = 0.0;
  return protocol_observables(clean, cfg.trials, cfg.halt_offset).P2;
}

ShotSimulator::ShotSimulator(const ProtocolConfig& cfg)
    : cfg_(cfg), layout_((cfg.validate(), cfg.layout())), sampler_(cfg.source, cfg.mode) {
  eta_by_trial_.resize(static_cast<std::size_t>(cfg.trials));
  storage_by_trial_.resize(static_cast<std::size_t>(cfg.trials));
  for (int j = 1; j <= cfg.trials; ++j) {
    const double storage = static_cast<double>(cfg.trials - j) * cfg.source.t0 + cfg.halt_offset;
    storage_by_trial_[j - 1] = storage;
    eta_by_trial_[j - 1] = memory_efficiency(storage, cfg.source);
  }
  if (cfg.mode == SourceMode::kCoherent) {
    coherent_click_ = cfg.coherent_click_probability.value_or(matched_coherent_click_probability(cfg));
  }
}

void ShotSimulator::read_out(Rng& rng, int n, double eta, ShotOutcome& out) const {
  const double half = 0.5 * eta;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    if (u < half) {
      out.click_d2 = true;
    } else if (u < eta) {
      out.click_d3 = true;
    }
  }
}

ShotOutcome ShotSimulator::operator()(Rng& rng) const {
  ShotOutcome out;
  for (int j = 1; j <= cfg_.trials; ++j) {
    const WriteTrial t = sampler_(rng);
    if (!t.heralded) continue;
    out.herald_trial = j;
    out.stored_n = t.n;
    out.storage_time = storage_by_trial_[j - 1];
    out.d1_tick = static_cast<std::int32_t>(layout_.d1_tick(j));
    break;
  }
  if (cfg_.mode == SourceMode::kCoherent) {
    out.click_d2 = rng.bernoulli(coherent_click_);
    out.click_d3 = rng.bernoulli(coherent_click_);
  } else if (out.herald_trial) {
    read_out(rng, out.stored_n, eta_by_trial_[*out.herald_trial - 1], out);
  }
  const double bg = cfg_.source.bg_idler;
  if (bg > 0.0) {
    out.click_d2 = rng.bernoulli(bg) || out.click_d2;
    out.click_d3 = rng.bernoulli(bg) || out.click_d3;
  }
  if (out.click_d2) out.d2_tick = static_cast<std::int32_t>(layout_.d2_tick());
  if (out.click_d3) out.d3_tick = static_cast<std::int32_t>(layout_.d3_tick());
  return out;
}

ShotOutcome simulate_shot(Rng& rng, const ProtocolConfig& cfg) { return ShotSimulator(cfg)(rng); }

DetectionRecord run_campaign(const ProtocolConfig& cfg, unsigned workers) {
  cfg.validate();
  const double bytes = static_cast<double>(cfg.shots) * sizeof(ShotEntry);
  if (bytes > static_cast<double>(cfg.memory_budget_bytes)) {
    throw ResourceError("record of " + std::to_string(cfg.shots) +
                        " shots exceeds the memory budget; stream it to a file instead");
  }
  const ShotSimulator sim(cfg);
  DetectionRecord rec;
  rec.header = header_for(cfg);
  rec.shots.resize(cfg.shots);
  for_each_shard(shard_count(cfg.shots, cfg.shard_size), workers, [&](std::uint64_t k) {
    const ShardRange r = shard_range(k, cfg.shots, cfg.shard_size);
    Rng rng = Rng::stream(cfg.seed, k);
    for (std::uint64_t shot = r.begin; shot < r.end; ++shot) rec.shots[shot] = to_entry(shot, sim(rng));
  });
  return rec;
}

ObservableCounts run_campaign_to_file(const ProtocolConfig& cfg, const std::filesystem::path& path,
                                      unsigned workers) {
  cfg.validate();
  const ShotSimulator sim(cfg);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  RecordWriter writer(out, header_for(cfg));

  const std::uint64_t shards = shard_count(cfg.shots, cfg.shard_size);
  const unsigned batch = std::max(workers, 1u);
  std::vector<std::vector<ShotEntry>> buffers(batch);
  ObservableCounts counts;
  for (std::uint64_t first = 0; first < shards; first += batch) {
    const std::uint64_t in_batch = std::min<std::uint64_t>(batch, shards - first);
    for_each_shard(in_batch, workers, [&](std::uint64_t i) {
      simulate_shard(sim, cfg, first + i, buffers[i]);
    });
    for (std::uint64_t i = 0; i < in_batch; ++i) {
      for (const ShotEntry& e : buffers[i]) {
        writer.append(e);
        counts.add(e.heralded(), e.click_d2(), e.click_d3());
      }
    }
  }
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
  return counts;
}

ObservableCounts run_campaign_counts(const ProtocolConfig& cfg, unsigned workers) {
  cfg.validate();
  const ShotSimulator sim(cfg);
  const std::uint64_t shards = shard_count(cfg.shots, cfg.shard_size);
  std::vector<ObservableCounts> partial(shards);
  for_each_shard(shards, workers, [&](std::uint64_t k) {
    const ShardRange r = shard_range(k, cfg.shots, cfg.shard_size);
    Rng rng = Rng::stream(cfg.seed, k);
    ObservableCounts c;
    for (std::uint64_t shot = r.begin; shot < r.end; ++shot) {
      const ShotOutcome o = sim(rng);
      c.add(o.herald_trial.has_value(), o.click_d2, o.click_d3);
    }
    partial[k] = c;
  });
  ObservableCounts total;
  for (const ObservableCounts& c : partial) total += c;
  return total;
}

void HeraldedSourceConfig::validate() const {
  source.validate();
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  if (shard_size < 1) throw DomainError("shard_size must be >= 1");
}

ObservableCounts run_heralded_source(const HeraldedSourceConfig& cfg, unsigned workers) {
  cfg.validate();
  const WriteTrialSampler sampler(cfg.source, cfg.mode);
  const double eta = memory_efficiency(cfg.tau, cfg.source);
  const double half = 0.5 * eta;
  const double bg = cfg.source.bg_idler;
  const std::uint64_t shards = shard_count(cfg.trials, cfg.shard_size);
  std::vector<ObservableCounts> partial(shards);
  for_each_shard(shards, workers, [&](std::uint64_t k) {
    const ShardRange r = shard_range(k, cfg.trials, cfg.shard_size);
    Rng rng = Rng::stream(cfg.seed, k);
    ObservableCounts c;
    for (std::uint64_t i = r.begin; i < r.end; ++i) {
      const WriteTrial t = sampler(rng);
      bool d2 = false;
      bool d3 = false;
      for (int q = 0; q < t.n; ++q) {
        const double u = rng.uniform();
        if (u < half) {
          d2 = true;
        } else if (u < eta) {
          d3 = true;
        }
      }
      if (bg > 0.0) {
        d2 = rng.bernoulli(bg) || d2;
        d3 = rng.bernoulli(bg) || d3;
      }
      c.add(t.heralded, d2, d3);
    }
    partial[k] = c;
  });
  ObservableCounts total;
  for (const ObservableCounts& c : partial) total += c;
  return total;
}

}  // namespace detphoton

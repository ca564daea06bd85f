#include "detphoton/run_config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "detphoton/errors.hpp"
#include "json.hpp"

namespace detphoton {
namespace {

using nlohmann::json;

// Reads one JSON object, tracking the field path for diagnostics and
// rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
    throw ConfigError("field '" + field + "': " + msg);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out, bool allow_inf = false) {
    const json* v = find(key);
    if (!v) return;
    if (allow_inf && v->is_string() && v->get<std::string>() == "inf") {
      out = std::numeric_limits<double>::infinity();
      return;
    }
    if (!v->is_number()) fail(field(key), allow_inf ? "expected a number or \"inf\"" : "expected a number");
    out = v->get<double>();
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_number_integer()) fail(field(key), "expected an integer");
    if (v->is_number_unsigned()) {
      const auto u = v->get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) fail(field(key), "out of range");
      out = static_cast<Int>(u);
      return;
    }
    const auto i = v->get<std::int64_t>();
    if (i < static_cast<std::int64_t>(std::numeric_limits<Int>::min())) fail(field(key), "out of range");
    out = static_cast<Int>(i);
  }

  void string(const std::string& key, std::string& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_string()) fail(field(key), "expected a string");
    out = v->get<std::string>();
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) fail(field(item.key()), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_gate(ObjectReader& parent, const std::string& key, GateWindow& w) {
  const json* v = parent.find(key);
  if (!v) return;
  ObjectReader r(*v, parent.field(key));
  r.integer("offset_ticks", w.offset_ticks);
  r.integer("width_ticks", w.width_ticks);
  r.finish();
}

json number_or_inf(double x) {
  if (std::isinf(x)) return "inf";
  return x;
}

json gate_json(const GateWindow& w) {
  return json{{"offset_ticks", w.offset_ticks}, {"width_ticks", w.width_ticks}};
}

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

template <typename Fn>
void check(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    throw ConfigError("field '" + field + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::kAnalytic: return "analytic";
    case EvalMode::kOracle: return "oracle";
    case EvalMode::kMonteCarlo: return "montecarlo";
  }
  return "analytic";
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "analytic") return EvalMode::kAnalytic;
  if (name == "oracle") return EvalMode::kOracle;
  if (name == "montecarlo") return EvalMode::kMonteCarlo;
  throw ConfigError("unknown mode '" + std::string(name) + "' (analytic|oracle|montecarlo)");
}

std::string_view to_string(Experiment e) {
  return e == Experiment::kHeralded ? "heralded" : "protocol";
}

Experiment parse_experiment(std::string_view name) {
  if (name == "protocol") return Experiment::kProtocol;
  if (name == "heralded") return Experiment::kHeralded;
  throw ConfigError("unknown experiment '" + std::string(name) + "' (protocol|heralded)");
}

SourceParams RunConfig::source_params() const {
  SourceParams sp;
  sp.p1 = p1;
  sp.eta_s = eta_s;
  sp.eta_i0 = eta_i0;
  sp.tau_c = tau_c_us * 1e-6;
  sp.t0 = t0_ns * 1e-9;
  sp.bg_idler = bg_idler;
  sp.bg_signal = bg_signal;
  sp.read_factor = read_factor;
  sp.meta_eps_s = eps_s;
  sp.meta_eps_i = eps_i;
  return sp;
}

ProtocolConfig RunConfig::protocol_config() const {
  ProtocolConfig pc;
  pc.source = source_params();
  pc.trials = N;
  pc.shots = shots;
  pc.seed = seed;
  pc.mode = source_mode;
  pc.tick_seconds = tick_ns * 1e-9;
  pc.d1 = d1;
  pc.d2 = d2;
  pc.d3 = d3;
  pc.halt_offset = halt_offset_ns * 1e-9;
  pc.shard_size = shard_size;
  pc.memory_budget_bytes = static_cast<std::size_t>(memory_budget_mb) << 20;
  pc.coherent_click_probability = coherent_click_probability;
  return pc;
}

HeraldedSourceConfig RunConfig::heralded_config() const {
  HeraldedSourceConfig hc;
  hc.source = source_params();
  hc.tau = tau_us * 1e-6;
  hc.trials = shots;
  hc.seed = seed;
  hc.mode = source_mode;
  hc.shard_size = std::max<std::uint64_t>(shard_size, 1);
  return hc;
}

void RunConfig::validate() const {
  const SourceParams sp = source_params();
  auto require = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw ConfigError(std::string("field '") + field + "': " + msg);
  };
  require(p1 > 0.0 && p1 < 1.0, "source.p1", "must be in (0,1)");
  require(eta_s > 0.0 && eta_s <= 1.0, "source.eta_s", "must be in (0,1]");
  require(eta_i0 > 0.0 && eta_i0 <= 1.0, "source.eta_i0", "must be in (0,1]");
  require(tau_c_us > 0.0, "source.tau_c_us", "must be > 0");
  require(t0_ns > 0.0 && std::isfinite(t0_ns), "source.t0_ns", "must be > 0");
  require(bg_idler >= 0.0 && bg_idler < 1.0, "source.bg_idler", "must be in [0,1)");
  require(bg_signal >= 0.0 && bg_signal < 1.0, "source.bg_signal", "must be in [0,1)");
  require(read_factor > 0.0 && read_factor <= 1.0, "source.read_factor", "must be in (0,1]");
  require(eps_s > 0.0 && eps_s <= 1.0, "source.eps_s", "must be in (0,1]");
  require(eps_i > 0.0 && eps_i <= 1.0, "source.eps_i", "must be in (0,1]");
  require(N >= 1, "protocol.N", "must be >= 1");
  require(shard_size >= 1, "protocol.shard_size", "must be >= 1");
  require(tick_ns > 0.0, "protocol.tick_ns", "must be > 0");
  require(halt_offset_ns >= 0.0, "protocol.halt_offset_ns", "must be >= 0");
  require(tau_us >= 0.0, "tau_us", "must be >= 0");
  require(workers >= 1, "workers", "must be >= 1");
  check("protocol", [&] { protocol_config().validate(); });
  check("source", [&] { sp.validate(); });
  if (sweep) {
    bool known = false;
    for (std::string_view a : kSweepAxes) known = known || a == sweep->name;
    if (!known) throw ConfigError("field 'sweep.axis': unknown parameter '" + sweep->name + "'");
    for (std::size_t i = 0; i < sweep->values.size(); ++i) {
      RunConfig probe = *this;
      probe.sweep.reset();
      const std::string field = "sweep.values[" + std::to_string(i) + "]";
      try {
        set_axis_value(probe, sweep->name, sweep->values[i]);
        probe.validate();
      } catch (const ConfigError& e) {
        throw ConfigError("field '" + field + "': " + e.what());
      }
    }
  }
}

void set_axis_value(RunConfig& cfg, std::string_view axis, double value) {
  if (axis == "p1") cfg.p1 = value;
  else if (axis == "eta_s") cfg.eta_s = value;
  else if (axis == "eta_i0") cfg.eta_i0 = value;
  else if (axis == "tau_c_us") cfg.tau_c_us = value;
  else if (axis == "t0_ns") cfg.t0_ns = value;
  else if (axis == "bg_idler") cfg.bg_idler = value;
  else if (axis == "bg_signal") cfg.bg_signal = value;
  else if (axis == "read_factor") cfg.read_factor = value;
  else if (axis == "tau_us") cfg.tau_us = value;
  else if (axis == "halt_offset_ns") cfg.halt_offset_ns = value;
  else if (axis == "N") {
    if (value != std::floor(value) || value < 1.0 || value > 1e9) {
      throw ConfigError("N must be a positive integer");
    }
    cfg.N = static_cast<int>(value);
  } else {
    throw ConfigError("unknown sweep axis '" + std::string(axis) + "'");
  }
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("syntax error at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                      e.what());
  }
  RunConfig cfg;
  ObjectReader root(doc, "");
  if (const json* src = root.find("source")) {
    ObjectReader r(*src, "source");
    r.number("p1", cfg.p1);
    r.number("eta_s", cfg.eta_s);
    r.number("eta_i0", cfg.eta_i0);
    r.number("tau_c_us", cfg.tau_c_us, true);
    r.number("t0_ns", cfg.t0_ns);
    r.number("bg_idler", cfg.bg_idler);
    r.number("bg_signal", cfg.bg_signal);
    r.number("read_factor", cfg.read_factor);
    r.number("eps_s", cfg.eps_s);
    r.number("eps_i", cfg.eps_i);
    r.finish();
  }
  if (const json* proto = root.find("protocol")) {
    ObjectReader r(*proto, "protocol");
    r.integer("N", cfg.N);
    r.integer("shots", cfg.shots);
    r.integer("seed", cfg.seed);
    std::string mode(to_string(cfg.source_mode));
    r.string("source_mode", mode);
    try {
      cfg.source_mode = parse_source_mode(mode);
    } catch (const DomainError& e) {
      ObjectReader::fail("protocol.source_mode", e.what());
    }
    r.number("halt_offset_ns", cfg.halt_offset_ns);
    r.integer("shard_size", cfg.shard_size);
    r.integer("memory_budget_mb", cfg.memory_budget_mb);
    r.number("tick_ns", cfg.tick_ns);
    if (const json* gates = r.find("gates")) {
      ObjectReader g(*gates, "protocol.gates");
      read_gate(g, "d1", cfg.d1);
      read_gate(g, "d2", cfg.d2);
      read_gate(g, "d3", cfg.d3);
      g.finish();
    }
    if (const json* c = r.find("coherent_click_probability")) {
      if (!c->is_null()) {
        if (!c->is_number()) ObjectReader::fail("protocol.coherent_click_probability", "expected a number");
        cfg.coherent_click_probability = c->get<double>();
      }
    }
    r.finish();
  }
  std::string experiment(to_string(cfg.experiment));
  root.string("experiment", experiment);
  try {
    cfg.experiment = parse_experiment(experiment);
  } catch (const ConfigError& e) {
    ObjectReader::fail("experiment", e.what());
  }
  root.number("tau_us", cfg.tau_us);
  if (const json* sw = root.find("sweep")) {
    if (!sw->is_null()) {
      ObjectReader r(*sw, "sweep");
      SweepAxis axis;
      r.string("axis", axis.name);
      if (const json* vals = r.find("values")) {
        if (!vals->is_array()) ObjectReader::fail("sweep.values", "expected an array");
        for (std::size_t i = 0; i < vals->size(); ++i) {
          if (!(*vals)[i].is_number()) {
            ObjectReader::fail("sweep.values[" + std::to_string(i) + "]", "expected a number");
          }
          axis.values.push_back((*vals)[i].get<double>());
        }
      }
      r.finish();
      if (axis.name.empty()) ObjectReader::fail("sweep.axis", "missing");
      cfg.sweep = std::move(axis);
    }
  }
  std::string mode(to_string(cfg.mode));
  root.string("mode", mode);
  try {
    cfg.mode = parse_eval_mode(mode);
  } catch (const ConfigError& e) {
    ObjectReader::fail("mode", e.what());
  }
  root.string("out", cfg.out);
  root.integer("workers", cfg.workers);
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string serialize_run_config(const RunConfig& cfg) {
  json doc;
  doc["source"] = {{"p1", cfg.p1},
                   {"eta_s", cfg.eta_s},
                   {"eta_i0", cfg.eta_i0},
                   {"tau_c_us", number_or_inf(cfg.tau_c_us)},
                   {"t0_ns", cfg.t0_ns},
                   {"bg_idler", cfg.bg_idler},
                   {"bg_signal", cfg.bg_signal},
                   {"read_factor", cfg.read_factor},
                   {"eps_s", cfg.eps_s},
                   {"eps_i", cfg.eps_i}};
  json proto = {{"N", cfg.N},
                {"shots", cfg.shots},
                {"seed", cfg.seed},
                {"source_mode", std::string(to_string(cfg.source_mode))},
                {"halt_offset_ns", cfg.halt_offset_ns},
                {"shard_size", cfg.shard_size},
                {"memory_budget_mb", cfg.memory_budget_mb},
                {"tick_ns", cfg.tick_ns},
                {"gates", {{"d1", gate_json(cfg.d1)}, {"d2", gate_json(cfg.d2)}, {"d3", gate_json(cfg.d3)}}}};
  if (cfg.coherent_click_probability) {
    proto["coherent_click_probability"] = *cfg.coherent_click_probability;
  }
  doc["protocol"] = std::move(proto);
  doc["experiment"] = std::string(to_string(cfg.experiment));
  doc["tau_us"] = cfg.tau_us;
  if (cfg.sweep) doc["sweep"] = {{"axis", cfg.sweep->name}, {"values", cfg.sweep->values}};
  doc["mode"] = std::string(to_string(cfg.mode));
  doc["out"] = cfg.out;
  doc["workers"] = cfg.workers;
  return doc.dump(2) + "\n";
}

}  // namespace detphoton

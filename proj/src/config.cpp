#include "qubitdyne/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace qubitdyne {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double to_real(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected an unsigned 64-bit integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_real(item));
  }
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

ExperimentMode parse_mode(const std::string& v) {
  if (v == "homodyne") return ExperimentMode::Homodyne;
  if (v == "multi-angle") return ExperimentMode::MultiAngle;
  if (v == "heterodyne") return ExperimentMode::Heterodyne;
  if (v == "phase-est") return ExperimentMode::PhaseEst;
  throw ConfigError("unknown mode '" + v + "' (homodyne | multi-angle | heterodyne | phase-est)");
}

FilterChoice parse_filter(const std::string& v) {
  if (v == "auto") return FilterChoice::Auto;
  if (v == "constant") return FilterChoice::Constant;
  if (v == "time-dependent") return FilterChoice::TimeDependent;
  if (v == "lossy-optimal") return FilterChoice::LossyOptimal;
  throw ConfigError("unknown filter '" + v + "' (auto | constant | time-dependent | lossy-optimal)");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  std::string section;
  std::string key;
  Setter set;
  Getter get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"state", "spec", [](auto& c, auto& v) { c.state = StateSpec::parse(v); },
       [](auto& c) { return c.state.to_string(); }},
      {"state", "n_fock", [](auto& c, auto& v) { c.n_fock = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.n_fock); }},

      {"schedule", "kind",
       [](auto& c, auto& v) {
         if (v != "constant" && v != "ramp") throw ConfigError("expected constant | ramp, got '" + v + "'");
         c.schedule.ramp = v == "ramp";
       },
       [](auto& c) { return std::string(c.schedule.ramp ? "ramp" : "constant"); }},
      {"schedule", "phi", [](auto& c, auto& v) { c.schedule.phi = to_real(v); },
       [](auto& c) { return fmt(c.schedule.phi); }},
      {"schedule", "slope", [](auto& c, auto& v) { c.schedule.slope = to_real(v); },
       [](auto& c) { return fmt(c.schedule.slope); }},
      {"schedule", "n_bit", [](auto& c, auto& v) { c.schedule.n_bit = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.schedule.n_bit); }},
      {"schedule", "dt", [](auto& c, auto& v) { c.schedule.dt = to_real(v); },
       [](auto& c) { return fmt(c.schedule.dt); }},
      {"schedule", "t_step", [](auto& c, auto& v) { c.schedule.t_step = to_real(v); },
       [](auto& c) { return fmt(c.schedule.t_step); }},
      {"schedule", "kappa", [](auto& c, auto& v) { c.schedule.kappa = to_real(v); },
       [](auto& c) { return fmt(c.schedule.kappa); }},
      {"schedule", "p_read_err", [](auto& c, auto& v) { c.schedule.p_read_err = to_real(v); },
       [](auto& c) { return fmt(c.schedule.p_read_err); }},
      {"schedule", "vacuum_target", [](auto& c, auto& v) { c.schedule.vacuum_target = to_real(v); },
       [](auto& c) { return fmt(c.schedule.vacuum_target); }},

      {"run", "mode", [](auto& c, auto& v) { c.mode = parse_mode(v); }, [](auto& c) { return to_string(c.mode); }},
      {"run", "theta", [](auto& c, auto& v) { c.theta = to_real(v); }, [](auto& c) { return fmt(c.theta); }},
      {"run", "n_angles", [](auto& c, auto& v) { c.n_angles = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.n_angles); }},
      {"run", "n_traj", [](auto& c, auto& v) { c.n_traj = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.n_traj); }},
      {"run", "seed", [](auto& c, auto& v) { c.seed = to_u64(v); }, [](auto& c) { return std::to_string(c.seed); }},
      {"run", "convention_c", [](auto& c, auto& v) { c.convention_c = to_real(v); },
       [](auto& c) { return fmt(c.convention_c); }},

      {"filter", "kind", [](auto& c, auto& v) { c.filter = parse_filter(v); },
       [](auto& c) { return to_string(c.filter); }},
      {"filter", "eta_m", [](auto& c, auto& v) { c.eta_m = to_real(v); }, [](auto& c) { return fmt(c.eta_m); }},

      {"tomography", "compensate", [](auto& c, auto& v) { c.compensate = to_bool(v); },
       [](auto& c) { return std::string(c.compensate ? "true" : "false"); }},
      {"tomography", "eta_q", [](auto& c, auto& v) { c.eta_q = to_real(v); }, [](auto& c) { return fmt(c.eta_q); }},
      {"tomography", "bin_width", [](auto& c, auto& v) { c.bin_width = to_real(v); },
       [](auto& c) { return fmt(c.bin_width); }},
      {"tomography", "max_iter", [](auto& c, auto& v) { c.max_iter = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.max_iter); }},
      {"tomography", "tol", [](auto& c, auto& v) { c.tol = to_real(v); }, [](auto& c) { return fmt(c.tol); }},

      {"phase_est", "mode", [](auto& c, auto& v) { c.pe_mode = parse_phase_est_mode(v); },
       [](auto& c) { return to_string(c.pe_mode); }},
      {"phase_est", "n_m", [](auto& c, auto& v) { c.pe_n_m = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.pe_n_m); }},
      {"phase_est", "epsilon", [](auto& c, auto& v) { c.pe_epsilon = to_real(v); },
       [](auto& c) { return fmt(c.pe_epsilon); }},
      {"phase_est", "n_fock", [](auto& c, auto& v) { c.pe_n_fock = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.pe_n_fock); }},

      {"sweep", "parameter", [](auto& c, auto& v) { c.sweep.parameter = v; },
       [](auto& c) { return c.sweep.parameter; }},
      {"sweep", "values", [](auto& c, auto& v) { c.sweep.values = to_list(v); },
       [](auto& c) { return list_text(c.sweep.values); }},
      {"sweep", "repetitions", [](auto& c, auto& v) { c.sweep.repetitions = static_cast<int>(to_int(v)); },
       [](auto& c) { return std::to_string(c.sweep.repetitions); }},
      {"sweep", "compare_compensation", [](auto& c, auto& v) { c.sweep.compare_compensation = to_bool(v); },
       [](auto& c) { return std::string(c.sweep.compare_compensation ? "true" : "false"); }},

      {"output", "dir", [](auto& c, auto& v) { c.out_dir = v; }, [](auto& c) { return c.out_dir; }},
      {"output", "records", [](auto& c, auto& v) { c.write_records = to_bool(v); },
       [](auto& c) { return std::string(c.write_records ? "true" : "false"); }},
      {"output", "input", [](auto& c, auto& v) { c.input = v; }, [](auto& c) { return c.input; }},
  };
  return table;
}

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ConfigError(where + ": " + what);
}

}  // namespace

std::string to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::Homodyne: return "homodyne";
    case ExperimentMode::MultiAngle: return "multi-angle";
    case ExperimentMode::Heterodyne: return "heterodyne";
    case ExperimentMode::PhaseEst: return "phase-est";
  }
  return "homodyne";
}

std::string to_string(FilterChoice f) {
  switch (f) {
    case FilterChoice::Auto: return "auto";
    case FilterChoice::Constant: return "constant";
    case FilterChoice::TimeDependent: return "time-dependent";
    case FilterChoice::LossyOptimal: return "lossy-optimal";
  }
  return "auto";
}

void ExperimentConfig::validate() const {
  require(n_fock >= 0, "[state] n_fock", "must be >= 0");
  require(schedule.phi > 0.0 && schedule.phi < kHalfPi, "[schedule] phi", "must lie in (0, pi/2)");
  require(schedule.n_bit >= 1, "[schedule] n_bit", "must be >= 1");
  require(schedule.dt > 0.0, "[schedule] dt", "must be positive");
  require(schedule.t_step > 0.0, "[schedule] t_step", "must be positive");
  require(schedule.kappa >= 0.0, "[schedule] kappa", "must be >= 0");
  require(schedule.p_read_err >= 0.0 && schedule.p_read_err < 0.5, "[schedule] p_read_err", "must lie in [0, 0.5)");
  require(schedule.vacuum_target >= 0.0 && schedule.vacuum_target < 1.0, "[schedule] vacuum_target",
          "must lie in [0, 1)");
  if (schedule.ramp)
    require(schedule.phi + schedule.slope * (schedule.n_bit - 1) < kHalfPi &&
                schedule.phi + schedule.slope * (schedule.n_bit - 1) > 0.0,
            "[schedule] slope", "ramp leaves (0, pi/2) within n_bit steps");
  require(n_angles >= 1, "[run] n_angles", "must be >= 1");
  require(n_traj >= 0, "[run] n_traj", "must be >= 0");
  require(convention_c > 0.0, "[run] convention_c", "must be positive");
  require(eta_m > 0.5 && eta_m <= 1.0, "[filter] eta_m", "must lie in (0.5, 1]");
  require(eta_q > 0.0 && eta_q <= 1.0, "[tomography] eta_q", "must lie in (0, 1]");
  require(bin_width > 0.0, "[tomography] bin_width", "must be positive");
  require(max_iter >= 1, "[tomography] max_iter", "must be >= 1");
  require(tol > 0.0, "[tomography] tol", "must be positive");
  require(pe_n_m >= 1, "[phase_est] n_m", "must be >= 1");
  require(pe_epsilon >= 0.0, "[phase_est] epsilon", "must be >= 0");
  require(pe_n_fock >= 0, "[phase_est] n_fock", "must be >= 0");
  const auto& p = sweep.parameter;
  require(p == "none" || p == "n_bit" || p == "phi" || p == "n_traj" || p == "vacuum_target" || p == "slope",
          "[sweep] parameter", "must be none | n_bit | phi | n_traj | vacuum_target | slope");
  require(sweep.repetitions >= 1, "[sweep] repetitions", "must be >= 1");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::map<std::pair<std::string, std::string>, const Field*> index;
  for (const auto& f : fields()) index[{f.section, f.key}] = &f;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto hash = line.find_first_of("#;");
    line = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& f : fields()) known = known || f.section == section;
      if (!known) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find({section, key});
    if (it == index.end()) throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    try {
      it->second->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": [" + section + "] " + key + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_string())
      throw ConfigError(path + ": manifest has no \"config\" text entry");
    return parse_config(j["config"].get<std::string>(), path + "#config", base);
  }
  return parse_config(ss.str(), path, base);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out, section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      out += (section.empty() ? "[" : "\n[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig5", "figS1", "figS2", "lifetime"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.out_dir = "out/" + name;
  if (name == "fig2") {
    c.mode = ExperimentMode::MultiAngle;
  } else if (name == "fig3") {
    c.mode = ExperimentMode::MultiAngle;
    c.sweep.parameter = "n_bit";
    c.sweep.values = {60, 80, 100, 120, 140, 160, 180, 200, 250, 300};
    c.sweep.repetitions = 3;
  } else if (name == "fig4") {
    c.state = StateSpec::coherent(cplx(2.0, 0.0));
    c.mode = ExperimentMode::Heterodyne;
    c.schedule.n_bit = 300;
    c.n_traj = 10000;
  } else if (name == "fig5") {
    c.state = StateSpec::coherent(cplx(std::sqrt(6.0), 0.0));
    c.mode = ExperimentMode::MultiAngle;
    c.schedule.kappa = 2000.0;
    c.schedule.n_bit = 4000;
    c.schedule.vacuum_target = 0.95;
    c.compensate = true;
    c.sweep.parameter = "phi";
    for (double f : {0.04, 0.05, 0.06, 0.08, 0.1, 0.15, 0.2, 0.3, 0.45}) c.sweep.values.push_back(f * kHalfPi);
    c.sweep.compare_compensation = true;
  } else if (name == "figS1") {
    c.mode = ExperimentMode::MultiAngle;
    c.schedule.ramp = true;
    c.schedule.slope = 0.0018;
    c.schedule.n_bit = 300;
    c.schedule.vacuum_target = 0.95;
    c.sweep.parameter = "slope";
    c.sweep.values = {0.0, 0.0018};
  } else if (name == "figS2") {
    c.state = StateSpec::fock(1);
    c.mode = ExperimentMode::PhaseEst;
    c.n_traj = 500;
    c.pe_n_m = 100;
    c.pe_n_fock = 120;
  } else if (name == "lifetime") {
    c.state = StateSpec::coherent(cplx(std::sqrt(6.0), 0.0));
    c.schedule.t_step = 1e-6;
    c.schedule.kappa = 1.0 / 500e-6;
    c.schedule.n_bit = 4000;
    c.schedule.vacuum_target = 0.95;
    c.compensate = true;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

CollisionSchedule build_schedule(const ExperimentConfig& cfg, double theta) {
  const auto& s = cfg.schedule;
  const auto basis = MeasurementBasis::for_quadrature(theta);
  auto sched = s.ramp ? CollisionSchedule::ramp(s.phi, s.slope, s.n_bit, basis)
                      : CollisionSchedule::constant(s.phi, s.n_bit, basis);
  sched.with_loss(s.kappa, s.dt, s.t_step).with_readout_error(s.p_read_err);
  return sched;
}

CollisionSchedule build_heterodyne_schedule(const ExperimentConfig& cfg) {
  auto sched = build_schedule(cfg, 0.0);
  sched.heterodyne();
  return sched;
}

FilterWeights build_filter(const ExperimentConfig& cfg, const CollisionSchedule& sched) {
  const auto conv = cfg.conv();
  FilterChoice kind = cfg.filter;
  if (kind == FilterChoice::Auto) kind = cfg.schedule.ramp ? FilterChoice::TimeDependent : FilterChoice::Constant;
  switch (kind) {
    case FilterChoice::Constant: return filter_constant(cfg.schedule.phi, cfg.schedule.dt, sched.n_bit(), conv);
    case FilterChoice::TimeDependent: return filter_time_dependent(sched.phi, cfg.schedule.dt, conv);
    case FilterChoice::LossyOptimal:
      return filter_lossy_optimal(sched.phi, cfg.schedule.dt, cfg.schedule.t_step, cfg.schedule.kappa, cfg.eta_m, conv);
    case FilterChoice::Auto: break;
  }
  return filter_constant(cfg.schedule.phi, cfg.schedule.dt, sched.n_bit(), conv);
}

}  // namespace qubitdyne

#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "exfree/analytic.hpp"

namespace exfree::cli {

namespace {

using nlohmann::json;

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

std::optional<double> get_number(const json& obj, const std::string& key, const std::string& prefix) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_number()) throw ConfigError("field '" + join(prefix, key) + "': expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw ConfigError("field '" + join(prefix, key) + "': must be finite");
  return x;
}

std::optional<double> get_positive(const json& obj, const std::string& key, const std::string& prefix) {
  auto x = get_number(obj, key, prefix);
  if (x && !(*x > 0.0)) throw ConfigError("field '" + join(prefix, key) + "': must be positive");
  return x;
}

std::optional<std::string> get_string(const json& obj, const std::string& key, const std::string& prefix) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) throw ConfigError("field '" + join(prefix, key) + "': expected a string");
  return v->get<std::string>();
}

std::optional<bool> get_bool(const json& obj, const std::string& key, const std::string& prefix) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_boolean()) throw ConfigError("field '" + join(prefix, key) + "': expected true or false");
  return v->get<bool>();
}

std::optional<std::vector<double>> get_numbers(const json& obj, const std::string& key,
                                               const std::string& prefix) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_array()) throw ConfigError("field '" + join(prefix, key) + "': expected a list of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) throw ConfigError("field '" + join(prefix, key) + "': expected a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

const json* get_object(const json& obj, const std::string& key, const std::string& prefix) {
  const json* v = find(obj, key);
  if (v && !v->is_object()) throw ConfigError("field '" + join(prefix, key) + "': expected an object");
  return v;
}

void check_label(const std::string& label) {
  if (label.empty()) throw ConfigError("field 'label': must not be empty");
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) throw ConfigError("field 'label': only letters, digits, '_', '-' and '.' are allowed");
  }
  if (label == "." || label == "..") throw ConfigError("field 'label': '" + label + "' is reserved");
}

bool is_oscillatory_experiment(Experiment e) {
  return e == Experiment::Qst || e == Experiment::PurifiedQst || e == Experiment::Hom ||
         e == Experiment::Binomial || e == Experiment::Sweep;
}

void read_coherence(const json& doc, RunConfig& cfg) {
  const json* c = get_object(doc, "coherence", "");
  if (!c) return;
  if (auto preset = get_string(*c, "preset", "coherence")) {
    if (*preset != "measured") {
      throw ConfigError("field 'coherence.preset': unknown preset '" + *preset + "' (measured)");
    }
    cfg.coherence = measured_cavity_coherence(get_bool(*c, "thermal", "coherence").value_or(false));
  }
  const std::array<std::string, 3> names{"S1", "S2", "S3"};
  for (std::size_t m = 0; m < 3; ++m) {
    const std::string prefix = "coherence." + names[m];
    const json* mode = get_object(*c, names[m], "coherence");
    if (!mode) continue;
    if (auto t1 = get_positive(*mode, "t1_us", prefix)) cfg.coherence[m].t1 = *t1;
    if (auto tphi = get_positive(*mode, "tphi_us", prefix)) cfg.coherence[m].tphi = *tphi;
    if (auto nth = get_number(*mode, "n_th", prefix)) {
      if (*nth < 0.0) throw ConfigError("field '" + prefix + ".n_th': must be >= 0");
      cfg.coherence[m].n_th = *nth;
    }
  }
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  if (name == "qst") return Experiment::Qst;
  if (name == "purified-qst") return Experiment::PurifiedQst;
  if (name == "hom") return Experiment::Hom;
  if (name == "binomial") return Experiment::Binomial;
  if (name == "calibrate-g") return Experiment::CalibrateG;
  if (name == "calibrate-delta0") return Experiment::CalibrateDelta0;
  if (name == "budget") return Experiment::Budget;
  if (name == "compare-bs") return Experiment::CompareBs;
  if (name == "sweep") return Experiment::Sweep;
  throw ConfigError("field 'experiment': unknown experiment '" + name +
                    "' (qst|purified-qst|hom|binomial|calibrate-g|calibrate-delta0|budget|compare-bs|sweep)");
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Qst: return "qst";
    case Experiment::PurifiedQst: return "purified-qst";
    case Experiment::Hom: return "hom";
    case Experiment::Binomial: return "binomial";
    case Experiment::CalibrateG: return "calibrate-g";
    case Experiment::CalibrateDelta0: return "calibrate-delta0";
    case Experiment::Budget: return "budget";
    case Experiment::CompareBs: return "compare-bs";
    case Experiment::Sweep: return "sweep";
  }
  return "?";
}

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      dims.push_back(n);
    } catch (const std::exception&) {
      throw ConfigError("dims: '" + text + "' is not a comma-separated list of integers");
    }
  }
  if (dims.size() != 3) throw ConfigError("dims: expected three values N1,N2,N3");
  for (int n : dims) {
    if (n < 2) throw ConfigError("dims: every mode needs at least 2 levels");
  }
  return dims;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  RunConfig cfg;
  cfg.source = doc;
  cfg.base_dir = base_dir;

  const auto experiment = get_string(doc, "experiment", "");
  if (!experiment) throw ConfigError("missing required field 'experiment'");
  cfg.experiment = parse_experiment(*experiment);
  if (auto label = get_string(doc, "label", "")) cfg.label = *label;
  check_label(cfg.label);

  cfg.g_khz = get_positive(doc, "g_over_2pi_khz", "");
  cfg.delta_khz = get_number(doc, "delta_over_2pi_khz", "");
  if (const json* d = find(doc, "dims")) {
    if (!d->is_array() || d->size() != 3) throw ConfigError("field 'dims': expected [N1, N2, N3]");
    std::vector<int> dims;
    for (const auto& e : *d) {
      if (!e.is_number_integer() || e.get<int>() < 2) {
        throw ConfigError("field 'dims': entries must be integers >= 2");
      }
      dims.push_back(e.get<int>());
    }
    cfg.dims = dims;
  }
  if (auto method = get_string(doc, "method", "")) {
    try {
      cfg.method = parse_method(*method);
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("field 'method': ") + e.what());
    }
  }
  if (const json* trotter = get_object(doc, "trotter", "")) {
    cfg.trotter_dt_us = get_positive(*trotter, "dt_us", "trotter");
    if (auto order = get_string(*trotter, "order", "trotter")) {
      if (*order == "printed") {
        cfg.trotter_order = TrotterOrder::Printed;
      } else if (*order == "reversed") {
        cfg.trotter_order = TrotterOrder::Reversed;
      } else {
        throw ConfigError("field 'trotter.order': expected 'printed' or 'reversed'");
      }
    }
  }
  if (const json* integ = get_object(doc, "integrator", "")) {
    cfg.rtol = get_positive(*integ, "rtol", "integrator").value_or(cfg.rtol);
    cfg.atol = get_positive(*integ, "atol", "integrator").value_or(cfg.atol);
  }
  if (const json* t = get_object(doc, "time", "")) {
    cfg.time.total_us = get_positive(*t, "total_us", "time");
    cfg.time.total_tau_st = get_positive(*t, "total_tau_st", "time");
    if (cfg.time.total_us && cfg.time.total_tau_st) {
      throw ConfigError("field 'time': give either total_us or total_tau_st, not both");
    }
    if (auto s = get_number(*t, "samples", "time")) {
      if (*s < 2 || *s != std::floor(*s)) throw ConfigError("field 'time.samples': integer >= 2 required");
      cfg.time.samples = static_cast<int>(*s);
    }
  }
  read_coherence(doc, cfg);

  if (const json* p = get_object(doc, "purification", "")) {
    if (auto stages = get_string(*p, "stages", "purification")) {
      try {
        cfg.purification.stages = parse_purification(*stages);
      } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("field 'purification.stages': ") + e.what());
      }
    }
    if (auto gq = get_number(*p, "gamma_q_per_us", "purification")) {
      if (*gq < 0.0) throw ConfigError("field 'purification.gamma_q_per_us': must be >= 0");
      cfg.purification.gamma_q = *gq;
    }
  }
  if (const json* h = get_object(doc, "hom", "")) {
    cfg.hom_snapshots_us = get_numbers(*h, "snapshot_times_us", "hom").value_or(std::vector<double>{});
  }
  if (const json* b = get_object(doc, "binomial", "")) {
    if (auto label = get_string(*b, "label", "binomial")) {
      try {
        cfg.binomial_label = parse_binomial_label(*label);
      } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("field 'binomial.label': ") + e.what());
      }
    }
    cfg.binomial.inject_jump = get_bool(*b, "inject_jump", "binomial").value_or(false);
    cfg.binomial.wigner_extent = get_positive(*b, "wigner_extent", "binomial").value_or(3.0);
    if (auto pts = get_number(*b, "wigner_points", "binomial")) {
      if (*pts < 2 || *pts != std::floor(*pts)) {
        throw ConfigError("field 'binomial.wigner_points': integer >= 2 required");
      }
      cfg.binomial.wigner_points = static_cast<int>(*pts);
    }
  }
  if (const json* c = get_object(doc, "calibration", "")) {
    if (auto path = get_string(*c, "data_csv", "calibration")) cfg.calibration.data_csv = *path;
    if (const json* s = get_object(*c, "synthetic", "calibration")) {
      const std::string pre = "calibration.synthetic";
      cfg.calibration.true_g_khz = get_positive(*s, "g_over_2pi_khz", pre);
      cfg.calibration.true_delta0_khz = get_number(*s, "delta0_over_2pi_khz", pre);
      cfg.calibration.delta_d_khz = get_numbers(*s, "delta_d_list_khz", pre).value_or(std::vector<double>{});
      cfg.calibration.t_max_us = get_positive(*s, "t_max_us", pre).value_or(cfg.calibration.t_max_us);
      if (auto pts = get_number(*s, "points", pre)) cfg.calibration.points = static_cast<int>(*pts);
      if (auto sigma = get_number(*s, "noise_sigma", pre)) {
        if (*sigma < 0.0) throw ConfigError("field '" + pre + ".noise_sigma': must be >= 0");
        cfg.calibration.noise_sigma = *sigma;
      }
      if (auto seed = get_number(*s, "seed", pre)) cfg.calibration.seed = static_cast<std::uint64_t>(*seed);
    }
  }
  if (const json* b = get_object(doc, "budget", "")) {
    if (auto path = get_string(*b, "table_csv", "budget")) cfg.budget_table_csv = *path;
    if (const json* entries = find(*b, "entries")) {
      if (!entries->is_array()) throw ConfigError("field 'budget.entries': expected a list");
      for (const auto& e : *entries) {
        if (!e.is_object()) throw ConfigError("field 'budget.entries': expected objects");
        const auto name = get_string(e, "error", "budget.entries");
        const auto value = get_number(e, "infidelity", "budget.entries");
        if (!name || !value) throw ConfigError("field 'budget.entries': need 'error' and 'infidelity'");
        if (*value < 0.0 || *value > 1.0) {
          throw ConfigError("field 'budget.entries': infidelity must be a fraction in [0, 1]");
        }
        cfg.budget.fixed.push_back({*name, *value, false});
      }
    }
    if (const json* ab = get_object(*b, "ablations", "budget")) {
      cfg.budget.qubit = get_bool(*ab, "qubit", "budget.ablations").value_or(false);
      cfg.budget.residual_s2 = get_bool(*ab, "residual_s2", "budget.ablations").value_or(false);
      cfg.budget.cavity_decoherence = get_bool(*ab, "cavity_decoherence", "budget.ablations").value_or(false);
    }
    cfg.budget.gamma_q = cfg.purification.gamma_q;
  }
  cfg.delta_list_khz = get_numbers(doc, "delta_list_khz", "").value_or(std::vector<double>{});
  if (auto sweep = get_string(doc, "sweep_experiment", "")) {
    cfg.sweep_experiment = parse_experiment(*sweep);
    if (!is_oscillatory_experiment(cfg.sweep_experiment) || cfg.sweep_experiment == Experiment::Sweep) {
      throw ConfigError("field 'sweep_experiment': must be qst, purified-qst, hom or binomial");
    }
  }

  // Per-experiment required fields.
  const bool needs_system = is_oscillatory_experiment(cfg.experiment) ||
                            cfg.experiment == Experiment::CompareBs ||
                            (cfg.experiment == Experiment::Budget &&
                             (cfg.budget.qubit || cfg.budget.residual_s2 || cfg.budget.cavity_decoherence));
  if (needs_system && !cfg.g_khz) throw ConfigError("missing required field 'g_over_2pi_khz'");
  const bool needs_delta = needs_system && cfg.experiment != Experiment::CompareBs &&
                           cfg.experiment != Experiment::Sweep;
  if (needs_delta && !cfg.delta_khz) throw ConfigError("missing required field 'delta_over_2pi_khz'");
  if ((cfg.experiment == Experiment::Sweep || cfg.experiment == Experiment::CompareBs) &&
      cfg.delta_list_khz.empty()) {
    throw ConfigError("missing required field 'delta_list_khz'");
  }
  if (cfg.experiment == Experiment::Budget && !cfg.budget_table_csv && cfg.budget.fixed.empty() &&
      !needs_system) {
    throw ConfigError("budget: give 'budget.table_csv', 'budget.entries' or 'budget.ablations'");
  }
  if (cfg.experiment == Experiment::CalibrateG && !cfg.calibration.data_csv && !cfg.calibration.true_g_khz) {
    throw ConfigError("missing field 'calibration.data_csv' or 'calibration.synthetic.g_over_2pi_khz'");
  }
  if (cfg.experiment == Experiment::CalibrateDelta0) {
    if (!cfg.g_khz) throw ConfigError("missing required field 'g_over_2pi_khz'");
    if (!cfg.calibration.data_csv && !cfg.calibration.true_delta0_khz) {
      throw ConfigError("missing field 'calibration.data_csv' or 'calibration.synthetic.delta0_over_2pi_khz'");
    }
  }

  // Regime check is a warning here; the runners raise the error.
  if (is_oscillatory_experiment(cfg.experiment) && cfg.g_khz) {
    const double threshold = 2.0 * std::numbers::sqrt2 * *cfg.g_khz;
    std::vector<double> deltas = cfg.delta_list_khz;
    if (cfg.experiment != Experiment::Sweep && cfg.delta_khz) deltas = {*cfg.delta_khz};
    for (double d : deltas) {
      if (!(d > threshold)) {
        cfg.regime_warning = true;
        std::ostringstream msg;
        msg << "delta/2pi = " << d << " kHz is not above 2*sqrt(2)*g/2pi = " << threshold
            << " kHz; a quantum phase transition occurs when delta < 2*sqrt(2)*g";
        cfg.warnings.push_back(msg.str());
      }
    }
  }
  return cfg;
}

SystemParams make_params(const RunConfig& config) {
  if (!config.g_khz) throw ConfigError("missing required field 'g_over_2pi_khz'");
  if (!config.delta_khz) throw ConfigError("missing required field 'delta_over_2pi_khz'");
  SystemParams p = SystemParams::from_khz(*config.g_khz, *config.delta_khz);
  if (config.dims) p.dims = ModeDims(*config.dims);
  p.coherence = config.coherence;
  p.validate();
  return p;
}

EvolutionSpec make_spec(const RunConfig& config, const SystemParams& params) {
  double total = 0.0;
  std::optional<double> tau;
  try {
    tau = analytic::tau_st(params);
  } catch (const UnsupportedAsymmetry&) {
  }
  if (config.time.total_us) {
    total = *config.time.total_us;
  } else {
    const double multiple = config.time.total_tau_st.value_or(config.experiment == Experiment::Qst ? 2.0 : 1.0);
    if (!tau) throw ConfigError("field 'time.total_us' is required when tau_ST has no closed form");
    total = multiple * *tau;
  }
  EvolutionSpec spec = EvolutionSpec::uniform(total, static_cast<std::size_t>(config.time.samples), config.method);
  spec.rtol = config.rtol;
  spec.atol = config.atol;
  spec.trotter_order = config.trotter_order;
  spec.trotter_dt = config.trotter_dt_us.value_or((tau ? *tau : total) / 2000.0);
  spec.validate();
  return spec;
}

}  // namespace exfree::cli

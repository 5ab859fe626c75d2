#include "dispatch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>

#include "exfree/analytic.hpp"
#include "exfree/report.hpp"
#include "exfree/version.hpp"

namespace exfree::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path resolve(const RunConfig& config, const fs::path& p) {
  return p.is_absolute() ? p : config.base_dir / p;
}

// Numeric table with one header line. Columns are matched by the text
// before any " (unit)" suffix.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<std::string>> raw;

  int find(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return static_cast<int>(c);
    }
    return -1;
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

Table read_table(const fs::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError("field '" + field + "': cannot open '" + path.string() + "'");
  Table table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (table.header.empty()) {
      for (auto& c : cells) {
        const auto paren = c.find(" (");
        table.header.push_back(paren == std::string::npos ? c : c.substr(0, paren));
      }
      table.columns.resize(table.header.size());
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ConfigError("field '" + field + "': row '" + line + "' has the wrong number of cells");
    }
    table.raw.push_back(cells);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      table.columns[c].push_back(end != cells[c].c_str() && *end == '\0' ? v : std::nan(""));
    }
  }
  if (table.header.empty()) throw ConfigError("field '" + field + "': '" + path.string() + "' is empty");
  return table;
}

const std::vector<double>& numeric_column(const Table& t, std::string_view name, const std::string& field) {
  const int c = t.find(name);
  if (c < 0) throw ConfigError("field '" + field + "': missing column '" + std::string(name) + "'");
  for (double v : t.columns[c]) {
    if (!std::isfinite(v)) throw ConfigError("field '" + field + "': column '" + std::string(name) + "' is not numeric");
  }
  return t.columns[c];
}

std::string scalar_line(const ProtocolResult& r, const std::string& key, const std::string& label,
                        const std::string& unit = "") {
  const auto it = r.scalars.find(key);
  if (it == r.scalars.end()) return {};
  return "  " + label + " = " + fmt(it->second) + (unit.empty() ? "" : " " + unit) + "\n";
}

std::string header_text(const RunConfig& config, const SystemParams* params) {
  std::string s = "exfree-qst " + to_string(config.experiment) + " [" + config.label + "]\n";
  if (params) {
    s += "  g/2pi = " + fmt(angular_to_khz(params->g1)) + " kHz, delta/2pi = " + fmt(angular_to_khz(params->delta)) +
         " kHz, dims = (" + std::to_string(params->dims[0]) + "," + std::to_string(params->dims[1]) + "," +
         std::to_string(params->dims[2]) + "), method = " + std::string(to_string(config.method)) + "\n";
  }
  return s;
}

void add_result_files(Artifacts& a, const ProtocolResult& result) {
  if (!result.times.empty()) a.files["trajectory.csv"] = trajectory_csv(result);
  for (const auto& w : result.wigner) a.files["wigner_" + w.label + ".csv"] = wigner_csv(w);
  a.files["summary.json"] = dump(to_json(result));
}

std::string flags_text(const ProtocolResult& result) {
  std::string s;
  for (const auto& f : result.flags) s += "  note: " + f + "\n";
  return s;
}

Artifacts run_protocol(const RunConfig& config) {
  const SystemParams params = make_params(config);
  const EvolutionSpec spec = make_spec(config, params);
  Artifacts a;
  a.summary_text = header_text(config, &params);
  ProtocolResult result;
  std::string body;
  switch (config.experiment) {
    case Experiment::Qst: {
      result = run_single_photon_qst(params, spec);
      const auto& n3 = result.column("n3").values;
      const auto& n2 = result.column("n2").values;
      const auto peak = std::max_element(n3.begin(), n3.end()) - n3.begin();
      result.scalars["n3_peak"] = n3[peak];
      result.scalars["t_n3_peak_us"] = result.times[peak];
      result.scalars["n2_max"] = *std::max_element(n2.begin(), n2.end());
      body += scalar_line(result, "tau_st_us", "tau_ST", "us");
      body += scalar_line(result, "tau_s2_us", "tau_S2", "us");
      body += scalar_line(result, "n3_peak", "peak <n3>");
      body += scalar_line(result, "t_n3_peak_us", "peak time", "us");
      body += scalar_line(result, "n2_max", "max <n2>");
      break;
    }
    case Experiment::PurifiedQst:
      result = run_purified_qst(params, spec, config.purification);
      body += scalar_line(result, "readout_time_us", "readout time", "us");
      body += scalar_line(result, "fidelity_unpurified", "F (no purification)");
      body += scalar_line(result, "fidelity_qubit", "F (qubit purified)");
      body += scalar_line(result, "fidelity_qubit_cavity", "F (qubit + cavity purified)");
      body += scalar_line(result, "retention", "retention");
      break;
    case Experiment::Hom:
      result = run_hom(params, spec, config.hom_snapshots_us);
      for (const auto& snap : result.snapshots) {
        body += "  t = " + fmt(snap.t) + " us: P11 = " + fmt(snap.values.at("P11")) +
                ", P02+P20 = " + fmt(snap.values.at("P02_plus_P20"));
        if (snap.values.count("fidelity")) body += ", F = " + fmt(snap.values.at("fidelity"));
        body += "\n";
      }
      break;
    case Experiment::Binomial:
      result = run_binomial_transfer(params, spec, config.binomial_label, config.binomial);
      body += "  label = " + std::string(to_string(config.binomial_label)) + "\n";
      body += scalar_line(result, "fidelity", "F (phase optimized)");
      body += scalar_line(result, "phase_rad", "phase", "rad");
      body += scalar_line(result, "p_code_parity", "P(code parity)");
      body += scalar_line(result, "fidelity_conditioned", "F (parity conditioned)");
      body += scalar_line(result, "jump_probability", "jump probability");
      body += scalar_line(result, "fidelity_error_state", "F (error state)");
      break;
    default:
      throw ConfigError("internal: not a protocol experiment");
  }
  add_result_files(a, result);
  a.summary_text += body + flags_text(result);
  return a;
}

Artifacts run_calibrate_g(const RunConfig& config) {
  std::vector<double> t;
  std::vector<double> p0;
  const auto& cal = config.calibration;
  if (cal.data_csv) {
    const auto table = read_table(resolve(config, *cal.data_csv), "calibration.data_csv");
    t = numeric_column(table, "t_us", "calibration.data_csv");
    p0 = numeric_column(table, "p0", "calibration.data_csv");
  } else {
    if (cal.points < 2) throw ConfigError("field 'calibration.synthetic.points': integer >= 2 required");
    for (int k = 0; k < cal.points; ++k) t.push_back(cal.t_max_us * k / (cal.points - 1));
    std::optional<NoiseSpec> noise;
    if (cal.noise_sigma > 0.0) noise = NoiseSpec{cal.noise_sigma, cal.seed};
    p0 = generate_tmsv_trace(khz_to_angular(*cal.true_g_khz), t, noise);
  }
  const FitResult fit = fit_tms_strength(t, p0);
  if (!fit.converged) throw NonConvergence("calibrate-g: " + fit.message);

  std::vector<double> model;
  for (double ti : t) {
    const double c = std::cosh(fit.value("g") * ti);
    model.push_back(fit.value("a") / (c * c) + fit.value("b"));
  }
  Artifacts a;
  const std::vector<CsvColumn> cols{{"t", "us", t}, {"p0", "probability", p0}, {"p0_fit", "probability", model}};
  a.files["trajectory.csv"] = write_csv(cols);
  json summary;
  summary["experiment"] = "calibrate-g";
  summary["fit"] = to_json(fit);
  summary["g_over_2pi_khz"] = angular_to_khz(fit.value("g"));
  summary["g_over_2pi_khz_sigma"] = angular_to_khz(fit.sigma("g"));
  if (!cal.data_csv) summary["true_g_over_2pi_khz"] = *cal.true_g_khz;
  a.files["summary.json"] = dump(summary);
  a.summary_text = header_text(config, nullptr) + "  g/2pi = " + fmt(angular_to_khz(fit.value("g"))) +
                   " +- " + fmt(angular_to_khz(fit.sigma("g")), 3) + " kHz (rms residual " +
                   fmt(fit.residual_rms, 3) + ")\n";
  return a;
}

Artifacts run_calibrate_delta0(const RunConfig& config) {
  const auto& cal = config.calibration;
  const double g = khz_to_angular(*config.g_khz);
  std::vector<double> dd_khz;
  std::vector<double> tau;
  if (cal.data_csv) {
    const auto table = read_table(resolve(config, *cal.data_csv), "calibration.data_csv");
    dd_khz = numeric_column(table, "delta_d_khz", "calibration.data_csv");
    tau = numeric_column(table, "tau_s2_us", "calibration.data_csv");
  } else {
    dd_khz = cal.delta_d_khz;
    if (dd_khz.empty()) throw ConfigError("missing field 'calibration.synthetic.delta_d_list_khz'");
    std::mt19937_64 rng(cal.seed);
    std::normal_distribution<double> noise(0.0, cal.noise_sigma > 0.0 ? cal.noise_sigma : 1.0);
    for (double d : dd_khz) {
      SystemParams p = SystemParams::from_khz(*config.g_khz, d + *cal.true_delta0_khz);
      double value = analytic::tau_s2(p);
      if (cal.noise_sigma > 0.0) value += noise(rng);
      tau.push_back(value);
    }
  }
  std::vector<double> dd;
  for (double d : dd_khz) dd.push_back(khz_to_angular(d));
  const FitResult fit = fit_stark_detuning(dd, tau, g);
  if (!fit.converged) throw NonConvergence("calibrate-delta0: " + fit.message);

  std::vector<double> model;
  for (double d : dd) {
    const double total = d + fit.value("delta_0");
    const double arg = total * total - 8.0 * g * g;
    model.push_back(arg > 0.0 ? kTwoPi / std::sqrt(arg) : std::nan(""));
  }
  Artifacts a;
  const std::vector<CsvColumn> cols{
      {"delta_d_over_2pi", "kHz", dd_khz}, {"tau_s2", "us", tau}, {"tau_s2_fit", "us", model}};
  a.files["calibration.csv"] = write_csv(cols);
  json summary;
  summary["experiment"] = "calibrate-delta0";
  summary["fit"] = to_json(fit);
  summary["delta0_over_2pi_khz"] = angular_to_khz(fit.value("delta_0"));
  summary["delta0_over_2pi_khz_sigma"] = angular_to_khz(fit.sigma("delta_0"));
  if (!cal.data_csv) summary["true_delta0_over_2pi_khz"] = *cal.true_delta0_khz;
  a.files["summary.json"] = dump(summary);
  a.summary_text = header_text(config, nullptr) + "  delta_0/2pi = " +
                   fmt(angular_to_khz(fit.value("delta_0"))) + " +- " +
                   fmt(angular_to_khz(fit.sigma("delta_0")), 3) + " kHz\n";
  return a;
}

std::vector<BudgetLine> read_budget_table(const fs::path& path) {
  const std::string field = "budget.table_csv";
  const auto table = read_table(path, field);
  const int name_col = table.find("error");
  if (name_col < 0) throw ConfigError("field '" + field + "': missing column 'error'");
  int value_col = table.find("infidelity");
  double scale = 1.0;
  if (value_col < 0) {
    value_col = table.find("infidelity_percent");
    scale = 0.01;
  }
  if (value_col < 0) throw ConfigError("field '" + field + "': missing column 'infidelity' or 'infidelity_percent'");
  std::vector<BudgetLine> lines;
  for (std::size_t r = 0; r < table.raw.size(); ++r) {
    const double v = table.columns[value_col][r] * scale;
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ConfigError("field '" + field + "': row " + std::to_string(r + 1) + " has an invalid infidelity");
    }
    lines.push_back({table.raw[r][name_col], v, false});
  }
  return lines;
}

Artifacts run_budget(const RunConfig& config) {
  BudgetSpec budget = config.budget;
  if (config.budget_table_csv) {
    auto lines = read_budget_table(resolve(config, *config.budget_table_csv));
    budget.fixed.insert(budget.fixed.begin(), lines.begin(), lines.end());
  }
  const bool simulate = budget.qubit || budget.residual_s2 || budget.cavity_decoherence;
  BudgetReport report;
  std::optional<SystemParams> params;
  if (simulate) {
    params = make_params(config);
    report = error_budget_report(*params, make_spec(config, *params), budget);
  } else {
    report = error_budget_report(SystemParams{}, EvolutionSpec{}, budget);
  }
  Artifacts a;
  std::string csv = "error,infidelity (fraction),simulated (bool)\n";
  for (const auto& l : report.lines) {
    csv += l.name + "," + format_number(l.infidelity) + "," + (l.simulated ? "1" : "0") + "\n";
  }
  a.files["budget.csv"] = csv;
  json summary = to_json(report);
  summary["experiment"] = "budget";
  a.files["summary.json"] = dump(summary);
  a.summary_text = header_text(config, params ? &*params : nullptr);
  for (const auto& l : report.lines) {
    a.summary_text += "  " + l.name + ": " + fmt(100.0 * l.infidelity, 3) + " %" + (l.simulated ? " (simulated)" : "") + "\n";
  }
  a.summary_text += "  combined F ~ " + fmt(report.combined_fidelity, 4) + "\n";
  return a;
}

Artifacts run_compare(const RunConfig& config) {
  std::vector<double> deltas;
  for (double d : config.delta_list_khz) deltas.push_back(khz_to_angular(d));
  const auto rows = compare_tms_vs_bs(khz_to_angular(*config.g_khz), deltas);
  Artifacts a;
  a.files["compare.csv"] = compare_csv(rows);
  json summary{{"experiment", "compare-bs"}, {"g_over_2pi_khz", *config.g_khz}, {"rows", to_json(std::span(rows))}};
  a.files["summary.json"] = dump(summary);
  a.summary_text = header_text(config, nullptr);
  for (const auto& r : rows) {
    a.summary_text += "  delta/2pi = " + fmt(angular_to_khz(r.delta)) + " kHz: tau_ST(BS) = " + fmt(r.tau_bs) + " us";
    a.summary_text += r.tms_valid ? ", tau_ST(TMS) = " + fmt(r.tau_tms) + " us\n" : ", TMS below threshold\n";
  }
  return a;
}

std::string sweep_dir_name(double delta_khz) { return "delta_" + format_number(delta_khz) + "khz"; }

Artifacts run_sweep(const RunConfig& config) {
  Artifacts a;
  a.summary_text = header_text(config, nullptr);
  json rows = json::array();
  int ran = 0;
  for (double d : config.delta_list_khz) {
    RunConfig sub = config;
    sub.experiment = config.sweep_experiment;
    sub.delta_khz = d;
    const std::string dir = sweep_dir_name(d);
    json row{{"delta_over_2pi_khz", d}, {"directory", dir}};
    try {
      Artifacts child = run_protocol(sub);
      for (auto& [name, content] : child.files) a.files[dir + "/" + name] = std::move(content);
      const json child_summary = json::parse(a.files[dir + "/summary.json"]);
      row["scalars"] = child_summary["scalars"];
      a.summary_text += "  delta/2pi = " + fmt(d) + " kHz -> " + dir + "/\n";
      ++ran;
    } catch (const RegimeError& e) {
      row["error"] = e.what();
      a.summary_text += "  delta/2pi = " + fmt(d) + " kHz skipped: " + e.what() + "\n";
    }
    rows.push_back(row);
  }
  if (ran == 0) throw RegimeError("sweep: every detuning is below the oscillatory threshold");
  a.files["summary.json"] = dump(json{{"experiment", "sweep"},
                                      {"sweep_experiment", to_string(config.sweep_experiment)},
                                      {"points", rows}});
  return a;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

}  // namespace

Artifacts run_experiment(const RunConfig& config) {
  switch (config.experiment) {
    case Experiment::Qst:
    case Experiment::PurifiedQst:
    case Experiment::Hom:
    case Experiment::Binomial:
      return run_protocol(config);
    case Experiment::CalibrateG:
      return run_calibrate_g(config);
    case Experiment::CalibrateDelta0:
      return run_calibrate_delta0(config);
    case Experiment::Budget:
      return run_budget(config);
    case Experiment::CompareBs:
      return run_compare(config);
    case Experiment::Sweep:
      return run_sweep(config);
  }
  throw ConfigError("unknown experiment");
}

json build_manifest(const RunConfig& config) {
  json m;
  m["experiment"] = to_string(config.experiment);
  m["label"] = config.label;
  m["config"] = config.source;
  json resolved;
  if (config.g_khz) resolved["g_over_2pi_khz"] = *config.g_khz;
  if (config.delta_khz) resolved["delta_over_2pi_khz"] = *config.delta_khz;
  resolved["method"] = std::string(to_string(config.method));
  resolved["rtol"] = config.rtol;
  resolved["atol"] = config.atol;
  if (config.g_khz && config.delta_khz) {
    const SystemParams params = make_params(config);
    resolved["dims"] = params.dims.levels();
    try {
      const EvolutionSpec spec = make_spec(config, params);
      resolved["total_time_us"] = spec.total_time;
      resolved["samples"] = spec.sample_times.size();
      if (config.method == Method::Trotter) resolved["trotter_dt_us"] = spec.trotter_dt;
    } catch (const Error&) {
    }
    json coh = json::array();
    for (const auto& c : params.coherence) {
      json e{{"n_th", c.n_th}};
      e["t1_us"] = c.t1 ? json(*c.t1) : json(nullptr);
      e["tphi_us"] = c.tphi ? json(*c.tphi) : json(nullptr);
      coh.push_back(e);
    }
    resolved["coherence"] = coh;
  }
  m["resolved"] = resolved;
  m["versions"] = {{"exfree", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  m["warnings"] = config.warnings;
  return m;
}

fs::path write_artifacts(const Artifacts& artifacts, const RunConfig& config, const fs::path& out_root,
                         const std::string& command_line) {
  const fs::path final_dir = out_root / to_string(config.experiment) / config.label;
  const fs::path staging = out_root / to_string(config.experiment) / (config.label + ".partial");
  fs::remove_all(staging);
  try {
    fs::create_directories(staging);
    write_file(staging / "manifest.json", dump(build_manifest(config)));
    for (const auto& [name, content] : artifacts.files) write_file(staging / name, content);
    write_file(staging / "run-manifest.json",
               dump(json{{"started_utc", timestamp_utc()}, {"command", command_line}, {"exfree", kVersion}}));
    fs::remove_all(final_dir);
    fs::rename(staging, final_dir);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  return final_dir;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exchange-free quantum state transfer simulator", "exfree-qst"};
  std::string experiment;
  std::string config_path;
  std::string out_dir = "out";
  std::string method;
  std::string dims;
  app.add_option("experiment", experiment,
                 "qst | purified-qst | hom | binomial | calibrate-g | calibrate-delta0 | budget | compare-bs | sweep")
      ->required();
  app.add_option("--config", config_path, "JSON config (comments allowed)")->required();
  app.add_option("--out", out_dir, "output root directory")->capture_default_str();
  app.add_option("--method", method, "exact | trotter | lindblad");
  app.add_option("--dims", dims, "Fock truncation N1,N2,N3");
  app.set_version_flag("--version", std::string(kVersion));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  try {
    RunConfig config = load_config(config_path);
    if (to_string(config.experiment) != experiment) {
      parse_experiment(experiment);
      throw ConfigError("experiment '" + experiment + "' does not match config field 'experiment' = '" +
                        to_string(config.experiment) + "'");
    }
    if (!method.empty()) {
      try {
        config.method = parse_method(method);
      } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("--method: ") + e.what());
      }
    }
    if (!dims.empty()) config.dims = parse_dims(dims);
    for (const auto& w : config.warnings) err << "warning: " << w << "\n";

    const Artifacts artifacts = run_experiment(config);
    const fs::path dir = write_artifacts(artifacts, config, out_dir, command_line);
    out << artifacts.summary_text << "  artifacts: " << dir.string() << "\n";
    return kExitOk;
  } catch (const RegimeError& e) {
    err << "regime error: " << e.what() << "\n";
    return kExitRegime;
  } catch (const NonConvergence& e) {
    err << "did not converge: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParameter& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidDimension& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const OutOfTruncation& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnsupportedAsymmetry& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace exfree::cli

#include "exfree/report.hpp"

#include <cmath>
#include <cstdio>

#include "exfree/errors.hpp"

namespace exfree {

namespace {

// JSON has no inf/nan; they are written as null.
nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json number_list(const std::vector<double>& values) {
  auto out = nlohmann::json::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value == 0.0 ? 0.0 : value);
  return buf;
}

std::string write_csv(std::span<const CsvColumn> columns) {
  std::string out;
  std::size_t rows = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out += ',';
    out += columns[c].name;
    if (!columns[c].unit.empty()) out += " (" + columns[c].unit + ")";
    if (c == 0) {
      rows = columns[c].values.size();
    } else if (columns[c].values.size() != rows) {
      throw InvalidParameter("write_csv: column '" + columns[c].name + "' has the wrong length");
    }
  }
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c > 0) out += ',';
      out += format_number(columns[c].values[r]);
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const ProtocolResult& result) {
  std::vector<CsvColumn> cols{{"t", "us", result.times}};
  for (const auto& s : result.series) cols.push_back({s.name, s.unit, s.values});
  return write_csv(cols);
}

std::string wigner_csv(const WignerMap& map) {
  std::vector<CsvColumn> cols{{"re_alpha", "sqrt photons", {}},
                              {"im_alpha", "sqrt photons", {}},
                              {"W", "1/area", map.values}};
  for (const auto& a : map.alphas) {
    cols[0].values.push_back(a.real());
    cols[1].values.push_back(a.imag());
  }
  return write_csv(cols);
}

std::string compare_csv(std::span<const CompareRow> rows) {
  std::vector<CsvColumn> cols{{"delta_over_2pi", "kHz", {}},
                              {"tms_valid", "bool", {}},
                              {"tau_st_tms", "us", {}},
                              {"tau_st_bs", "us", {}},
                              {"n2_amplitude_tms", "photons per input photon", {}},
                              {"n2_amplitude_bs", "photons per input photon", {}}};
  const double nan = std::nan("");
  for (const auto& r : rows) {
    cols[0].values.push_back(angular_to_khz(r.delta));
    cols[1].values.push_back(r.tms_valid ? 1.0 : 0.0);
    cols[2].values.push_back(r.tms_valid ? r.tau_tms : nan);
    cols[3].values.push_back(r.tau_bs);
    cols[4].values.push_back(r.tms_valid ? r.n2_amplitude_tms : nan);
    cols[5].values.push_back(r.n2_amplitude_bs);
  }
  return write_csv(cols);
}

nlohmann::json to_json(const PauliTable& table) {
  nlohmann::json j;
  const auto labels = PauliTable::labels();
  for (std::size_t k = 0; k < labels.size(); ++k) j["values"][std::string(labels[k])] = table.values[k];
  j["weight"] = table.weight;
  return j;
}

nlohmann::json to_json(const ProcessMatrix& process) {
  nlohmann::json j;
  auto re = nlohmann::json::array();
  auto im = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    auto rr = nlohmann::json::array();
    auto ii = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(process.choi(r, c).real());
      ii.push_back(process.choi(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["choi_real"] = re;
  j["choi_imag"] = im;
  j["basis"] = "|in> (x) |out>, normalized Choi";
  return j;
}

nlohmann::json to_json(const ProtocolResult& result) {
  nlohmann::json j;
  j["experiment"] = result.experiment;
  j["times_us"] = number_list(result.times);
  for (const auto& s : result.series) {
    j["series"][s.name] = {{"unit", s.unit}, {"values", number_list(s.values)}};
  }
  j["scalars"] = nlohmann::json::object();
  for (const auto& [k, v] : result.scalars) j["scalars"][k] = number(v);
  j["stages"] = nlohmann::json::array();
  for (const auto& s : result.stages) {
    j["stages"].push_back({{"name", s.name}, {"success_probability", s.success_probability}});
  }
  j["retention"] = result.retention();
  j["snapshots"] = nlohmann::json::array();
  for (const auto& s : result.snapshots) {
    nlohmann::json snap{{"t_us", s.t}};
    for (const auto& [k, v] : s.values) snap[k] = number(v);
    j["snapshots"].push_back(snap);
  }
  if (result.pauli) j["pauli"] = to_json(*result.pauli);
  if (result.process) j["process"] = to_json(*result.process);
  j["wigner_maps"] = nlohmann::json::array();
  for (const auto& w : result.wigner) j["wigner_maps"].push_back("wigner_" + w.label + ".csv");
  j["flags"] = result.flags;
  return j;
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j;
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    j["estimates"][fit.names[k]] = {{"value", number(fit.estimates[k])}, {"sigma", number(fit.sigmas[k])}};
  }
  j["residual_rms"] = number(fit.residual_rms);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["at_bound"] = fit.at_bound;
  j["message"] = fit.message;
  return j;
}

nlohmann::json to_json(const BudgetReport& report) {
  nlohmann::json j;
  j["lines"] = nlohmann::json::array();
  for (const auto& l : report.lines) {
    j["lines"].push_back({{"error", l.name}, {"infidelity", number(l.infidelity)}, {"simulated", l.simulated}});
  }
  j["combined_fidelity"] = report.combined_fidelity;
  j["reference_fidelities"] = nlohmann::json::object();
  for (const auto& [k, v] : report.reference_fidelities) j["reference_fidelities"][k] = number(v);
  return j;
}

nlohmann::json to_json(std::span<const CompareRow> rows) {
  auto j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row{{"delta_over_2pi_khz", angular_to_khz(r.delta)},
                       {"tms_valid", r.tms_valid},
                       {"tau_st_bs_us", r.tau_bs},
                       {"n2_amplitude_bs", r.n2_amplitude_bs}};
    if (r.tms_valid) {
      row["tau_st_tms_us"] = r.tau_tms;
      row["n2_amplitude_tms"] = r.n2_amplitude_tms;
    }
    j.push_back(row);
  }
  return j;
}

}  // namespace exfree

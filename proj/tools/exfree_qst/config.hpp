#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exfree/dynamics.hpp"
#include "exfree/errors.hpp"
#include "exfree/experiments.hpp"
#include "exfree/model.hpp"

namespace exfree::cli {

// Missing or malformed configuration; the message names the field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Experiment {
  Qst,
  PurifiedQst,
  Hom,
  Binomial,
  CalibrateG,
  CalibrateDelta0,
  Budget,
  CompareBs,
  Sweep
};

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

struct TimeConfig {
  std::optional<double> total_us;
  std::optional<double> total_tau_st;  // multiples of the closed-form transfer time
  int samples = 401;
};

struct CalibrationConfig {
  std::optional<std::filesystem::path> data_csv;
  // Synthetic ground truth for round-trip runs.
  std::optional<double> true_g_khz;
  std::optional<double> true_delta0_khz;
  std::vector<double> delta_d_khz;
  double t_max_us = 3.0;
  int points = 41;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

struct RunConfig {
  Experiment experiment = Experiment::Qst;
  std::string label = "default";

  std::optional<double> g_khz;
  std::optional<double> delta_khz;
  std::optional<std::vector<int>> dims;
  Method method = Method::ExactUnitary;
  TrotterOrder trotter_order = TrotterOrder::Printed;
  std::optional<double> trotter_dt_us;
  double rtol = 1e-8;
  double atol = 1e-10;
  TimeConfig time;
  std::array<ModeCoherence, 3> coherence{};

  PurificationSpec purification;
  std::vector<double> hom_snapshots_us;
  BinomialLabel binomial_label = BinomialLabel::ZeroL;
  BinomialOptions binomial;
  CalibrationConfig calibration;

  BudgetSpec budget;
  std::optional<std::filesystem::path> budget_table_csv;

  std::vector<double> delta_list_khz;  // compare-bs grid and sweep points
  Experiment sweep_experiment = Experiment::Qst;

  // Regime warning raised at load time; the runner still refuses to run.
  bool regime_warning = false;
  std::vector<std::string> warnings;

  nlohmann::json source;  // parsed config, echoed into manifest.json
  std::filesystem::path base_dir;  // relative paths resolve against this
};

// JSON with // and /* */ comments. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

// Apply --dims N1,N2,N3.
std::vector<int> parse_dims(const std::string& text);

SystemParams make_params(const RunConfig& config);
EvolutionSpec make_spec(const RunConfig& config, const SystemParams& params);

}  // namespace exfree::cli

#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exfree/experiments.hpp"
#include "exfree/fit.hpp"
#include "exfree/metrics.hpp"

namespace exfree {

// Fixed %.12g formatting so identical inputs give identical bytes.
std::string format_number(double value);

struct CsvColumn {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

// Header "name (unit)" per column, then one row per sample.
std::string write_csv(std::span<const CsvColumn> columns);

// t (us) followed by every series of the result.
std::string trajectory_csv(const ProtocolResult& result);
std::string wigner_csv(const WignerMap& map);
std::string compare_csv(std::span<const CompareRow> rows);

nlohmann::json to_json(const ProtocolResult& result);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const BudgetReport& report);
nlohmann::json to_json(std::span<const CompareRow> rows);
nlohmann::json to_json(const PauliTable& table);
nlohmann::json to_json(const ProcessMatrix& process);

}  // namespace exfree

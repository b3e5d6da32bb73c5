#pragma once

// CSV ingestion, cost-matrix files and the JSON model format.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "badacost/booster.hpp"
#include "badacost/cascade.hpp"
#include "badacost/cost_model.hpp"
#include "badacost/dataset.hpp"

namespace badacost {

inline constexpr int kModelFormatVersion = 1;

/// Header plus numeric cells. Rows and columns in diagnostics are 1-based;
/// data row 1 is the first line after the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column position of `name`, if present.
  std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv_table(std::istream& in);
CsvTable read_csv_table(const std::string& path);

/// Splits off `label_column` as integer labels in 1..K. With no `k`, K is the
/// largest label; classes without samples are reported through `warnings`.
Dataset table_to_dataset(const CsvTable& table, const std::string& label_column,
                         std::optional<int> k = std::nullopt,
                         std::vector<std::string>* warnings = nullptr);

Dataset load_csv(const std::string& path, const std::string& label_column,
                 std::optional<int> k = std::nullopt,
                 std::vector<std::string>* warnings = nullptr);

/// Writes features then the label column, reals as shortest round-trip text.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::string& path);

/// K lines of K comma-separated values.
CostMatrix read_cost_csv(std::istream& in);
CostMatrix read_cost_csv(const std::string& path);
std::string cost_csv(const CostMatrix& c);

struct Model {
  Ensemble ensemble;
  std::optional<CascadeThresholds> thresholds;
};

/// Canonical JSON text of a model (sorted keys, checksum included).
std::string model_to_json(const Ensemble& e, const std::optional<CascadeThresholds>& t);
Model model_from_json(const std::string& text);

void save_model(const Ensemble& e, const std::optional<CascadeThresholds>& t,
                const std::string& path);
Model load_model(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace badacost

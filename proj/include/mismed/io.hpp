#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mismed/effects.hpp"
#include "mismed/em.hpp"
#include "mismed/model.hpp"
#include "mismed/sim.hpp"

namespace mismed {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  std::vector<std::string> comments;      // lines starting with '#'
};

// Header row required; blank lines and '#' comment lines are skipped. Throws
// MalformedInput naming the line for ragged rows.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

struct ColumnMap {
  std::string x;
  std::vector<std::string> c;
  std::vector<std::string> z;
  std::string m_star;
  std::string y;
};

// M* accepts {1,2} as-is or {0,1} with 0 -> 2 and 1 -> 1; the mapping is
// recorded in the dataset labels. Throws MissingColumn, MalformedInput
// (non-numeric cell, with line number) or MediatorCode.
MediationDataset dataset_from_csv(const CsvTable& table, const ColumnMap& columns);

std::string format_double(double v);

// Writes `text` to `path` through a temporary file in the same directory.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

std::string dataset_csv(const SimulatedData& sim, bool reveal_truth, const Json& provenance);

Json parameters_to_json(const ParameterSet& params, const MediationDataset& data);
Json fit_report_to_json(const FitReport& report, const MediationDataset& data, const Json& config);
Json naive_fit_to_json(const NaiveFit& fit, Family family, const MediationDataset& data,
                       const Json& config);

// What the effects command needs from a saved report.
struct SavedFit {
  Family family = Family::Normal;
  ParameterSet params;
  std::vector<std::string> c_names;
};
SavedFit saved_fit_from_json(const Json& report);

Json effects_to_json(const EffectEstimates& e, const EffectQuery& q, const SavedFit& fit,
                     const Json& config);

std::string summary_csv(const StudySummary& summary);
Json summary_json(const StudySummary& summary);

// Inverse of summary_csv for the per-cell columns and the scenario fields.
StudySummary parse_summary_csv(const std::string& text);

// Structural check of a study-summary document; returns problems found (empty = valid).
std::vector<std::string> validate_summary_json(const Json& doc);

}  // namespace mismed

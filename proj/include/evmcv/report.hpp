#pragma once

#include "evmcv/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace evmcv {

enum class ReportFormat { Csv, Json };

ReportFormat parse_report_format(std::string_view text);

struct ReportOptions {
  /// Append ref_* columns carrying the published reference values (CSV only; JSON always has them).
  bool reference_columns = false;
};

/// Fixed leading CSV columns.
inline constexpr const char* kCsvColumns[] = {"experiment_id", "n_train", "n_test", "svar",  "svar_evm",
                                              "svar_ls",       "eff_evm", "eff_ls", "ratio", "seed"};
/// Reference keys emitted as ref_<key> when reference_columns is set.
inline constexpr const char* kReferenceKeys[] = {"svar", "svar_evm", "svar_ls", "eff_evm", "eff_ls", "ratio"};

/// Shortest decimal text that parses back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double value);

void write_csv(const std::vector<ExperimentReport>& reports, std::ostream& out, const ReportOptions& opts = {});
void write_json(const std::vector<ExperimentReport>& reports, std::ostream& out);
std::string to_csv(const std::vector<ExperimentReport>& reports, const ReportOptions& opts = {});
std::string to_json(const std::vector<ExperimentReport>& reports);

/// Inverse of to_json for the numeric and identifying fields (wall times are not stored).
std::vector<ExperimentReport> reports_from_json(const std::string& text);

/// Writes to destination; I/O failures are reported with the path.
void emit_report(const std::vector<ExperimentReport>& reports, ReportFormat format,
                 const std::filesystem::path& destination, const ReportOptions& opts = {});

/// CovarianceSpec <-> JSON array of rows.
std::string covariance_to_json(const CovarianceSpec& spec);
CovarianceSpec covariance_from_json(const std::string& text);

}  // namespace evmcv

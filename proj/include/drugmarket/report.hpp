#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "drugmarket/solver.hpp"

namespace drugmarket {

/// One line of a parameter sweep.
struct SweepRow {
  double param = 0.0;
  double theta = 0.0;
  double premium = 0.0;
  double a = 0.0;
  double t = 0.0;
  double o = 0.0;
  double p_i = 0.0;
  double p_p = 0.0;
};

SweepRow sweep_row(double param, const EquilibriumResult& result);
/// Row of NaNs standing in for a failed sweep point.
SweepRow failed_row(double param);

/// %.6g formatting used by every CSV writer; NaN and infinities are spelled
/// nan, inf and -inf.
std::string format_number(double x);
/// Inverse of format_number.
double parse_number(const std::string& text);

extern const char* const kSweepHeader;
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Throws DomainError on a malformed file.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

extern const char* const kResultHeader;
std::string result_csv_row(const EquilibriumResult& result);
std::string result_json(const EquilibriumResult& result);
std::string comparison_json(const ComparisonReport& report);
std::string result_summary(const EquilibriumResult& result);

/// Locus, shares and profit series for plotting a sweep.
std::string plot_json(const std::vector<SweepRow>& rows, const std::string& param_name);

/// Reads a whole CSV into rows of fields (no quoting; the writers never
/// produce commas inside fields). The header is returned separately.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(std::istream& in);

}  // namespace drugmarket

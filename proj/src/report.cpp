#include "drugmarket/report.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "drugmarket/errors.hpp"

namespace drugmarket {
namespace {

using nlohmann::json;

// JSON has no infinity; NoEntry and other non-finite values become null.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json masses_json(const RegionMasses& m) { return {{"a", m.a}, {"t", m.t}, {"o", m.o}}; }

json profits_json(const ProfitPair& p) { return {{"producer", p.producer}, {"insurer", p.insurer}}; }

json result_to_json(const EquilibriumResult& r) {
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back({{"theta", c.theta},
                          {"premium", number_or_null(c.premium)},
                          {"profits", profits_json(c.profits)}});
  }
  const SearchDiagnostics& d = r.diagnostics;
  return {
      {"kind", kind_name(r.kind)},
      {"theta", r.theta},
      {"premium", number_or_null(r.premium)},
      {"insurer_enters", std::isfinite(r.premium)},
      {"masses", masses_json(r.masses)},
      {"profits", profits_json(r.profits)},
      {"candidates", candidates},
      {"diagnostics",
       {{"theta_min", d.theta_min},
        {"theta_max", d.theta_max},
        {"log_spaced", d.log_spaced},
        {"price_grid", d.price_grid},
        {"premium_grid", d.premium_grid},
        {"refinement_evaluations", d.refinement_evaluations},
        {"stationarity_residual", number_or_null(d.stationarity_residual)},
        {"tail_bound", number_or_null(d.tail_bound)},
        {"certified", d.certified},
        {"baseline_profit", number_or_null(d.baseline_profit)},
        {"monotonicity_fallback", d.monotonicity_fallback},
        {"warnings", d.warnings}}},
  };
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

const char* const kSweepHeader = "param,theta,premium,a,t,o,p_i,p_p";
const char* const kResultHeader = "kind,theta,premium,a,t,o,p_i,p_p,certified";

SweepRow sweep_row(double param, const EquilibriumResult& r) {
  return {param, r.theta, r.premium, r.masses.a, r.masses.t, r.masses.o, r.profits.insurer,
          r.profits.producer};
}

SweepRow failed_row(double param) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {param, nan, nan, nan, nan, nan, nan, nan};
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double parse_number(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(text, &used);
  } catch (const std::exception&) {
    throw DomainError("not a number: '" + text + "'");
  }
  if (used != text.size()) throw DomainError("not a number: '" + text + "'");
  return x;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << format_number(r.param) << ',' << format_number(r.theta) << ','
        << format_number(r.premium) << ',' << format_number(r.a) << ',' << format_number(r.t)
        << ',' << format_number(r.o) << ',' << format_number(r.p_i) << ','
        << format_number(r.p_p) << '\n';
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      table.header = split(line, ',');
      first = false;
    } else {
      table.rows.push_back(split(line, ','));
    }
  }
  if (first) throw DomainError("CSV input is empty");
  return table;
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  if (table.header != split(kSweepHeader, ',')) {
    throw DomainError(std::string("sweep CSV header must be '") + kSweepHeader + "'");
  }
  std::vector<SweepRow> rows;
  for (const auto& f : table.rows) {
    if (f.size() != 8) throw DomainError("sweep CSV row does not have 8 fields");
    rows.push_back({parse_number(f[0]), parse_number(f[1]), parse_number(f[2]), parse_number(f[3]),
                    parse_number(f[4]), parse_number(f[5]), parse_number(f[6]),
                    parse_number(f[7])});
  }
  return rows;
}

std::string result_csv_row(const EquilibriumResult& r) {
  std::ostringstream out;
  out << kind_name(r.kind) << ',' << format_number(r.theta) << ',' << format_number(r.premium)
      << ',' << format_number(r.masses.a) << ',' << format_number(r.masses.t) << ','
      << format_number(r.masses.o) << ',' << format_number(r.profits.insurer) << ','
      << format_number(r.profits.producer) << ',' << (r.diagnostics.certified ? 1 : 0);
  return out.str();
}

std::string result_json(const EquilibriumResult& result) { return result_to_json(result).dump(2); }

std::string comparison_json(const ComparisonReport& report) {
  const json j = {
      {"baseline", result_to_json(report.baseline)},
      {"with_insurer", result_to_json(report.with_insurer)},
      {"price_effect", report.price_effect},
      {"access_effect", report.access_effect},
      {"producer_gain", report.producer_gain},
      {"insurer_profit", report.insurer_profit},
  };
  return j.dump(2);
}

std::string result_summary(const EquilibriumResult& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s theta=%.6g premium=%s\n", kind_name(r.kind).c_str(),
                r.theta, std::isfinite(r.premium) ? format_number(r.premium).c_str() : "none");
  out << line;
  std::snprintf(line, sizeof line, "masses       A=%.4f T=%.4f O=%.4f\n", r.masses.a, r.masses.t,
                r.masses.o);
  out << line;
  std::snprintf(line, sizeof line, "profits      producer=%.6g insurer=%.6g\n", r.profits.producer,
                r.profits.insurer);
  out << line;
  if (!r.diagnostics.certified) out << "note         result is not certified\n";
  for (const auto& w : r.diagnostics.warnings) out << "warning      " << w << '\n';
  return out.str();
}

std::string plot_json(const std::vector<SweepRow>& rows, const std::string& param_name) {
  json x = json::array(), theta = json::array(), premium = json::array();
  json a = json::array(), t = json::array(), o = json::array();
  json p_i = json::array(), p_p = json::array();
  for (const auto& r : rows) {
    x.push_back(number_or_null(r.param));
    theta.push_back(number_or_null(r.theta));
    premium.push_back(number_or_null(r.premium));
    a.push_back(number_or_null(r.a));
    t.push_back(number_or_null(r.t));
    o.push_back(number_or_null(r.o));
    p_i.push_back(number_or_null(r.p_i));
    p_p.push_back(number_or_null(r.p_p));
  }
  const json j = {
      {"parameter", param_name},
      {"x", x},
      {"locus", {{"theta", theta}, {"premium", premium}}},
      {"shares", {{"a", a}, {"t", t}, {"o", o}}},
      {"profits", {{"p_i", p_i}, {"p_p", p_p}}},
  };
  return j.dump(2);
}

}  // namespace drugmarket

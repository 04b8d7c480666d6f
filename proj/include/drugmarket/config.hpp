#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drugmarket/distributions.hpp"
#include "drugmarket/solver.hpp"

namespace drugmarket {

/// Parsed right-hand side of a `key = value` line.
struct ConfigValue {
  enum class Type { kNumber, kWord, kCall, kList, kTuple };
  Type type = Type::kNumber;
  double number = 0.0;
  std::string word;                // identifier or call name
  std::vector<ConfigValue> items;  // call arguments, list or tuple items
  std::size_t line = 0;
  std::size_t column = 0;
};

struct ConfigEntry {
  std::string key;
  std::string text;
  ConfigValue value;
  std::size_t line = 0;
  std::size_t column = 0;
};

/// Sections of key = value entries. Keys before any header live in the ""
/// section, which is read as [population].
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has_section(const std::string& section) const;
  const ConfigEntry* find(const std::string& section, const std::string& key) const;

  double number(const std::string& section, const std::string& key, double fallback) const;
  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) const;
  std::string word(const std::string& section, const std::string& key,
                   const std::string& fallback) const;
  std::vector<double> numbers(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::map<std::string, ConfigEntry>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
};

[[noreturn]] void config_fail(const ConfigValue& at, const std::string& what);

Marginal marginal_from(const ConfigValue& value);
std::vector<PlanarAtom> planar_atoms_from(const ConfigValue& value);

/// Population from [population]: mu_p and mu_psi, or atoms; plus r and an
/// optional smooth_radius applied to atoms.
PopulationMeasure population_from(const Config& config);
SolverOptions solver_options_from(const Config& config);

}  // namespace drugmarket

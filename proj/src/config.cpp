#include "drugmarket/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "drugmarket/errors.hpp"

namespace drugmarket {
namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"population", {"mu_p", "mu_psi", "atoms", "r", "smooth_radius"}},
      {"solver",
       {"kind", "premium_grid", "price_grid", "refine_brackets", "premium_tol", "price_tol",
        "theta_max", "tail_mass", "participation_tol", "threads"}},
      {"sweep", {"param", "values"}},
      {"oracle", {"n", "seed", "theta", "premium_fraction"}},
      {"cohort",
       {"file", "model", "agents", "seed", "period", "horizon", "discount", "eps1", "eps2",
        "consumption", "quality", "survival", "diag_prob", "wealth", "success", "loss_fraction"}},
  };
  return keys;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, std::size_t line, std::size_t column0)
      : text_(text), line_(line), column0_(column0) {}

  ConfigValue parse() {
    ConfigValue v = value();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing text");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(what, line_, column0_ + pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  ConfigValue located(ConfigValue::Type type) const {
    ConfigValue v;
    v.type = type;
    v.line = line_;
    v.column = column0_ + pos_;
    return v;
  }

  // Comma-separated items up to `close`; the opening bracket is consumed.
  std::vector<ConfigValue> items(char close) {
    std::vector<ConfigValue> out;
    if (accept(close)) return out;
    do {
      out.push_back(value());
    } while (accept(','));
    expect(close);
    return out;
  }

  ConfigValue value() {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '[') {
      ConfigValue v = located(ConfigValue::Type::kList);
      ++pos_;
      v.items = items(']');
      return v;
    }
    if (c == '(') {
      ConfigValue v = located(ConfigValue::Type::kTuple);
      ++pos_;
      v.items = items(')');
      return v;
    }
    if (c == '"') {
      ConfigValue v = located(ConfigValue::Type::kWord);
      const std::size_t close = text_.find('"', pos_ + 1);
      if (close == std::string::npos) fail("unterminated string");
      v.word = text_.substr(pos_ + 1, close - pos_ - 1);
      pos_ = close + 1;
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      ConfigValue v = located(ConfigValue::Type::kWord);
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
              text_[pos_] == '.' || text_[pos_] == '/' || text_[pos_] == '-')) {
        ++pos_;
      }
      v.word = text_.substr(start, pos_ - start);
      if (v.word == "inf") {
        v.type = ConfigValue::Type::kNumber;
        v.number = std::numeric_limits<double>::infinity();
        return v;
      }
      skip_space();
      if (pos_ < text_.size() && (text_[pos_] == '(' || text_[pos_] == '[')) {
        const char open = text_[pos_++];
        v.type = ConfigValue::Type::kCall;
        v.items = items(open == '(' ? ')' : ']');
      }
      return v;
    }
    ConfigValue v = located(ConfigValue::Type::kNumber);
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    v.number = std::strtod(begin, &end);
    if (end == begin) fail("expected a number, a name or a bracketed list");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  const std::string& text_;
  std::size_t line_;
  std::size_t column0_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  std::size_t e = s.size();
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (lead) *lead = b;
  return s.substr(b, e - b);
}

double as_number(const ConfigValue& v) {
  if (v.type != ConfigValue::Type::kNumber) config_fail(v, "expected a number");
  return v.number;
}

std::vector<double> numeric_args(const ConfigValue& v, std::size_t n) {
  if (v.items.size() != n) {
    config_fail(v, v.word + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
  }
  std::vector<double> out;
  for (const auto& item : v.items) out.push_back(as_number(item));
  return out;
}

const std::string& population_section(const Config& config) {
  static const std::string named = "population";
  static const std::string root;
  return config.has_section(named) ? named : root;
}

}  // namespace

void config_fail(const ConfigValue& at, const std::string& what) {
  throw ConfigError(what, at.line, at.column);
}

Config Config::parse(const std::string& text) {
  Config config;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::size_t hash = std::string::npos;
    bool quoted = false;
    for (std::size_t i = 0; i < raw.size() && hash == std::string::npos; ++i) {
      if (raw[i] == '"') quoted = !quoted;
      if (raw[i] == '#' && !quoted) hash = i;
    }
    const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::size_t lead = 0;
    const std::string stripped = trim(body, &lead);
    if (stripped.empty()) continue;
    if (stripped.front() == '[' && body.find('=') == std::string::npos) {
      if (stripped.back() != ']') throw ConfigError("unterminated section header", line, lead + 1);
      section = trim(stripped.substr(1, stripped.size() - 2));
      if (!known_keys().count(section)) {
        throw ConfigError("unknown section [" + section + "]", line, lead + 2);
      }
      config.sections_[section];
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line, lead + 1);
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError("missing key before '='", line, eq + 1);
    const std::string& lookup = section.empty() ? std::string("population") : section;
    if (!known_keys().at(lookup).count(key)) {
      throw ConfigError("unknown key '" + key + "' in [" + lookup + "]", line, lead + 1);
    }
    auto& entries = config.sections_[section];
    if (entries.count(key)) throw ConfigError("duplicate key '" + key + "'", line, lead + 1);
    std::size_t value_lead = 0;
    const std::string value_text = trim(body.substr(eq + 1), &value_lead);
    const std::size_t value_column = eq + 2 + value_lead;
    if (value_text.empty()) throw ConfigError("missing value for '" + key + "'", line, value_column);
    ConfigEntry entry;
    entry.key = key;
    entry.text = value_text;
    entry.line = line;
    entry.column = lead + 1;
    entry.value = ValueParser(value_text, line, value_column).parse();
    entries.emplace(key, std::move(entry));
  }
  return config;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

const ConfigEntry* Config::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto e = s->second.find(key);
  return e == s->second.end() ? nullptr : &e->second;
}

double Config::number(const std::string& section, const std::string& key, double fallback) const {
  const ConfigEntry* e = find(section, key);
  return e ? as_number(e->value) : fallback;
}

std::size_t Config::count(const std::string& section, const std::string& key,
                          std::size_t fallback) const {
  const ConfigEntry* e = find(section, key);
  if (!e) return fallback;
  const double v = as_number(e->value);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) config_fail(e->value, "expected a whole number");
  return static_cast<std::size_t>(v);
}

std::string Config::word(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
  const ConfigEntry* e = find(section, key);
  if (!e) return fallback;
  if (e->value.type != ConfigValue::Type::kWord) config_fail(e->value, "expected a name");
  return e->value.word;
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
  const ConfigEntry* e = find(section, key);
  if (!e) return {};
  if (e->value.type == ConfigValue::Type::kNumber) return {e->value.number};
  if (e->value.type != ConfigValue::Type::kList) config_fail(e->value, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& item : e->value.items) out.push_back(as_number(item));
  return out;
}

Marginal marginal_from(const ConfigValue& v) {
  if (v.type != ConfigValue::Type::kCall) {
    config_fail(v, "expected a distribution such as beta(2,3) or exp(1)");
  }
  try {
    if (v.word == "beta") {
      const auto a = numeric_args(v, 2);
      return Marginal::beta(a[0], a[1]);
    }
    if (v.word == "exp") {
      const auto a = numeric_args(v, 1);
      return Marginal::exponential(a[0]);
    }
    if (v.word == "pareto") {
      const auto a = numeric_args(v, 2);
      return Marginal::pareto(a[0], a[1]);
    }
    if (v.word == "uniform") {
      const auto a = numeric_args(v, 2);
      return Marginal::uniform(a[0], a[1]);
    }
    if (v.word == "atoms") {
      std::vector<Atom> atoms;
      for (const auto& item : v.items) {
        if (item.type != ConfigValue::Type::kTuple || item.items.size() != 2) {
          config_fail(item, "atoms entries are (location, weight)");
        }
        atoms.push_back({as_number(item.items[0]), as_number(item.items[1])});
      }
      return Marginal::atoms(std::move(atoms));
    }
  } catch (const DomainError& e) {
    config_fail(v, e.what());
  }
  config_fail(v, "unknown distribution '" + v.word + "'");
}

std::vector<PlanarAtom> planar_atoms_from(const ConfigValue& v) {
  if (v.type != ConfigValue::Type::kList) config_fail(v, "atoms must be a list of (p, psi, weight)");
  std::vector<PlanarAtom> atoms;
  for (const auto& item : v.items) {
    if (item.type != ConfigValue::Type::kTuple || item.items.size() != 3) {
      config_fail(item, "atoms entries are (p, psi, weight)");
    }
    atoms.push_back({as_number(item.items[0]), as_number(item.items[1]), as_number(item.items[2])});
  }
  return atoms;
}

PopulationMeasure population_from(const Config& config) {
  const std::string& s = population_section(config);
  const ConfigEntry* r_entry = config.find(s, "r");
  if (!r_entry) throw ConfigError("missing incidence rate 'r'", 0, 0);
  const double r = as_number(r_entry->value);
  const ConfigEntry* atoms = config.find(s, "atoms");
  const ConfigEntry* mu_p = config.find(s, "mu_p");
  const ConfigEntry* mu_psi = config.find(s, "mu_psi");
  try {
    if (atoms) {
      if (mu_p || mu_psi) config_fail(atoms->value, "give either atoms or mu_p/mu_psi, not both");
      PopulationMeasure measure = PopulationMeasure::atoms(planar_atoms_from(atoms->value), r);
      if (const ConfigEntry* radius = config.find(s, "smooth_radius")) {
        return smooth_atoms(measure, as_number(radius->value));
      }
      return measure;
    }
    if (!mu_p || !mu_psi) throw ConfigError("population needs mu_p and mu_psi, or atoms", 0, 0);
    return PopulationMeasure::product(marginal_from(mu_p->value), marginal_from(mu_psi->value), r);
  } catch (const DomainError& e) {
    const ConfigEntry* where = atoms ? atoms : r_entry;
    throw ConfigError(e.what(), where->line, where->column);
  }
}

SolverOptions solver_options_from(const Config& config) {
  SolverOptions o;
  o.premium_grid = config.count("solver", "premium_grid", o.premium_grid);
  o.price_grid = config.count("solver", "price_grid", o.price_grid);
  o.refine_brackets = config.count("solver", "refine_brackets", o.refine_brackets);
  o.premium_tol = config.number("solver", "premium_tol", o.premium_tol);
  o.price_tol = config.number("solver", "price_tol", o.price_tol);
  o.theta_max = config.number("solver", "theta_max", o.theta_max);
  o.tail_mass = config.number("solver", "tail_mass", o.tail_mass);
  o.participation_tol = config.number("solver", "participation_tol", o.participation_tol);
  o.threads = static_cast<unsigned>(config.count("solver", "threads", o.threads));
  return o;
}

}  // namespace drugmarket

#include "tdbsde_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tdbsde/errors.hpp"

namespace tdbsde::cli {

namespace {

enum class Kind { Number, Count, Flag, Text, List };

struct KeyDef {
  const char* name;
  Kind kind;
  const char* fallback;  // nullptr means required
};

struct SectionDef {
  const char* name;
  std::vector<KeyDef> keys;
};

const std::vector<SectionDef>& schema() {
  static const std::vector<SectionDef> sections = {
      {"model",
       {{"variant", Kind::Text, "cir"},
        {"a", Kind::Number, "0.1"},
        {"b", Kind::Number, "0.05"},
        {"kappa", Kind::Number, "0.5"},
        {"mean", Kind::Number, "0.04"},
        {"sigma", Kind::Number, "0.1"},
        {"r0", Kind::Number, "0.04"},
        {"theta", Kind::Number, "0"}}},
      {"grid", {{"maturity", Kind::Number, "1"}, {"steps", Kind::Count, "256"}}},
      {"ratchet-discrete",
       {{"gamma", Kind::Number, nullptr},
        {"g", Kind::Number, "0"},
        {"anniversaries", Kind::List, ""},
        {"y0", Kind::Number, "1"},
        {"policy", Kind::Text, "bond"},
        {"bond_fraction", Kind::Number, "1"}}},
      {"ratchet-continuous",
       {{"gamma", Kind::Number, "1"},
        {"g", Kind::Number, "0"},
        {"x", Kind::Number, "1"},
        {"fund_initial", Kind::Number, "1"},
        {"fund_bond_weight", Kind::Number, "0.5"},
        {"sigma_cap", Kind::Number, "1"}}},
      {"asian",
       {{"variant", Kind::Text, "scaled"},
        {"beta", Kind::Number, nullptr},
        {"gamma", Kind::Number, nullptr},
        {"weight", Kind::Number, "0.5"},
        {"y0", Kind::Number, "1"}}},
      {"withdrawal",
       {{"gamma", Kind::Number, "0.05"},
        {"consumption", Kind::Number, "1"},
        {"horizon", Kind::Number, "40"},
        {"depth", Kind::Count, "10"},
        {"depth_cap", Kind::Count, "16"},
        {"tolerance", Kind::Number, "1e-10"},
        {"max_iterations", Kind::Count, "100"},
        {"quadrature_intervals", Kind::Count, "256"},
        {"oracle_paths", Kind::Count, "0"},
        {"oracle_iteration", Kind::Count, "2"},
        {"oracle_inner_paths", Kind::Count, "64"}}},
      {"obpi",
       {{"weight", Kind::Number, "0.6"},
        {"bracket", Kind::Number, "2"},
        {"tolerance", Kind::Number, "1e-8"},
        {"capital", Kind::Number, "1"}}},
      {"run",
       {{"paths", Kind::Count, "1000"},
        {"seed", Kind::Count, "42"},
        {"first_path", Kind::Count, "0"},
        {"antithetic", Kind::Flag, "false"},
        {"measure", Kind::Text, "Q"},
        {"out", Kind::Text, "out"},
        {"csv_paths", Kind::Count, "10"},
        {"convergence_steps", Kind::List, "256,512,1024,2048"},
        {"convergence_paths", Kind::Count, "200"},
        {"witness_tries", Kind::Count, "10000"},
        {"assumption_paths", Kind::Count, "1000"},
        {"terminal_tolerance", Kind::Number, "0"},
        {"martingale_z", Kind::Number, "0"},
        {"self_financing_tolerance", Kind::Number, "0"},
        {"budget_tolerance", Kind::Number, "0"},
        {"slack_tolerance", Kind::Number, "0"},
        {"lock_in_gap", Kind::Number, "0"},
        {"asian_tolerance", Kind::Number, "0"}}},
  };
  return sections;
}

const SectionDef* find_section(const std::string& name) {
  for (const auto& s : schema()) {
    if (name == s.name) return &s;
  }
  return nullptr;
}

const KeyDef* find_key(const SectionDef& section, const std::string& key) {
  for (const auto& k : section.keys) {
    if (key == k.name) return &k;
  }
  return nullptr;
}

constexpr Product kProducts[] = {Product::RatchetDiscrete, Product::RatchetContinuous, Product::Asian,
                                 Product::Withdrawal, Product::Obpi};

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::optional<double> to_number(const std::string& s) {
  double x = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x)) return std::nullopt;
  return x;
}

std::optional<Value> parse_value(Kind kind, const std::string& raw) {
  switch (kind) {
    case Kind::Number:
      if (auto x = to_number(raw)) return Value(*x);
      return std::nullopt;
    case Kind::Count: {
      std::uint64_t v = 0;
      const char* end = raw.data() + raw.size();
      auto [ptr, ec] = std::from_chars(raw.data(), end, v);
      if (ec != std::errc() || ptr != end || raw.empty()) return std::nullopt;
      return Value(v);
    }
    case Kind::Flag:
      if (raw == "true" || raw == "yes" || raw == "1") return Value(true);
      if (raw == "false" || raw == "no" || raw == "0") return Value(false);
      return std::nullopt;
    case Kind::Text: return Value(raw);
    case Kind::List: {
      std::vector<double> out;
      std::stringstream in(raw);
      std::string item;
      while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        auto x = to_number(item);
        if (!x) return std::nullopt;
        out.push_back(*x);
      }
      return Value(out);
    }
  }
  return std::nullopt;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Number: return "a number";
    case Kind::Count: return "a non-negative integer";
    case Kind::Flag: return "true or false";
    case Kind::Text: return "text";
    case Kind::List: return "a comma-separated list of numbers";
  }
  return "?";
}

template <class T>
const T& get(const std::map<std::string, std::map<std::string, Value>>& values, const std::string& section,
             const std::string& key) {
  const auto s = values.find(section);
  if (s == values.end()) throw InvalidInput("config: section [" + section + "] is not present");
  const auto k = s->second.find(key);
  if (k == s->second.end()) throw InvalidInput("config: unknown key " + section + "." + key);
  if (const T* v = std::get_if<T>(&k->second)) return *v;
  throw InvalidInput("config: key " + section + "." + key + " has a different type");
}

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  - " + l;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems_in)
    : Error(join(problems_in)), problems(std::move(problems_in)) {}

const char* section_name(Product p) {
  switch (p) {
    case Product::RatchetDiscrete: return "ratchet-discrete";
    case Product::RatchetContinuous: return "ratchet-continuous";
    case Product::Asian: return "asian";
    case Product::Withdrawal: return "withdrawal";
    case Product::Obpi: return "obpi";
  }
  return "?";
}

std::vector<std::string> section_keys(const std::string& section) {
  std::vector<std::string> out;
  if (const SectionDef* s = find_section(section)) {
    for (const auto& k : s->keys) out.emplace_back(k.name);
  }
  return out;
}

std::optional<std::string> suggest_key(const std::string& section, const std::string& key) {
  std::optional<std::string> best;
  std::size_t best_d = 3;
  for (const auto& k : section_keys(section)) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

double RunConfig::number(const std::string& s, const std::string& k) const { return get<double>(values_, s, k); }
std::uint64_t RunConfig::count(const std::string& s, const std::string& k) const {
  return get<std::uint64_t>(values_, s, k);
}
bool RunConfig::flag(const std::string& s, const std::string& k) const { return get<bool>(values_, s, k); }
const std::string& RunConfig::text(const std::string& s, const std::string& k) const {
  return get<std::string>(values_, s, k);
}
const std::vector<double>& RunConfig::list(const std::string& s, const std::string& k) const {
  return get<std::vector<double>>(values_, s, k);
}

void RunConfig::set(const std::string& section, const std::string& key, Value value) {
  const auto& current = values_.at(section).at(key);
  if (current.index() != value.index()) throw InvalidInput("config: type mismatch setting " + section + "." + key);
  values_[section][key] = std::move(value);
}

ShortRateModel RunConfig::model() const {
  const std::string& v = text("model", "variant");
  const double r0 = number("model", "r0");
  const double theta = number("model", "theta");
  if (v == "vasicek") {
    return ShortRateModel::vasicek(number("model", "a"), number("model", "b"), number("model", "sigma"), r0, theta);
  }
  if (v == "cir") {
    return ShortRateModel::cir(number("model", "kappa"), number("model", "mean"), number("model", "sigma"), r0,
                               theta);
  }
  if (v == "constant") return ShortRateModel::constant(r0);
  throw InvalidInput("model: variant must be vasicek, cir or constant, got '" + v + "'");
}

TimeGrid RunConfig::grid() const {
  return TimeGrid(number("grid", "maturity"), static_cast<std::size_t>(count("grid", "steps")));
}

EnsembleConfig RunConfig::ensemble() const {
  const std::string& m = text("run", "measure");
  if (m != "P" && m != "Q") throw InvalidInput("run: measure must be P or Q");
  return EnsembleConfig{grid(), m == "P" ? Measure::P : Measure::Q, static_cast<std::size_t>(count("run", "paths")),
                        count("run", "seed"), count("run", "first_path"), flag("run", "antithetic")};
}

RatchetSpec RunConfig::ratchet_discrete() const {
  RatchetSpec spec{number("ratchet-discrete", "gamma"), number("ratchet-discrete", "g"),
                   list("ratchet-discrete", "anniversaries")};
  if (spec.anniversaries.empty()) spec.anniversaries = {0.0, number("grid", "maturity")};
  return spec;
}

DrawdownSpec RunConfig::ratchet_continuous() const {
  const std::string s = "ratchet-continuous";
  return DrawdownSpec{number(s, "gamma"), number(s, "g"), number(s, "fund_initial"), number(s, "fund_bond_weight"),
                      number(s, "sigma_cap")};
}

SmoothingSpec RunConfig::asian() const {
  const std::string& v = text("asian", "variant");
  if (v != "scaled" && v != "fixed") throw InvalidInput("asian: variant must be scaled or fixed, got '" + v + "'");
  return SmoothingSpec{number("asian", "beta"), number("asian", "gamma"), BenchmarkSpec{number("asian", "weight")},
                       v == "scaled" ? SmoothingVariant::Scaled : SmoothingVariant::Fixed};
}

WithdrawalSpec RunConfig::withdrawal() const {
  return WithdrawalSpec{number("withdrawal", "gamma"), number("withdrawal", "consumption"),
                        number("withdrawal", "horizon"), number("grid", "maturity"),
                        static_cast<std::size_t>(count("withdrawal", "quadrature_intervals"))};
}

BenchmarkSpec RunConfig::obpi_benchmark() const { return BenchmarkSpec{number("obpi", "weight")}; }

ObpiOptions RunConfig::obpi_options() const {
  return ObpiOptions{number("obpi", "bracket"), number("obpi", "tolerance"), 200};
}

Tolerances RunConfig::tolerances(const std::string& strategy, bool force, bool* forced) const {
  Tolerances t = default_tolerances(strategy);
  bool loosened = false;
  std::vector<std::string> problems;
  auto apply = [&](const char* key, double& field) {
    const double v = number("run", key);
    if (v <= 0.0) return;
    if (v > field) {
      if (!force) {
        problems.push_back(std::string("run.") + key + " = " + format_number(v) + " loosens the default " +
                           format_number(field) + "; pass --force to allow it");
        return;
      }
      loosened = true;
    }
    field = v;
  };
  apply("terminal_tolerance", t.terminal_relative);
  apply("martingale_z", t.martingale_z);
  apply("self_financing_tolerance", t.self_financing);
  apply("budget_tolerance", t.budget);
  apply("slack_tolerance", t.slack);
  apply("lock_in_gap", t.lock_in_gap);
  apply("asian_tolerance", t.asian_terminal);
  if (!problems.empty()) throw ConfigError(problems);
  if (forced) *forced = loosened;
  return t;
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  // The INI reader drops sections without keys, so headers are collected
  // separately; a bare [asian] means "all defaults".
  std::vector<std::string> declared;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      const auto e = line.find_last_not_of(" \t\r");
      if (b == std::string::npos || line[b] != '[' || line[e] != ']') continue;
      declared.push_back(line.substr(b + 1, e - b - 1));
    }
  }

  std::vector<std::string> problems;
  RunConfig config;
  std::vector<Product> products;
  for (const auto& [name, body] : tree) {
    if (std::find(declared.begin(), declared.end(), name) == declared.end()) {
      problems.push_back("key '" + name + "' is outside any section");
    }
  }
  for (const auto& name : declared) {
    const SectionDef* section = find_section(name);
    if (section == nullptr) {
      problems.push_back("unknown section [" + name + "]");
      continue;
    }
    for (Product p : kProducts) {
      if (name == section_name(p)) products.push_back(p);
    }
    const auto child = tree.find(name);
    if (child == tree.not_found()) continue;
    for (const auto& [key, node] : child->second) {
      const KeyDef* def = find_key(*section, key);
      if (def == nullptr) {
        std::string msg = "unknown key '" + key + "' in [" + name + "]";
        if (auto s = suggest_key(name, key)) msg += "; did you mean '" + *s + "'?";
        problems.push_back(msg);
        continue;
      }
      const std::string raw = node.get_value<std::string>();
      auto v = parse_value(def->kind, raw);
      if (!v) {
        problems.push_back(name + "." + key + " = '" + raw + "' is not " + kind_name(def->kind));
        continue;
      }
      config.values_[name][key] = *v;
    }
  }
  if (products.empty()) {
    problems.push_back(
        "no product section: add exactly one of [ratchet-discrete], [ratchet-continuous], [asian], [withdrawal], "
        "[obpi]");
  } else if (products.size() > 1) {
    problems.push_back("more than one product section; keep exactly one");
  }

  // Fill defaults and report missing required keys for the sections in use.
  std::vector<std::string> used = {"model", "grid", "run"};
  if (products.size() == 1) used.push_back(section_name(products.front()));
  for (const auto& name : used) {
    const SectionDef* section = find_section(name);
    auto& values = config.values_[name];
    for (const auto& k : section->keys) {
      if (values.count(k.name)) continue;
      if (k.fallback == nullptr) {
        problems.push_back("missing required key " + name + "." + k.name);
        continue;
      }
      values[k.name] = *parse_value(k.kind, k.fallback);
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  config.product_ = products.front();

  // Semantic checks; each one is independent so all failures are reported.
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
  };
  check([&] { (void)config.model(); });
  check([&] { (void)config.grid(); });
  check([&] {
    const EnsembleConfig e = config.ensemble();
    if (e.paths == 0) throw InvalidInput("run: paths must be at least 1");
    if (e.antithetic && (e.paths % 2 != 0 || e.first_path % 2 != 0)) {
      throw InvalidInput("run: antithetic runs need an even path count and offset");
    }
  });
  check([&] {
    for (double s : config.list("run", "convergence_steps")) {
      const auto n = static_cast<std::uint64_t>(s);
      if (s != static_cast<double>(n) || n == 0 || (n & (n - 1)) != 0) {
        throw InvalidInput("run: convergence_steps must be powers of two");
      }
    }
  });
  switch (config.product_) {
    case Product::RatchetDiscrete:
      check([&] {
        const RatchetSpec spec = config.ratchet_discrete();
        (void)anniversary_indices(spec, config.grid());
      });
      check([&] {
        const std::string& p = config.text("ratchet-discrete", "policy");
        if (p != "bond" && p != "split" && p != "discard") {
          throw InvalidInput("ratchet-discrete: policy must be bond, split or discard");
        }
        (void)SplitSurplusPolicy(config.number("ratchet-discrete", "bond_fraction"));
        if (!(config.number("ratchet-discrete", "y0") >= 0.0)) throw InvalidInput("ratchet-discrete: y0 must be >= 0");
      });
      break;
    case Product::RatchetContinuous:
      check([&] {
        validate(config.ratchet_continuous());
        if (!(config.number("ratchet-continuous", "x") > 0.0)) throw InvalidInput("ratchet-continuous: x must be > 0");
      });
      break;
    case Product::Asian:
      check([&] {
        const SmoothingSpec spec = config.asian();
        if (spec.variant == SmoothingVariant::Scaled && std::abs(spec.beta + spec.gamma - 1.0) > kConditionTolerance) {
          throw InvalidInput("asian: the scaled claim requires the condition βE[S̃]+γ=1 (E[S̃] = 1 here), but beta + "
                             "gamma = " +
                             format_number(spec.beta + spec.gamma) + "; only the zero solution exists otherwise");
        }
        validate(spec);
        if (!(config.number("asian", "y0") >= 0.0)) throw InvalidInput("asian: y0 must be >= 0");
      });
      break;
    case Product::Withdrawal:
      check([&] {
        validate(config.withdrawal());
        const auto depth = config.count("withdrawal", "depth");
        if (depth == 0) throw InvalidInput("withdrawal: depth must be at least 1");
        if (depth > config.count("withdrawal", "depth_cap")) {
          throw InvalidInput("withdrawal: depth exceeds depth_cap");
        }
        if (!(config.number("withdrawal", "tolerance") > 0.0)) throw InvalidInput("withdrawal: tolerance must be > 0");
        const auto it = config.count("withdrawal", "oracle_iteration");
        if (it < 1 || it > 3) throw InvalidInput("withdrawal: oracle_iteration must be 1, 2 or 3");
      });
      break;
    case Product::Obpi:
      check([&] {
        validate(config.obpi_benchmark());
        if (!(config.number("obpi", "capital") > 0.0)) throw InvalidInput("obpi: capital must be > 0");
        if (!(config.number("obpi", "bracket") > 0.0) || !(config.number("obpi", "tolerance") > 0.0)) {
          throw InvalidInput("obpi: bracket and tolerance must be > 0");
        }
      });
      break;
  }
  check([&] {
    for (const auto& k : {"terminal_tolerance", "martingale_z", "self_financing_tolerance", "budget_tolerance",
                          "slack_tolerance", "lock_in_gap", "asian_tolerance"}) {
      if (config.number("run", k) < 0.0) throw InvalidInput(std::string("run: ") + k + " must be >= 0");
    }
  });
  if (!problems.empty()) throw ConfigError(problems);
  return config;
}

std::string serialize(const RunConfig& config) {
  std::ostringstream out;
  const std::vector<std::string> order = {"model", "grid", section_name(config.product()), "run"};
  bool first = true;
  for (const auto& name : order) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (const auto& k : find_section(name)->keys) {
      out << k.name << " = ";
      switch (k.kind) {
        case Kind::Number: out << format_number(config.number(name, k.name)); break;
        case Kind::Count: out << config.count(name, k.name); break;
        case Kind::Flag: out << (config.flag(name, k.name) ? "true" : "false"); break;
        case Kind::Text: out << config.text(name, k.name); break;
        case Kind::List: {
          const auto& xs = config.list(name, k.name);
          for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << format_number(xs[i]);
          break;
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace tdbsde::cli

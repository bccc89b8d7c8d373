#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tdbsde/asian_smoothing.hpp"
#include "tdbsde/continuous_ratchet.hpp"
#include "tdbsde/discrete_ratchet.hpp"
#include "tdbsde/errors.hpp"
#include "tdbsde/harness.hpp"
#include "tdbsde/obpi.hpp"
#include "tdbsde/short_rate.hpp"
#include "tdbsde/withdrawal.hpp"

namespace tdbsde::cli {

// Every problem found while reading a config, not just the first one.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

using Value = std::variant<double, std::uint64_t, bool, std::string, std::vector<double>>;

enum class Product { RatchetDiscrete, RatchetContinuous, Asian, Withdrawal, Obpi };

const char* section_name(Product p);

/// Validated run configuration: [model], [grid], [run] and exactly one
/// product section. Every known key is present (defaults filled in).
class RunConfig {
 public:
  Product product() const { return product_; }

  double number(const std::string& section, const std::string& key) const;
  std::uint64_t count(const std::string& section, const std::string& key) const;
  bool flag(const std::string& section, const std::string& key) const;
  const std::string& text(const std::string& section, const std::string& key) const;
  const std::vector<double>& list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, Value value);

  ShortRateModel model() const;
  TimeGrid grid() const;
  EnsembleConfig ensemble() const;
  RatchetSpec ratchet_discrete() const;
  DrawdownSpec ratchet_continuous() const;
  SmoothingSpec asian() const;
  WithdrawalSpec withdrawal() const;
  BenchmarkSpec obpi_benchmark() const;
  ObpiOptions obpi_options() const;

  // Module defaults with any [run] overrides applied. Loosening a default
  // needs `force`; `forced` reports whether that happened.
  Tolerances tolerances(const std::string& strategy, bool force, bool* forced = nullptr) const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

 private:
  friend RunConfig parse_config(const std::string& text);
  Product product_ = Product::Asian;
  std::map<std::string, std::map<std::string, Value>> values_;
};

// INI text with sections. Throws ConfigError listing all problems.
RunConfig parse_config(const std::string& text);

// Canonical INI text: fixed section and key order, shortest round-trip numbers.
std::string serialize(const RunConfig& config);

// Known keys of a section (empty for unknown sections).
std::vector<std::string> section_keys(const std::string& section);

// Closest known key within edit distance 2, if any.
std::optional<std::string> suggest_key(const std::string& section, const std::string& key);

std::string format_number(double x);

}  // namespace tdbsde::cli

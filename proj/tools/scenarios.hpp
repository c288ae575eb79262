#pragma once

#include "kahler/models.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kahler::cli {

inline constexpr const char* kVersion = "0.1.0";

struct CheckResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool lower_bound = false;  // pass iff max_residual > tolerance

  nlohmann::json to_json() const;
};

/// Everything a scenario reads.  Unset optionals fall back to per-scenario defaults.
struct ScenarioConfig {
  std::string scenario;
  nlohmann::json model = {{"kind", "fs"}, {"n", 2}};
  std::optional<nlohmann::json> A;  // complex matrix, row-major [re, im] pairs
  std::uint64_t seed = 1;
  std::optional<double> tol;
  int samples = 20;
  double step = 1e-3;
  std::optional<double> B;
  std::optional<int> expect_dimension;
  int curves = 10;
  nlohmann::json mobility = nlohmann::json::object();
  std::string csv;   // curve dump (hplanar)
  std::string dump;  // operator dump (spectral)
  std::vector<std::string> inputs;  // report-merge

  /// Keys are the kebab-case flag names.
  static ScenarioConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct Report {
  std::string scenario;
  nlohmann::json model;
  std::uint64_t seed = 0;
  nlohmann::json tolerances = nlohmann::json::object();
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;
  nlohmann::json results = nlohmann::json::object();

  bool pass() const;
  nlohmann::json to_json() const;
};

/// Name and one-line description of every scenario.
const std::vector<std::pair<std::string, std::string>>& scenario_list();

/// Builds the model of a config, expanding the short kinds ("fs", "flat",
/// "torus", "pullback", "product").
KahlerModel build_model(const ScenarioConfig& cfg);

/// Throws kahler::Error; configuration problems carry ErrorKind::Config.
Report run_scenario(const ScenarioConfig& cfg);

/// 0 when every check passes, 1 otherwise.
int exit_code(const Report& r);

}  // namespace kahler::cli

#include "scenarios.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using json = nlohmann::json;
using kahler::cli::ScenarioConfig;

struct Flags {
  std::string config, model, A, A_file, out, csv, dump;
  std::optional<int> n, expect_dimension, samples, curves;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol, step, B;
  std::vector<double> periods;
  std::vector<std::string> inputs;
  bool list_json = false;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kahler::Error(kahler::ErrorKind::Config, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw kahler::Error(kahler::ErrorKind::Config, path + ": " + e.what());
  }
}

/// Config file first, command-line flags on top.
ScenarioConfig make_config(const std::string& scenario, const Flags& f) {
  json j = f.config.empty() ? json::object() : read_json_file(f.config);
  if (!j.is_object()) throw kahler::Error(kahler::ErrorKind::Config, "config must be a JSON object");
  j["scenario"] = scenario;
  if (!f.model.empty()) {
    json model = j.contains("model") && j["model"].is_object() ? j["model"] : json::object();
    if (model.value("kind", std::string()) != f.model) model = json::object();
    model["kind"] = f.model;
    j["model"] = model;
  }
  if (f.n) j["n"] = *f.n;
  if (!f.periods.empty()) j["periods"] = f.periods;
  if (!f.A_file.empty()) j["A"] = read_json_file(f.A_file);
  if (f.seed) j["seed"] = *f.seed;
  if (f.tol) j["tol"] = *f.tol;
  if (f.samples) j["samples"] = *f.samples;
  if (f.step) j["step"] = *f.step;
  if (f.B) j["B"] = *f.B;
  if (f.expect_dimension) j["expect-dimension"] = *f.expect_dimension;
  if (f.curves) j["curves"] = *f.curves;
  if (!f.csv.empty()) j["csv"] = f.csv;
  if (!f.dump.empty()) j["dump"] = f.dump;
  if (!f.inputs.empty()) j["inputs"] = f.inputs;
  auto cfg = ScenarioConfig::from_json(j);
  if (cfg.A && cfg.model.value("kind", std::string()) == "pullback") cfg.model["A"] = *cfg.A;
  return cfg;
}

void print_list(bool as_json) {
  if (as_json) {
    json arr = json::array();
    for (const auto& [name, _] : kahler::cli::scenario_list()) arr.push_back(name);
    std::cout << arr.dump() << '\n';
    return;
  }
  for (const auto& [name, _] : kahler::cli::scenario_list()) std::cout << name << '\n';
}

bool usage_error(kahler::ErrorKind k) {
  using kahler::ErrorKind;
  return k == ErrorKind::Config || k == ErrorKind::InvalidInput || k == ErrorKind::UnsupportedModel ||
         k == ErrorKind::UnsupportedDimension;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chart-based Kahler geometry scenarios", "kahler"};
  app.set_version_flag("--version", kahler::cli::kVersion);
  app.require_subcommand(0, 1);
  Flags f;

  auto* opts = app.add_option_group("scenario options");
  opts->add_option("--config", f.config, "JSON config file (flags override it)");
  opts->add_option("--model", f.model, "fs | flat | torus | pullback | product");
  opts->add_option("--n", f.n, "complex dimension");
  opts->add_option("--A", f.A, "rejected: use --A-file");
  opts->add_option("--A-file", f.A_file, "JSON complex matrix, rows of [re, im] pairs");
  opts->add_option("--periods", f.periods, "torus periods");
  opts->add_option("--seed", f.seed, "sample seed");
  opts->add_option("--tol", f.tol, "override every check tolerance");
  opts->add_option("--samples", f.samples, "sample points");
  opts->add_option("--step", f.step, "integration step");
  opts->add_option("--B", f.B, "B constant");
  opts->add_option("--expect-dimension", f.expect_dimension, "expected mobility");
  opts->add_option("--curves", f.curves, "number of h-planar runs");
  opts->add_option("--out", f.out, "report path (default stdout)");
  opts->add_option("--csv", f.csv, "curve CSV path");
  opts->add_option("--dump", f.dump, "operator dump path");
  app.add_flag("--json", f.list_json, "list scenarios as a JSON array");

  std::string chosen;
  for (const auto& [name, description] : kahler::cli::scenario_list()) {
    auto* sub = app.add_subcommand(name, description);
    sub->fallthrough();
    if (name == "report-merge") sub->add_option("inputs", f.inputs, "reports to merge")->required();
    sub->callback([&chosen, name = name] { chosen = name; });
  }
  app.add_subcommand("list", "list scenarios")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (!f.A.empty()) {
    std::cerr << "error: --A is not accepted; pass the matrix as JSON with --A-file\n";
    return 2;
  }
  if (chosen.empty()) {
    print_list(f.list_json);
    return 0;
  }

  try {
    const auto cfg = make_config(chosen, f);
    const auto report = kahler::cli::run_scenario(cfg);
    const std::string text = report.to_json().dump(2);
    if (f.out.empty()) {
      std::cout << text << '\n';
    } else {
      std::ofstream out(f.out);
      if (!out) throw kahler::Error(kahler::ErrorKind::Config, "cannot write " + f.out);
      out << text << '\n';
    }
    for (const auto& c : report.checks)
      if (!c.pass) std::cerr << "FAIL " << c.name << ": " << c.max_residual << " (tolerance " << c.tolerance << ")\n";
    return kahler::cli::exit_code(report);
  } catch (const kahler::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage_error(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

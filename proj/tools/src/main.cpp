#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdbsde_cli/config.hpp"
#include "tdbsde_cli/dispatch.hpp"

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tdbsde::InvalidInput("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace tdbsde::cli;
  CLI::App app{"Hedging strategies for time-delayed BSDE guarantees"};
  std::string subcommand;
  std::string config_path;
  std::string manifest_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> paths;
  std::optional<std::uint64_t> steps;
  std::optional<std::string> out;
  bool force = false;

  app.add_option("subcommand", subcommand, "Subcommand to run")->check(CLI::IsMember(subcommands()));
  auto* cfg = app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--manifest", manifest_path, "Re-run the configuration recorded in a manifest.json")
      ->check(CLI::ExistingFile)
      ->excludes(cfg);
  app.add_option("--seed", seed, "Master seed (overrides run.seed)");
  app.add_option("--paths", paths, "Number of paths (overrides run.paths)");
  app.add_option("--steps", steps, "Grid steps (overrides grid.steps)");
  app.add_option("--out", out, "Output directory (overrides run.out)");
  app.add_flag("--force", force, "Allow tolerance overrides that loosen the defaults; marks the report");
  CLI11_PARSE(app, argc, argv);

  try {
    std::string text;
    if (!manifest_path.empty()) {
      const auto manifest = nlohmann::json::parse(read_text(manifest_path));
      text = manifest.at("config").get<std::string>();
      if (subcommand.empty()) subcommand = manifest.at("subcommand").get<std::string>();
      force = force || manifest.value("forced", false);
    } else if (!config_path.empty()) {
      text = read_text(config_path);
    } else {
      std::cerr << "error: one of --config or --manifest is required\n";
      return kExitConfig;
    }
    if (subcommand.empty()) {
      std::cerr << "error: no subcommand given\n";
      return kExitConfig;
    }
    RunConfig config = parse_config(text);
    if (seed) config.set("run", "seed", *seed);
    if (paths) config.set("run", "paths", *paths);
    if (steps) config.set("grid", "steps", *steps);
    if (out) config.set("run", "out", *out);
    // Overrides go through the same validation as the file itself.
    config = parse_config(serialize(config));
    return dispatch(config, subcommand, config.text("run", "out"), force, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad manifest: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rqhj/cli/catalog.hpp"
#include "rqhj/cli/config.hpp"
#include "rqhj/cli/scenario.hpp"
#include "rqhj/errors.hpp"

int main(int argc, char** argv) {
  using namespace rqhj::cli;

  CLI::App app{"Spin-1/2 reduced actions from the 1D Dirac equation, with residual checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
  std::string format;
  auto* run = app.add_subcommand("run", "Run a scenario config and write residual tables");
  run->add_option("config", config_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--override", overrides, "Override a config value, key.path=value (repeatable)");
  run->add_option("--out", out_path, "Output path (overrides output.path)");
  run->add_option("--format", format, "Output format (overrides output.format)")
      ->check(CLI::IsMember({"csv", "json"}));

  bool machine = false;
  auto* list = app.add_subcommand("list-potentials", "List potential families and their parameters");
  list->add_flag("--json", machine, "Emit the catalog as a JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitConfigError;
  }

  if (*list) {
    std::cout << (machine ? catalog_schema().dump(2) + "\n" : render_catalog_text());
    return kExitOk;
  }

  try {
    auto doc = load_config_file(config_path);
    for (const auto& o : overrides) {
      apply_override(doc, o);
    }
    if (!out_path.empty()) {
      doc["output"]["path"] = out_path;
    }
    if (!format.empty()) {
      doc["output"]["format"] = format;
    }
    const auto config = parse_config(doc);
    return run_scenario(config, std::cerr);
  } catch (const rqhj::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

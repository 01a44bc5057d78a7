#include <CLI11.hpp>

#include <iostream>

#include "lightray/cli/commands.hpp"

namespace {

using namespace lightray;
using namespace lightray::cli;

cli::RunConfig load(const std::string& path, const std::vector<std::string>& overrides, const std::string& output) {
  Config config = Config::load(path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "--set expects key=value, got '" + o + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    config.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  if (!output.empty()) config.set("output", output);
  return RunConfig::from_config(config);
}

int report(const CommandOutcome& outcome) {
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << outcome.summary;
  for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-ray transform toolkit: forward simulation, slice checks, curl reconstruction, support demos"};
  app.require_subcommand(1);

  std::string config_path, output;
  std::vector<std::string> overrides;
  bool refine = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Run configuration file")->required();
    sub->add_option("-o,--output", output, "Output directory (overrides the config)");
    sub->add_option("-s,--set", overrides, "Override a config entry, key=value");
  };
  auto* forward = app.add_subcommand("forward", "Simulate the sinogram of the configured field");
  add_common(forward);
  auto* slice = app.add_subcommand("slice-check", "Compare both sides of the Fourier slice identity");
  add_common(slice);
  slice->add_flag("--refine", refine, "Double the time samples of the reference grid");
  auto* reconstruct = app.add_subcommand("reconstruct", "Recover the curl / d-form spectrum on the space-like cone");
  add_common(reconstruct);
  auto* support = app.add_subcommand("support-demo", "Run the masked-data support experiment");
  add_common(support);
  auto* formats = app.add_subcommand("formats", "Describe config keys, grid files and CSV outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (formats->parsed()) {
      std::cout << formats_text();
      return kExitOk;
    }
    RunConfig config = load(config_path, overrides, output);
    if (forward->parsed()) return report(cmd_forward(config));
    if (slice->parsed()) {
      if (refine) config.slice_refine = true;
      return report(cmd_slice_check(config));
    }
    if (reconstruct->parsed()) return report(cmd_reconstruct(config));
    if (support->parsed()) return report(cmd_support_demo(config));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

// Command-line front end for experiment configs and figure presets.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or
// usage (nothing written), 3 numerical divergence (partial artifacts).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "adfd/harness.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct CommonFlags {
  std::optional<std::string> out;
  std::optional<std::size_t> seeds;
  bool no_plots = false;
  std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--out", flags.out, "Output root (default: $ADFD_OUTPUT_ROOT or ./out)");
  cmd->add_option("--seeds", flags.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-plots", flags.no_plots, "Skip SVG rendering");
  cmd->add_option("--jobs", flags.jobs, "Parallel workers over seeds")->check(CLI::PositiveNumber);
}

adfd::RunOptions make_options(const CommonFlags& flags) {
  adfd::RunOptions o;
  if (flags.out) {
    o.output_root = *flags.out;
  } else if (const char* env = std::getenv("ADFD_OUTPUT_ROOT"); env && *env) {
    o.output_root = env;
  }
  o.seeds = flags.seeds;
  o.plots = !flags.no_plots;
  o.jobs = flags.jobs;
  return o;
}

std::string fmt(const json& v) {
  if (v.is_null()) return "n/a";
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v.get<double>());
    return buf;
  }
  return v.dump();
}

void print_run(const adfd::RunArtifacts& a) {
  std::cout << a.run_id << "  " << a.directory.string() << "\n"
            << "  H_AD " << fmt(a.summary["H_AD"]) << "  H_FD " << fmt(a.summary["H_FD"])
            << "  e_AD " << fmt(a.summary["e_AD"]) << "  e_FD " << fmt(a.summary["e_FD"])
            << "  seeds " << a.summary["seeds"] << "  " << fmt(a.wall_time) << " s"
            << (a.diverged ? "  DIVERGED" : "") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AD versus FD experiments for physics-informed least squares and training"};
  app.require_subcommand(1);

  CommonFlags run_flags, preset_flags, verify_flags;
  std::string run_path, preset_name, verify_path;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_path, "INI config path")->required();
  add_common(run, run_flags);

  auto* preset = app.add_subcommand("preset", "Run a figure preset");
  preset->add_option("name", preset_name, "Preset name")->required();
  add_common(preset, preset_flags);

  auto* verify = app.add_subcommand("verify", "Check the singular-value propositions only");
  verify->add_option("config", verify_path, "INI config path")->required();
  add_common(verify, verify_flags);

  auto* list = app.add_subcommand("list", "List preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : adfd::preset_names())
        std::cout << name << "  " << adfd::make_preset(name).description << "\n";
      return 0;
    }
    if (run->parsed()) {
      const adfd::ExperimentConfig config = adfd::load_config(run_path);
      const adfd::RunArtifacts a = adfd::run_experiment(config, make_options(run_flags));
      print_run(a);
      return a.diverged ? kExitDiverged : 0;
    }
    if (preset->parsed()) {
      const adfd::Preset p = adfd::make_preset(preset_name);
      const adfd::PresetArtifacts a = adfd::run_preset(p, make_options(preset_flags));
      for (const auto& r : a.runs) print_run(r);
      std::cout << "preset summary: " << (a.directory / "summary.json").string() << "\n";
      return a.diverged ? kExitDiverged : 0;
    }
    if (verify->parsed()) {
      const adfd::ExperimentConfig config = adfd::load_config(verify_path);
      const adfd::RunOptions o = make_options(verify_flags);
      const json report = adfd::verify_experiment(config, o.seeds.value_or(config.seeds));
      const fs::path dir = o.output_root / (config.output_directory.empty() ? config.name
                                                                             : config.output_directory);
      fs::create_directories(dir);
      std::ofstream(dir / "verify.json") << report.dump(2) << '\n';
      for (const auto& seed : report["seeds"]) {
        for (const auto& [mode, check] : seed["checks"].items()) {
          std::cout << "seed " << seed["seed"] << "  " << mode << "  prop1 "
                    << (check["prop1"]["holds"].get<bool>() ? "holds" : "FAILS") << "  prop2 "
                    << check["prop2"]["status"].get<std::string>();
          if (check["prop2"].contains("conclusion_holds"))
            std::cout << ", sigma_min(FD) >= sigma_min(AD): "
                      << (check["prop2"]["conclusion_holds"].get<bool>() ? "yes" : "no");
          std::cout << "\n";
        }
      }
      std::cout << "report: " << (dir / "verify.json").string() << "\n";
      return 0;
    }
  } catch (const adfd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

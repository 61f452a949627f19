#pragma once

// Experiment pipeline: assemble, analyse spectra, solve or train, verify
// and write artifacts under one directory per run.
//
// Layout of a run directory:
//   config.ini          canonical echo of the configuration
//   summary.json        aggregate over seeds plus the per-seed summaries
//   seed_<k>/           one directory per seed
//     summary.json
//     singular_values.csv, truncation_sweep.csv, flow_<mode>.csv   (solve)
//     <mode>/training.csv, <mode>/kernel_spectrum_<step>.csv       (train)
//     *.svg                                                        (plots)
//
// Mode directories and column suffixes use the mode label with ':'
// replaced by '_', e.g. fd_central2.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adfd/config.hpp"
#include "json.hpp"

namespace adfd {

struct RunOptions {
  std::filesystem::path output_root = "out";
  /// Overrides the configured seed count.
  std::optional<std::size_t> seeds;
  bool plots = true;
  /// Worker threads over independent seeds.
  std::size_t jobs = 1;
};

struct RunArtifacts {
  std::string run_id;
  std::string config_echo;
  std::filesystem::path directory;
  std::vector<std::filesystem::path> csv_paths;
  std::vector<std::filesystem::path> svg_paths;
  nlohmann::json summary;
  bool diverged = false;
  double wall_time = 0.0;
};

/// "fd:central2" -> "fd_central2".
std::string mode_slug(const DiffMode& mode);

/// Writes one CSV with a header row. A non-empty index becomes the first,
/// integer column; every column must match its length. Values use 17
/// significant digits in scientific notation.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::size_t>& index, const std::vector<Vector>& columns);

/// Summary of one seed; writes its artifacts under directory.
nlohmann::json run_seed(const ExperimentConfig& config, std::uint64_t seed,
                        const std::filesystem::path& directory, bool plots,
                        std::vector<std::filesystem::path>& csv_paths,
                        std::vector<std::filesystem::path>& svg_paths, bool& diverged);

/// Mean, min and max of every numeric leaf shared by all summaries, keyed
/// by dotted path; booleans report how many runs were true.
nlohmann::json aggregate_summaries(const std::vector<nlohmann::json>& summaries);

/// Validates, then runs every seed. The configuration must already have
/// passed validate_config; schema problems surface as ConfigError before
/// any file is written.
RunArtifacts run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Propositions 1-2 only, without solving or training. Needs an rfm,
/// random_net or two_layer model and both an AD and an FD mode.
nlohmann::json verify_experiment(const ExperimentConfig& config, std::size_t seeds);

struct Preset {
  std::string name;
  std::string description;
  std::vector<ExperimentConfig> runs;
  /// When non-empty, runs form a sweep over these values and the preset
  /// writes sweep.csv and sweep.svg.
  std::string sweep_label;
  std::vector<double> sweep_values;
};

inline constexpr std::size_t kPresetSeeds = 10;

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
Preset make_preset(std::string_view name);

struct PresetArtifacts {
  std::filesystem::path directory;
  std::vector<RunArtifacts> runs;
  nlohmann::json summary;
  bool diverged = false;
};

/// Runs land in output_root/<preset>/<run name>.
PresetArtifacts run_preset(const Preset& preset, const RunOptions& options = {});

}  // namespace adfd

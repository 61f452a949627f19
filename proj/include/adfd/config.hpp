#pragma once

// Experiment configuration: an INI file with one section per concern.
//
//   [experiment] name, problem, epsilon, seed, seeds
//   [model]      type, neurons, widths, activation, init_range, init
//   [diff]       modes, h, boundary_derivative
//   [grid]       counts, boundary_per_side, eval_points
//   [solve]      cutoff, positions, lambda, normalize, flow_*
//   [train]      optimizer, lr, steps, precision, lambda, normalize,
//                record_interval, snapshot_interval, kernel_threshold,
//                kernel_band_b
//   [output]     directory, plots
//
// Exactly one of [solve] and [train] is present. Unknown sections or keys
// are schema errors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adfd/activation.hpp"
#include "adfd/assembly.hpp"
#include "adfd/features.hpp"
#include "adfd/problems.hpp"
#include "adfd/training.hpp"

namespace adfd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelType { rfm, two_layer, random_net, deep };

std::string_view model_type_name(ModelType type) noexcept;
ModelType parse_model_type(std::string_view name);
std::string_view init_scheme_name(InitScheme scheme) noexcept;
InitScheme parse_init_scheme(std::string_view name);
std::string_view boundary_derivative_name(BoundaryDerivative bd) noexcept;
BoundaryDerivative parse_boundary_derivative(std::string_view name);

struct ModelSection {
  ModelType type = ModelType::rfm;
  std::size_t neurons = 100;
  /// [input, hidden..., 1] for random_net and deep models.
  std::vector<std::size_t> widths;
  Activation activation = Activation::sin;
  double init_range = 1.0;
  InitScheme init = InitScheme::uniform;
};

struct DiffSection {
  /// "ad", "fd" or "fd:<scheme>", in output order.
  std::vector<std::string> modes{"ad", "fd"};
  /// 0 uses the grid spacing.
  double h = 0.0;
  BoundaryDerivative boundary_derivative = BoundaryDerivative::match_interior;
};

struct GridSection {
  std::vector<std::size_t> counts{100};
  std::size_t boundary_per_side = 0;
  std::size_t eval_points = 201;
};

/// Truncation positions: every rank, every k-th rank, or an explicit list.
struct PositionSpec {
  enum class Kind { all, every, list };
  Kind kind = Kind::all;
  std::size_t stride = 1;
  std::vector<std::size_t> values;

  /// Ascending positions within 1..max_rank.
  std::vector<std::size_t> resolve(std::size_t max_rank) const;
  std::string text() const;
};

struct SolveSection {
  double cutoff = 1e-12;
  PositionSpec positions;
  /// Frozen-kernel gradient flow on the outer coefficients; 0 disables it.
  std::size_t flow_steps = 0;
  /// Step size as a fraction of 1 / lambda_max(A A^T).
  double flow_lr = 1e-4;
  double flow_band_a = 1e-5;
  double flow_band_b = 1e-1;
  std::size_t flow_record_interval = 10;
};

struct TrainSection {
  Optimizer optimizer = Optimizer::gd;
  double lr = 1e-3;
  std::size_t steps = 1000;
  Precision precision = Precision::f64;
  std::size_t record_interval = 1;
  std::size_t snapshot_interval = 0;
  double kernel_threshold = 1e-5;
  /// Upper band edge for the entropy/speed indicator; 0 skips it.
  double kernel_band_b = 0.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemId problem = ProblemId::poisson1d;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  /// Negative selects the problem default.
  double lambda = -1.0;
  bool normalize = true;
  ModelSection model;
  DiffSection diff;
  GridSection grid;
  std::optional<SolveSection> solve;
  std::optional<TrainSection> train;
  /// Relative to the output root; empty uses name.
  std::string output_directory;
  bool plots = true;

  PdeProblem make_problem_instance() const;
  /// Modes resolved against the problem, with h and boundary handling applied.
  std::vector<DiffMode> diff_modes() const;
  AssemblyOptions assembly_options() const;
};

/// Parses and validates; every failure is a ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when the configuration cannot run.
void validate_config(const ExperimentConfig& config);

/// Canonical INI text; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& config);

}  // namespace adfd

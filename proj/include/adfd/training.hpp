#pragma once

// Full-batch training of two-layer and deep networks on PINN losses, the
// training kernel G = J J^T, residual mode analysis and the exponential
// loss envelopes driven by a band of kernel eigenvalues.
//
// Time convention: gradient flow d(theta)/dt = -J^T r on L = |r|^2, so
// dL/dt = -2 r^T G r and one GD step of size lr advances time by 2 lr.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "adfd/assembly.hpp"
#include "adfd/features.hpp"
#include "adfd/linalg.hpp"
#include "adfd/problems.hpp"

namespace adfd {

enum class Optimizer { gd, adam };
enum class Precision { f64, f32 };

std::string_view optimizer_name(Optimizer opt) noexcept;
Optimizer parse_optimizer(std::string_view name);
std::string_view precision_name(Precision p) noexcept;
Precision parse_precision(std::string_view name);

struct ModelState {
  enum class Kind { two_layer, deep };
  Kind kind = Kind::two_layer;
  FeatureModel shallow;
  DeepNetwork deep;
  /// f32 is honoured by two-layer models only.
  Precision precision = Precision::f64;

  static ModelState two_layer(FeatureModel model, Precision precision = Precision::f64);
  static ModelState deep_net(DeepNetwork net);

  std::size_t input_dim() const noexcept;
  std::size_t parameter_count() const noexcept;
  /// Two-layer layout: a, then w row-major, then b. Deep layout follows
  /// DeepNetwork::parameters().
  Vector parameters() const;
  /// Rounds to float when precision is f32.
  void set_parameters(std::span<const double> theta);
  double evaluate(std::span<const double> x) const;
};

struct Evaluation {
  /// |r|^2 over every row, i.e. the weighted PINN loss.
  double loss = 0.0;
  /// Residual-row part of loss.
  double loss_f = 0.0;
  /// |r| / |scaled targets| over every row.
  double rel_train_err = 0.0;
  Vector residual;
  /// dL/dtheta; empty unless requested.
  Vector gradient;
  bool finite = true;
};

Evaluation evaluate_loss(const ModelState& state, const RowPlan& plan, bool with_gradient = true);

/// Plans rows from (problem, mode, grid) and evaluates loss and gradient.
Evaluation loss_and_grad(const ModelState& state, const PdeProblem& problem, const DiffMode& mode,
                         const Grid& grid, const AssemblyOptions& options = {});

/// rows x parameters Jacobian of the scaled residual vector, in double.
DenseMatrix residual_jacobian(const ModelState& state, const RowPlan& plan);

struct KernelSnapshot {
  std::size_t step = 0;
  /// rows x rows; left empty when the kernel is too large to store.
  DenseMatrix G;
  /// Descending.
  Vector eigenvalues;
  double threshold = 0.0;
  std::size_t cutoff = 0;
  std::optional<double> entropy;
};

/// Kernels up to this many rows are formed and eigendecomposed directly;
/// larger ones use squared singular values of J.
inline constexpr std::size_t kDirectKernelLimit = 1200;

KernelSnapshot assemble_kernel_G(const ModelState& state, const RowPlan& plan, double threshold,
                                 std::size_t step = 0);

/// Eigenvalues clamped below at zero, for cutoff and entropy metrics.
Vector clamp_spectrum(std::span<const double> eigenvalues);

struct ResidualModes {
  Vector eigenvalues;        // descending
  DenseMatrix eigenvectors;  // column i pairs with eigenvalues[i]
  Vector coefficients;       // v_i . r
  Vector energies;           // coefficients squared

  /// coefficients[i] * v_i.
  Vector component(std::size_t i) const;
};

/// kernel must be symmetric with residual.size() rows.
ResidualModes residual_eigendecomposition(const DenseMatrix& kernel, std::span<const double> residual);

struct AdamMoments {
  Vector m;
  Vector v;
  std::size_t t = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected Adam step in place.
void adam_update(std::span<double> theta, std::span<const double> grad, AdamMoments& moments,
                 double learning_rate);

struct TrainConfig {
  Optimizer optimizer = Optimizer::gd;
  double learning_rate = 1e-3;
  std::size_t steps = 1000;
  DiffMode mode;
  AssemblyOptions assembly;
  /// History is recorded every record_interval steps plus the final step.
  std::size_t record_interval = 1;
  bool kernel_snapshots = false;
  /// 0 takes a single snapshot after the last step.
  std::size_t snapshot_interval = 0;
  double kernel_threshold = 1e-5;
  /// Points per axis of the closed evaluation grid for the L2 error.
  std::size_t eval_points = 201;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<std::size_t> steps;
  Vector loss_pinn;
  Vector loss_f;
  Vector rel_train_err;
  Vector rel_l2_err;
  std::vector<KernelSnapshot> snapshots;
  bool diverged = false;
  std::size_t divergence_step = 0;
  ModelState final_state;
};

/// Deterministic full-batch training. Divergence (non-finite loss) stops
/// the run and sets the flag.
TrainHistory train(ModelState state, const PdeProblem& problem, const Grid& grid,
                   const TrainConfig& config);

/// |phi - u*| / |u*| over the evaluation grid; rejects |u*| = 0.
double l2_relative_error(const ModelState& state, const PdeProblem& problem, const Grid& eval_grid);

/// One recorded point of a gradient-flow trajectory.
struct FlowSample {
  double time = 0.0;
  double loss = 0.0;
  Vector residual;
  /// Index of the kernel in force at this time.
  std::size_t kernel = 0;
};

/// Outer coefficients trained by explicit Euler on |A a - f|^2 with A fixed;
/// time advances by 2 lr per step and the kernel is A A^T (index 0).
std::vector<FlowSample> rfm_gradient_flow(const AssembledSystem& sys, Vector a0, double lr,
                                          std::size_t steps, std::size_t record_interval = 1);

struct Theorem1Report {
  double t_star = 0.0;
  double t_end = 0.0;
  double a = 0.0;
  double b = 0.0;
  /// min / max over the window of min_band r_i^2 / max_band r_i^2.
  double eta = 0.0;
  double zeta = 0.0;
  double band_mean_min = 0.0;
  double band_mean_max = 0.0;
  Vector times;
  Vector loss;
  Vector lower;
  Vector upper;
  /// Fraction of |r|^2 outside the band at each window sample.
  Vector out_of_band_fraction;
  double max_out_of_band_fraction = 0.0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
};

/// Envelopes over samples with t_star <= time <= t_end. slack is relative.
/// Rejects an empty band or an empty window.
Theorem1Report theorem1_envelopes(std::span<const FlowSample> samples,
                                  std::span<const DenseMatrix> kernels, double a, double b,
                                  double t_star, double t_end, double slack = 1e-9);

/// First sample time at which the energy above the band (eigenvalues
/// >= b lambda_max) drops below fraction of |r|^2; the last time if never.
double default_t_star(std::span<const FlowSample> samples, std::span<const DenseMatrix> kernels,
                      double b, double fraction = 0.01);

}  // namespace adfd

#pragma once

// Least-squares systems for the PINN loss under analytic (AD) or
// finite-difference (FD) differentiation.
//
// Assembly goes through a RowPlan: a list of probes (point, axis, order)
// and loss rows, each a weighted sum of probe derivatives minus a target.
// The same plan drives linear assembly here and nonlinear training in
// training.hpp, so both see identical rows.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adfd/features.hpp"
#include "adfd/linalg.hpp"
#include "adfd/problems.hpp"

namespace adfd {

enum class DiffKind { ad, fd };
enum class FdScheme { central2, five_point4, biharm5, laplace2d_5point };

enum class BoundaryDerivative {
  match_interior,  // FD rows use a central difference, AD rows the exact slope
  analytic         // exact slope regardless of mode
};

struct DiffMode {
  DiffKind kind = DiffKind::ad;
  FdScheme scheme = FdScheme::central2;
  /// FD step; 0 selects the grid spacing at assembly time.
  double h = 0.0;
  BoundaryDerivative boundary_derivative = BoundaryDerivative::match_interior;

  static DiffMode ad() { return {}; }
  static DiffMode fd(FdScheme scheme, double h = 0.0) { return {DiffKind::fd, scheme, h}; }
  /// "ad" or "fd:<scheme>".
  std::string label() const;
};

std::string_view scheme_name(FdScheme scheme) noexcept;
FdScheme parse_scheme(std::string_view name);
/// Accepts "ad" or "fd:<scheme>"; a bare "fd" picks the problem's default.
DiffMode parse_diff_mode(std::string_view text, const PdeProblem& problem);
/// Lowest-order scheme matching the problem operator.
FdScheme default_scheme(const PdeProblem& problem);

/// Offsets and integer weights of one stencil; value = scale * sum w * u(x + off*h).
struct StencilPattern {
  struct Tap {
    int dx = 0;
    int dy = 0;
    double weight = 0.0;
  };
  std::vector<Tap> taps;
  /// Denominator power: scale = 1 / (divisor * h^power).
  int power = 2;
  double divisor = 1.0;
  int dim = 1;
  /// -1 when the pattern represents the negated operator (laplace2d_5point
  /// carries +4 on the centre, i.e. it discretizes -Laplacian).
  double operator_sign = 1.0;
  int radius() const noexcept;
};

StencilPattern stencil_pattern(FdScheme scheme);

/// Banded stencil matrix in sparse-row form.
struct StencilMatrix {
  FdScheme scheme = FdScheme::central2;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double scale = 1.0;
  /// Unscaled (column, weight) entries per row.
  std::vector<std::vector<std::pair<std::size_t, double>>> entries;

  DenseMatrix dense() const;
  Vector apply(std::span<const double> u) const;
};

/// Square n x n form (2D: n^2 x n^2 block form) where taps falling outside
/// the grid are dropped. n counts points per axis.
StencilMatrix build_stencil(FdScheme scheme, std::size_t n, double h);

/// 1D n x (n + 2r) form whose column c maps to grid index c - r, so every
/// row keeps its full tap set.
StencilMatrix build_extended_stencil(FdScheme scheme, std::size_t n, double h);

enum class RowKind { residual, boundary };

struct Probe {
  Point x{};
  int axis = 0;
  int order = 0;
};

struct ProbeTerm {
  std::size_t probe = 0;
  int k = 0;              // derivative order along the probe axis
  double weight = 0.0;    // multiplies the k-th derivative
};

struct LossRow {
  RowKind kind = RowKind::residual;
  double scale = 1.0;
  double target = 0.0;
  std::vector<ProbeTerm> terms;
  /// Probe whose value feeds the nonlinear term, if any.
  std::optional<std::size_t> nonlinear_probe;
};

struct AssemblyOptions {
  /// Boundary weight; negative selects problem.lambda_default.
  double lambda = -1.0;
  /// Scale residual rows by 1/sqrt(N) and boundary rows by sqrt(lambda/Nb).
  /// Without it boundary rows carry sqrt(lambda) and residual rows 1.
  bool normalize = true;
  /// 2D boundary points per edge; 0 picks grid count + 1.
  std::size_t boundary_per_side = 0;
};

struct RowPlan {
  DiffMode mode;
  double lambda = 1.0;
  std::vector<Probe> probes;
  std::vector<LossRow> rows;
  std::size_t residual_rows = 0;
  int max_order = 0;
  const PdeProblem* problem = nullptr;
};

/// Rows: residuals at every grid point first, then boundary constraints.
RowPlan plan_rows(const PdeProblem& problem, const DiffMode& mode, const Grid& grid,
                  const AssemblyOptions& options = {});

/// Linear span of fixed features with exact axis derivatives.
class FeatureBasis {
 public:
  virtual ~FeatureBasis() = default;
  virtual std::size_t count() const = 0;
  virtual std::size_t input_dim() const = 0;
  /// points.rows() x count: d^k/dx_axis^k of every feature.
  virtual DenseMatrix derivative(const DenseMatrix& points, int axis, int k) const = 0;
};

class RandomFeatureBasis final : public FeatureBasis {
 public:
  explicit RandomFeatureBasis(const FeatureModel& model) : model_(model) {}
  std::size_t count() const override { return model_.neurons(); }
  std::size_t input_dim() const override { return model_.input_dim(); }
  /// sigma^(k)(w.x + b) * w_axis^k.
  DenseMatrix derivative(const DenseMatrix& points, int axis, int k) const override;

 private:
  const FeatureModel& model_;
};

/// Last hidden layer of a fixed random network as features.
class DeepFeatureBasis final : public FeatureBasis {
 public:
  explicit DeepFeatureBasis(const DeepNetwork& net) : net_(net) {}
  std::size_t count() const override { return net_.feature_count(); }
  std::size_t input_dim() const override { return net_.input_dim(); }
  DenseMatrix derivative(const DenseMatrix& points, int axis, int k) const override;

 private:
  const DeepNetwork& net_;
};

struct AssembledSystem {
  DenseMatrix A;
  Vector f;
  std::vector<RowKind> row_kind;
  double lambda = 1.0;
  DiffMode mode;
  std::size_t residual_rows = 0;

  DenseMatrix residual_block() const { return A.row_block(0, residual_rows); }
  Vector residual_rhs() const { return Vector(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(residual_rows)); }
};

/// Rejects nonlinear problems and schemes that do not match the operator.
AssembledSystem assemble_system(const PdeProblem& problem, const FeatureBasis& basis,
                                const DiffMode& mode, const Grid& grid,
                                const AssemblyOptions& options = {});

/// Evaluates an arbitrary plan against fixed features.
AssembledSystem assemble_from_plan(const RowPlan& plan, const FeatureBasis& basis);

/// (A_AD - A_FD) / h^2 over residual rows; h is the FD system's step.
DenseMatrix discrepancy_matrix(const AssembledSystem& sys_ad, const AssembledSystem& sys_fd);

/// Diagonal factors of the matrix-form identities: D_k = diag(w_j^k)
/// (for k = 2 in 2D, diag(|w_j|^2)), Abar = diag(a_j), X = diag(x_i).
struct ScaleMatrices {
  Vector d;
  Vector a_bar;
  Vector x;
};

ScaleMatrices scale_matrices(const FeatureModel& model, const Grid& grid, int k);

}  // namespace adfd

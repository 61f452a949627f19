#pragma once

// Benchmark boundary-value problems and their collocation grids.
//
// Every problem has the residual form
//   operator_scale * L[u](x) + N(u(x)) - f(x) = 0,
// with L the second derivative (1D), the Laplacian (2D) or the fourth
// derivative, and N present only for the Allen-Cahn problem. The forcing f
// is L applied analytically to the exact solution.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "adfd/linalg.hpp"

namespace adfd {

enum class ProblemId { poisson1d, poisson2d, biharmonic1d, allen_cahn_steady };

std::string_view problem_name(ProblemId id) noexcept;

/// Throws std::invalid_argument for ids outside the catalog.
ProblemId parse_problem_id(std::string_view name);

using Point = std::array<double, 2>;

enum class ConstraintKind { value, first_derivative };

struct BoundaryConstraint {
  Point point{};
  ConstraintKind kind = ConstraintKind::value;
  double target = 0.0;
};

struct PdeProblem {
  ProblemId id = ProblemId::poisson1d;
  int dim = 1;
  int operator_order = 2;
  Point lo{};
  Point hi{};
  double operator_scale = 1.0;
  /// Interface width; only the Allen-Cahn problem uses it.
  double epsilon = 0.0;
  double lambda_default = 1.0;

  bool nonlinear() const noexcept { return id == ProblemId::allen_cahn_steady; }
  double nonlinear_term(double u) const noexcept;
  double nonlinear_derivative(double u) const noexcept;

  double exact(const Point& x) const;
  double forcing(const Point& x) const;

  /// Boundary samples. 1D problems ignore per_side; 2D problems place
  /// per_side uniformly spaced points on each edge, corners included once.
  std::vector<BoundaryConstraint> boundary(std::size_t per_side = 0) const;
};

/// Polynomial coefficients c0..c3 of the biharmonic exact solution
/// c0 + c1 x + c2 x^2 + c3 x^3 + e^x, fixed by u(+-1) = u'(+-1) = 0.
std::array<double, 4> biharmonic_coefficients() noexcept;

/// Exact solution evaluated over any scalar type with +, *, sin, exp, tanh
/// (double or TaylorJet). y is ignored by 1D problems.
template <class T>
T exact_solution(const PdeProblem& p, const T& x, const T& y) {
  using std::exp;
  using std::sin;
  using std::tanh;
  constexpr double pi = std::numbers::pi;
  switch (p.id) {
    case ProblemId::poisson1d:
      return sin(pi * x);
    case ProblemId::poisson2d:
      return sin(pi * x) * sin(pi * y);
    case ProblemId::biharmonic1d: {
      const auto c = biharmonic_coefficients();
      return c[0] + x * (c[1] + x * (c[2] + x * c[3])) + exp(x);
    }
    case ProblemId::allen_cahn_steady:
      return tanh((x - 0.5) / (std::numbers::sqrt2 * p.epsilon));
  }
  return x;
}

/// Throws std::invalid_argument for unknown ids or epsilon <= 0.
PdeProblem make_problem(ProblemId id, double epsilon = 0.1);

/// Collocation grid x_i = lo + i*h, i = 1..n, h = extent / n per axis.
/// 2D points are ordered row-major with the x index varying slowest.
struct Grid {
  int dim = 1;
  std::vector<std::size_t> counts;
  std::vector<double> spacing;
  DenseMatrix points;  // size() x dim

  std::size_t size() const noexcept { return points.rows(); }
  Point point(std::size_t i) const noexcept;
};

/// counts holds one entry per axis, or a single entry reused for both axes
/// of a 2D problem. Each count must be >= 3, and >= 5 for fourth-order
/// problems so the widest stencil fits.
Grid make_grid(const PdeProblem& problem, std::span<const std::size_t> counts);
Grid make_grid(const PdeProblem& problem, std::size_t count);

/// Closed uniform grid (endpoints included) used for solution errors.
Grid make_eval_grid(const PdeProblem& problem, std::size_t per_axis);

/// Packs boundary points into a matrix with problem.dim columns.
DenseMatrix boundary_points(const PdeProblem& problem,
                            std::span<const BoundaryConstraint> constraints);

}  // namespace adfd

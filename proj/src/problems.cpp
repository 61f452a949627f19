#include "adfd/problems.hpp"

#include <stdexcept>
#include <string>

namespace adfd {

std::string_view problem_name(ProblemId id) noexcept {
  switch (id) {
    case ProblemId::poisson1d: return "poisson1d";
    case ProblemId::poisson2d: return "poisson2d";
    case ProblemId::biharmonic1d: return "biharmonic1d";
    case ProblemId::allen_cahn_steady: return "allen_cahn_steady";
  }
  return "unknown";
}

ProblemId parse_problem_id(std::string_view name) {
  for (ProblemId id : {ProblemId::poisson1d, ProblemId::poisson2d, ProblemId::biharmonic1d,
                       ProblemId::allen_cahn_steady})
    if (problem_name(id) == name) return id;
  throw std::invalid_argument("unknown problem id '" + std::string(name) + "'");
}

std::array<double, 4> biharmonic_coefficients() noexcept {
  const double e = std::numbers::e;
  const double ei = 1.0 / e;
  return {-0.75 * ei - 0.25 * e, ei - 0.5 * e, 0.25 * ei - 0.25 * e, -0.5 * ei};
}

double PdeProblem::nonlinear_term(double u) const noexcept {
  return nonlinear() ? (u - u * u * u) / epsilon : 0.0;
}

double PdeProblem::nonlinear_derivative(double u) const noexcept {
  return nonlinear() ? (1.0 - 3.0 * u * u) / epsilon : 0.0;
}

double PdeProblem::exact(const Point& x) const { return exact_solution(*this, x[0], x[1]); }

double PdeProblem::forcing(const Point& x) const {
  constexpr double pi = std::numbers::pi;
  switch (id) {
    case ProblemId::poisson1d:
      return -pi * pi * std::sin(pi * x[0]);
    case ProblemId::poisson2d:
      // operator_scale = -1: -Laplacian of sin(pi x) sin(pi y).
      return 2.0 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    case ProblemId::biharmonic1d:
      return std::exp(x[0]);
    case ProblemId::allen_cahn_steady:
      return 0.0;
  }
  return 0.0;
}

std::vector<BoundaryConstraint> PdeProblem::boundary(std::size_t per_side) const {
  std::vector<BoundaryConstraint> out;
  switch (id) {
    case ProblemId::poisson1d:
      out.push_back({{lo[0], 0.0}, ConstraintKind::value, 0.0});
      out.push_back({{hi[0], 0.0}, ConstraintKind::value, 0.0});
      break;
    case ProblemId::biharmonic1d:
      out.push_back({{lo[0], 0.0}, ConstraintKind::value, 0.0});
      out.push_back({{hi[0], 0.0}, ConstraintKind::value, 0.0});
      out.push_back({{lo[0], 0.0}, ConstraintKind::first_derivative, 0.0});
      out.push_back({{hi[0], 0.0}, ConstraintKind::first_derivative, 0.0});
      break;
    case ProblemId::allen_cahn_steady:
      out.push_back({{lo[0], 0.0}, ConstraintKind::value, -1.0});
      out.push_back({{hi[0], 0.0}, ConstraintKind::value, 1.0});
      break;
    case ProblemId::poisson2d: {
      if (per_side < 2) throw std::invalid_argument("boundary: 2D problems need per_side >= 2");
      // Walk the perimeter counter-clockwise; each edge owns its start corner.
      const double step = 1.0 / static_cast<double>(per_side - 1);
      for (int edge = 0; edge < 4; ++edge) {
        for (std::size_t k = 0; k + 1 < per_side; ++k) {
          const double s = static_cast<double>(k) * step;
          Point p{};
          switch (edge) {
            case 0: p = {lo[0] + s * (hi[0] - lo[0]), lo[1]}; break;
            case 1: p = {hi[0], lo[1] + s * (hi[1] - lo[1])}; break;
            case 2: p = {hi[0] - s * (hi[0] - lo[0]), hi[1]}; break;
            default: p = {lo[0], hi[1] - s * (hi[1] - lo[1])}; break;
          }
          out.push_back({p, ConstraintKind::value, 0.0});
        }
      }
      break;
    }
  }
  return out;
}

PdeProblem make_problem(ProblemId id, double epsilon) {
  PdeProblem p;
  p.id = id;
  switch (id) {
    case ProblemId::poisson1d:
      p.lo = {-1.0, 0.0};
      p.hi = {1.0, 0.0};
      break;
    case ProblemId::poisson2d:
      p.dim = 2;
      p.lo = {0.0, 0.0};
      p.hi = {1.0, 1.0};
      p.operator_scale = -1.0;
      break;
    case ProblemId::biharmonic1d:
      p.operator_order = 4;
      p.lo = {-1.0, 0.0};
      p.hi = {1.0, 0.0};
      p.lambda_default = 100.0;
      break;
    case ProblemId::allen_cahn_steady:
      if (!(epsilon > 0.0)) throw std::invalid_argument("make_problem: epsilon must be positive");
      p.lo = {0.0, 0.0};
      p.hi = {1.0, 0.0};
      p.epsilon = epsilon;
      p.operator_scale = epsilon;
      break;
    default:
      throw std::invalid_argument("make_problem: unknown problem id");
  }
  return p;
}

Point Grid::point(std::size_t i) const noexcept {
  Point p{};
  for (int k = 0; k < dim; ++k) p[static_cast<std::size_t>(k)] = points(i, static_cast<std::size_t>(k));
  return p;
}

Grid make_grid(const PdeProblem& problem, std::span<const std::size_t> counts) {
  if (counts.size() != 1 && counts.size() != static_cast<std::size_t>(problem.dim))
    throw std::invalid_argument("make_grid: one count per axis required");
  Grid g;
  g.dim = problem.dim;
  const std::size_t minimum = problem.operator_order >= 4 ? 5 : 3;
  for (int axis = 0; axis < problem.dim; ++axis) {
    const std::size_t n = counts.size() == 1 ? counts[0] : counts[static_cast<std::size_t>(axis)];
    if (n < minimum)
      throw std::invalid_argument("make_grid: " + std::to_string(n) +
                                  " points per axis do not fit a stencil of width " +
                                  std::to_string(minimum));
    g.counts.push_back(n);
    g.spacing.push_back((problem.hi[axis] - problem.lo[axis]) / static_cast<double>(n));
  }
  if (g.dim == 1) {
    g.points = DenseMatrix(g.counts[0], 1);
    for (std::size_t i = 0; i < g.counts[0]; ++i)
      g.points(i, 0) = problem.lo[0] + static_cast<double>(i + 1) * g.spacing[0];
  } else {
    const std::size_t nx = g.counts[0];
    const std::size_t ny = g.counts[1];
    g.points = DenseMatrix(nx * ny, 2);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        g.points(i * ny + j, 0) = problem.lo[0] + static_cast<double>(i + 1) * g.spacing[0];
        g.points(i * ny + j, 1) = problem.lo[1] + static_cast<double>(j + 1) * g.spacing[1];
      }
  }
  return g;
}

Grid make_grid(const PdeProblem& problem, std::size_t count) {
  const std::size_t c[1] = {count};
  return make_grid(problem, std::span<const std::size_t>(c, 1));
}

Grid make_eval_grid(const PdeProblem& problem, std::size_t per_axis) {
  if (per_axis < 2) throw std::invalid_argument("make_eval_grid: need at least 2 points per axis");
  Grid g;
  g.dim = problem.dim;
  for (int axis = 0; axis < problem.dim; ++axis) {
    g.counts.push_back(per_axis);
    g.spacing.push_back((problem.hi[axis] - problem.lo[axis]) / static_cast<double>(per_axis - 1));
  }
  auto coord = [&](int axis, std::size_t i) {
    // The last point lands exactly on the upper bound.
    return i + 1 == per_axis ? problem.hi[axis]
                             : problem.lo[axis] + static_cast<double>(i) * g.spacing[axis];
  };
  if (g.dim == 1) {
    g.points = DenseMatrix(per_axis, 1);
    for (std::size_t i = 0; i < per_axis; ++i) g.points(i, 0) = coord(0, i);
  } else {
    g.points = DenseMatrix(per_axis * per_axis, 2);
    for (std::size_t i = 0; i < per_axis; ++i)
      for (std::size_t j = 0; j < per_axis; ++j) {
        g.points(i * per_axis + j, 0) = coord(0, i);
        g.points(i * per_axis + j, 1) = coord(1, j);
      }
  }
  return g;
}

DenseMatrix boundary_points(const PdeProblem& problem,
                            std::span<const BoundaryConstraint> constraints) {
  DenseMatrix pts(constraints.size(), static_cast<std::size_t>(problem.dim));
  for (std::size_t i = 0; i < constraints.size(); ++i)
    for (int k = 0; k < problem.dim; ++k)
      pts(i, static_cast<std::size_t>(k)) = constraints[i].point[static_cast<std::size_t>(k)];
  return pts;
}

}  // namespace adfd

#include "adfd/assembly.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace adfd {

std::string_view scheme_name(FdScheme scheme) noexcept {
  switch (scheme) {
    case FdScheme::central2: return "central2";
    case FdScheme::five_point4: return "five_point4";
    case FdScheme::biharm5: return "biharm5";
    case FdScheme::laplace2d_5point: return "laplace2d_5point";
  }
  return "unknown";
}

FdScheme parse_scheme(std::string_view name) {
  for (FdScheme s : {FdScheme::central2, FdScheme::five_point4, FdScheme::biharm5,
                     FdScheme::laplace2d_5point})
    if (scheme_name(s) == name) return s;
  throw std::invalid_argument("unknown FD scheme '" + std::string(name) + "'");
}

std::string DiffMode::label() const {
  return kind == DiffKind::ad ? std::string("ad") : "fd:" + std::string(scheme_name(scheme));
}

FdScheme default_scheme(const PdeProblem& problem) {
  if (problem.dim == 2) return FdScheme::laplace2d_5point;
  return problem.operator_order == 4 ? FdScheme::biharm5 : FdScheme::central2;
}

DiffMode parse_diff_mode(std::string_view text, const PdeProblem& problem) {
  if (text == "ad") return DiffMode::ad();
  if (text == "fd") return DiffMode::fd(default_scheme(problem));
  if (text.starts_with("fd:")) return DiffMode::fd(parse_scheme(text.substr(3)));
  throw std::invalid_argument("unknown differentiation mode '" + std::string(text) + "'");
}

int StencilPattern::radius() const noexcept {
  int r = 0;
  for (const Tap& t : taps) r = std::max({r, std::abs(t.dx), std::abs(t.dy)});
  return r;
}

StencilPattern stencil_pattern(FdScheme scheme) {
  StencilPattern p;
  switch (scheme) {
    case FdScheme::central2:
      p.taps = {{-1, 0, 1.0}, {0, 0, -2.0}, {1, 0, 1.0}};
      break;
    case FdScheme::five_point4:
      p.taps = {{-2, 0, -1.0}, {-1, 0, 16.0}, {0, 0, -30.0}, {1, 0, 16.0}, {2, 0, -1.0}};
      p.divisor = 12.0;
      break;
    case FdScheme::biharm5:
      p.taps = {{-2, 0, 1.0}, {-1, 0, -4.0}, {0, 0, 6.0}, {1, 0, -4.0}, {2, 0, 1.0}};
      p.power = 4;
      break;
    case FdScheme::laplace2d_5point:
      p.taps = {{-1, 0, -1.0}, {0, -1, -1.0}, {0, 0, 4.0}, {0, 1, -1.0}, {1, 0, -1.0}};
      p.dim = 2;
      p.operator_sign = -1.0;
      break;
  }
  return p;
}

namespace {

double pattern_scale(const StencilPattern& p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("stencil step h must be positive");
  return 1.0 / (p.divisor * std::pow(h, p.power));
}

void check_scheme_fits(const PdeProblem& problem, FdScheme scheme) {
  const StencilPattern p = stencil_pattern(scheme);
  const int order = scheme == FdScheme::biharm5 ? 4 : 2;
  if (p.dim != problem.dim || order != problem.operator_order)
    throw std::invalid_argument("scheme " + std::string(scheme_name(scheme)) +
                                " does not discretize the operator of " +
                                std::string(problem_name(problem.id)));
}

}  // namespace

DenseMatrix StencilMatrix::dense() const {
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (const auto& [c, w] : entries[i]) m(i, c) += scale * w;
  return m;
}

Vector StencilMatrix::apply(std::span<const double> u) const {
  if (u.size() != cols) throw std::invalid_argument("StencilMatrix::apply: size mismatch");
  Vector out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (const auto& [c, w] : entries[i]) s += w * u[c];
    out[i] = scale * s;
  }
  return out;
}

StencilMatrix build_stencil(FdScheme scheme, std::size_t n, double h) {
  const StencilPattern p = stencil_pattern(scheme);
  const std::size_t width = static_cast<std::size_t>(2 * p.radius() + 1);
  if (n < width)
    throw std::invalid_argument("build_stencil: " + std::to_string(n) +
                                " points cannot hold a band of width " + std::to_string(width));
  StencilMatrix s;
  s.scheme = scheme;
  s.scale = pattern_scale(p, h);
  const auto in = static_cast<long>(n);
  if (p.dim == 1) {
    s.rows = s.cols = n;
    s.entries.resize(n);
    for (long i = 0; i < in; ++i)
      for (const auto& t : p.taps) {
        const long c = i + t.dx;
        if (c >= 0 && c < in) s.entries[static_cast<std::size_t>(i)].emplace_back(static_cast<std::size_t>(c), t.weight);
      }
  } else {
    s.rows = s.cols = n * n;
    s.entries.resize(n * n);
    for (long i = 0; i < in; ++i)
      for (long j = 0; j < in; ++j)
        for (const auto& t : p.taps) {
          const long ci = i + t.dx;
          const long cj = j + t.dy;
          if (ci >= 0 && ci < in && cj >= 0 && cj < in)
            s.entries[static_cast<std::size_t>(i * in + j)].emplace_back(
                static_cast<std::size_t>(ci * in + cj), t.weight);
        }
  }
  return s;
}

StencilMatrix build_extended_stencil(FdScheme scheme, std::size_t n, double h) {
  const StencilPattern p = stencil_pattern(scheme);
  if (p.dim != 1) throw std::invalid_argument("build_extended_stencil: 1D schemes only");
  if (n < 1) throw std::invalid_argument("build_extended_stencil: empty grid");
  const auto r = static_cast<std::size_t>(p.radius());
  StencilMatrix s;
  s.scheme = scheme;
  s.scale = pattern_scale(p, h);
  s.rows = n;
  s.cols = n + 2 * r;
  s.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& t : p.taps)
      s.entries[i].emplace_back(static_cast<std::size_t>(static_cast<long>(i + r) + t.dx), t.weight);
  return s;
}

RowPlan plan_rows(const PdeProblem& problem, const DiffMode& mode, const Grid& grid,
                  const AssemblyOptions& options) {
  if (grid.dim != problem.dim) throw std::invalid_argument("plan_rows: grid and problem dimensions differ");
  if (mode.kind == DiffKind::fd) check_scheme_fits(problem, mode.scheme);

  RowPlan plan;
  plan.problem = &problem;
  plan.mode = mode;
  plan.lambda = options.lambda < 0.0 ? problem.lambda_default : options.lambda;
  if (plan.lambda < 0.0) throw std::invalid_argument("plan_rows: lambda must be non-negative");
  if (mode.kind == DiffKind::fd && plan.mode.h == 0.0) plan.mode.h = grid.spacing[0];
  if (mode.kind == DiffKind::fd && !(plan.mode.h > 0.0))
    throw std::invalid_argument("plan_rows: FD step must be positive");

  const std::size_t n = grid.size();
  const std::size_t per_side =
      options.boundary_per_side > 0 ? options.boundary_per_side : grid.counts[0] + 1;
  const std::vector<BoundaryConstraint> bcs = problem.boundary(per_side);
  std::size_t value_constraints = 0;
  for (const auto& bc : bcs) value_constraints += bc.kind == ConstraintKind::value ? 1 : 0;

  const double res_scale = options.normalize ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
  const double bnd_scale = options.normalize
                               ? std::sqrt(plan.lambda / static_cast<double>(value_constraints))
                               : std::sqrt(plan.lambda);

  // Probes are deduplicated by (point, axis, order) so shared neighbours of
  // adjacent FD rows evaluate once.
  std::map<std::tuple<double, double, int, int>, std::size_t> index;
  auto probe = [&](const Point& x, int axis, int order) {
    const auto key = std::make_tuple(x[0], x[1], axis, order);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    plan.probes.push_back({x, axis, order});
    plan.max_order = std::max(plan.max_order, order);
    index.emplace(key, plan.probes.size() - 1);
    return plan.probes.size() - 1;
  };

  const int op = problem.operator_order;
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = grid.point(i);
    LossRow row;
    row.kind = RowKind::residual;
    row.scale = res_scale;
    row.target = problem.forcing(x);
    if (mode.kind == DiffKind::ad) {
      for (int axis = 0; axis < problem.dim; ++axis)
        row.terms.push_back({probe(x, axis, op), op, problem.operator_scale});
    } else {
      const StencilPattern p = stencil_pattern(mode.scheme);
      const double s = problem.operator_scale * p.operator_sign * pattern_scale(p, plan.mode.h);
      for (const auto& t : p.taps) {
        // Neighbours are taken at x + offset*h directly, inside or outside
        // the domain.
        const Point xn{x[0] + t.dx * plan.mode.h, x[1] + t.dy * plan.mode.h};
        row.terms.push_back({probe(xn, 0, 0), 0, s * t.weight});
      }
    }
    if (problem.nonlinear()) row.nonlinear_probe = probe(x, 0, 0);
    plan.rows.push_back(std::move(row));
  }
  plan.residual_rows = n;

  for (const auto& bc : bcs) {
    LossRow row;
    row.kind = RowKind::boundary;
    row.scale = bnd_scale;
    row.target = bc.target;
    if (bc.kind == ConstraintKind::value) {
      row.terms.push_back({probe(bc.point, 0, 0), 0, 1.0});
    } else {
      const bool fd = mode.kind == DiffKind::fd &&
                      mode.boundary_derivative == BoundaryDerivative::match_interior;
      if (fd) {
        const double h = plan.mode.h;
        row.terms.push_back({probe({bc.point[0] + h, bc.point[1]}, 0, 0), 0, 0.5 / h});
        row.terms.push_back({probe({bc.point[0] - h, bc.point[1]}, 0, 0), 0, -0.5 / h});
      } else {
        row.terms.push_back({probe(bc.point, 0, 1), 1, 1.0});
      }
    }
    plan.rows.push_back(std::move(row));
  }
  return plan;
}

DenseMatrix RandomFeatureBasis::derivative(const DenseMatrix& points, int axis, int k) const {
  DenseMatrix m = feature_matrix(model_, k, points);
  if (k == 0) return m;
  Vector wk(model_.neurons());
  for (std::size_t j = 0; j < wk.size(); ++j) {
    const double w = model_.w(j, static_cast<std::size_t>(axis));
    double p = w;
    for (int i = 1; i < k; ++i) p *= w;
    wk[j] = p;
  }
  return scale_cols(std::move(m), wk);
}

DenseMatrix DeepFeatureBasis::derivative(const DenseMatrix& points, int axis, int k) const {
  return deep_feature_derivatives(net_, points, axis, k)[static_cast<std::size_t>(k)];
}

AssembledSystem assemble_from_plan(const RowPlan& plan, const FeatureBasis& basis) {
  const PdeProblem& problem = *plan.problem;
  if (basis.input_dim() != static_cast<std::size_t>(problem.dim))
    throw std::invalid_argument("assemble: feature input dimension differs from problem");
  if (problem.nonlinear())
    throw std::invalid_argument("assemble: nonlinear problems have no linear system");

  // Evaluate each (axis, order) group of probes in one call.
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < plan.probes.size(); ++p)
    groups[{plan.probes[p].axis, plan.probes[p].order}].push_back(p);
  std::vector<const double*> probe_row(plan.probes.size());
  std::vector<DenseMatrix> blocks;
  blocks.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    DenseMatrix pts(members.size(), static_cast<std::size_t>(problem.dim));
    for (std::size_t i = 0; i < members.size(); ++i)
      for (int d = 0; d < problem.dim; ++d)
        pts(i, static_cast<std::size_t>(d)) = plan.probes[members[i]].x[static_cast<std::size_t>(d)];
    blocks.push_back(basis.derivative(pts, key.first, key.second));
    for (std::size_t i = 0; i < members.size(); ++i) probe_row[members[i]] = blocks.back().row(i).data();
  }

  AssembledSystem sys;
  const std::size_t m = basis.count();
  sys.A = DenseMatrix(plan.rows.size(), m);
  sys.f.resize(plan.rows.size());
  sys.lambda = plan.lambda;
  sys.mode = plan.mode;
  sys.residual_rows = plan.residual_rows;
  for (std::size_t r = 0; r < plan.rows.size(); ++r) {
    const LossRow& row = plan.rows[r];
    auto out = sys.A.row(r);
    for (const ProbeTerm& t : row.terms) {
      if (t.k != plan.probes[t.probe].order)
        throw std::logic_error("assemble: term order differs from its probe");
      const double* src = probe_row[t.probe];
      const double w = t.weight;
      for (std::size_t j = 0; j < m; ++j) out[j] += w * src[j];
    }
    if (row.scale != 1.0)
      for (double& v : out) v *= row.scale;
    sys.f[r] = row.scale * row.target;
    sys.row_kind.push_back(row.kind);
  }
  return sys;
}

AssembledSystem assemble_system(const PdeProblem& problem, const FeatureBasis& basis,
                                const DiffMode& mode, const Grid& grid,
                                const AssemblyOptions& options) {
  if (problem.nonlinear())
    throw std::invalid_argument("assemble_system: " + std::string(problem_name(problem.id)) +
                                " is nonlinear");
  return assemble_from_plan(plan_rows(problem, mode, grid, options), basis);
}

DenseMatrix discrepancy_matrix(const AssembledSystem& sys_ad, const AssembledSystem& sys_fd) {
  if (sys_ad.residual_rows != sys_fd.residual_rows || sys_ad.A.cols() != sys_fd.A.cols())
    throw std::invalid_argument("discrepancy_matrix: systems differ in shape");
  if (sys_fd.mode.kind != DiffKind::fd)
    throw std::invalid_argument("discrepancy_matrix: second system must be FD");
  const double h = sys_fd.mode.h;
  DenseMatrix e = sys_ad.residual_block() - sys_fd.residual_block();
  e *= 1.0 / (h * h);
  return e;
}

ScaleMatrices scale_matrices(const FeatureModel& model, const Grid& grid, int k) {
  if (k < 0) throw std::invalid_argument("scale_matrices: negative power");
  ScaleMatrices s;
  s.d.resize(model.neurons());
  for (std::size_t j = 0; j < model.neurons(); ++j) {
    if (model.input_dim() == 1) {
      double p = 1.0;
      for (int i = 0; i < k; ++i) p *= model.w(j, 0);
      s.d[j] = p;
    } else if (k == 2) {
      s.d[j] = model.weight_norm2(j);
    } else {
      throw std::invalid_argument("scale_matrices: multi-dimensional weights support k = 2 only");
    }
  }
  s.a_bar = model.a;
  s.x.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s.x[i] = grid.points(i, 0);
  return s;
}

}  // namespace adfd

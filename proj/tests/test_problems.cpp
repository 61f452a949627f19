#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "adfd/jet.hpp"
#include "adfd/problems.hpp"

using namespace adfd;

namespace {

// Operator residual of the exact solution computed through jets, which
// share no code with the closed-form forcing.
double exact_residual(const PdeProblem& p, const Point& x) {
  double op = 0.0;
  double u = 0.0;
  if (p.dim == 1) {
    const TaylorJet xj = TaylorJet::variable(p.operator_order, x[0]);
    const TaylorJet yj(p.operator_order, 0.0);
    const TaylorJet uj = exact_solution(p, xj, yj);
    op = uj.derivative(p.operator_order);
    u = uj.value();
  } else {
    const TaylorJet ux = exact_solution(p, TaylorJet::variable(2, x[0]), TaylorJet(2, x[1]));
    const TaylorJet uy = exact_solution(p, TaylorJet(2, x[0]), TaylorJet::variable(2, x[1]));
    op = ux.derivative(2) + uy.derivative(2);
    u = ux.value();
  }
  return p.operator_scale * op + p.nonlinear_term(u) - p.forcing(x);
}

}  // namespace

TEST(Problems, CatalogRoundTrip) {
  for (auto id : {ProblemId::poisson1d, ProblemId::poisson2d, ProblemId::biharmonic1d,
                  ProblemId::allen_cahn_steady})
    EXPECT_EQ(parse_problem_id(problem_name(id)), id);
  EXPECT_THROW(parse_problem_id("heat3d"), std::invalid_argument);
}

TEST(Problems, Poisson1dDefinition) {
  const PdeProblem p = make_problem(ProblemId::poisson1d);
  EXPECT_EQ(p.dim, 1);
  EXPECT_EQ(p.operator_order, 2);
  EXPECT_DOUBLE_EQ(p.lambda_default, 1.0);
  const double pi = std::numbers::pi;
  for (double x : {-0.7, 0.1, 0.45})
    EXPECT_NEAR(p.forcing({x, 0.0}), -pi * pi * std::sin(pi * x), 1e-15);
}

TEST(Problems, BiharmonicCoefficients) {
  const auto c = biharmonic_coefficients();
  const double e = std::numbers::e;
  EXPECT_NEAR(c[0], -0.75 / e - 0.25 * e, 1e-15);
  EXPECT_NEAR(c[0], -0.955480, 1e-6);
  EXPECT_NEAR(c[1], -0.991261, 1e-6);
  EXPECT_NEAR(c[2], -0.587601, 1e-6);
  EXPECT_NEAR(c[3], -0.183940, 1e-6);
  EXPECT_DOUBLE_EQ(make_problem(ProblemId::biharmonic1d).lambda_default, 100.0);
}

TEST(Problems, ExactSolutionsSatisfyOperator) {
  for (auto id : {ProblemId::poisson1d, ProblemId::poisson2d, ProblemId::biharmonic1d,
                  ProblemId::allen_cahn_steady}) {
    const PdeProblem p = make_problem(id);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double s = (k + 0.5) / 1000.0;
      Point x{p.lo[0] + s * (p.hi[0] - p.lo[0]), 0.0};
      if (p.dim == 2) x[1] = p.lo[1] + std::fmod(0.618034 * k, 1.0) * (p.hi[1] - p.lo[1]);
      worst = std::max(worst, std::abs(exact_residual(p, x)));
    }
    EXPECT_LT(worst, 1e-10) << problem_name(id);
  }
}

TEST(Problems, AllenCahnProfile) {
  const PdeProblem p = make_problem(ProblemId::allen_cahn_steady, 0.1);
  EXPECT_NEAR(p.exact({0.5, 0.0}), 0.0, 1e-15);
  EXPECT_NEAR(p.exact({0.3, 0.0}), std::tanh(-0.2 / (std::sqrt(2.0) * 0.1)), 1e-15);
  EXPECT_LT(std::abs(p.exact({0.0, 0.0}) + 1.0), 1e-2);
  EXPECT_LT(std::abs(p.exact({1.0, 0.0}) - 1.0), 1e-2);
  EXPECT_THROW(make_problem(ProblemId::allen_cahn_steady, 0.0), std::invalid_argument);
}

TEST(Problems, BoundaryConstraintsHold) {
  for (auto id : {ProblemId::poisson1d, ProblemId::poisson2d, ProblemId::biharmonic1d}) {
    const PdeProblem p = make_problem(id);
    for (const auto& bc : p.boundary(9)) {
      double got = 0.0;
      if (bc.kind == ConstraintKind::value) {
        got = p.exact(bc.point);
      } else {
        const TaylorJet u = exact_solution(p, TaylorJet::variable(1, bc.point[0]), TaylorJet(1, 0.0));
        got = u.derivative(1);
      }
      EXPECT_NEAR(got, bc.target, 1e-14) << problem_name(id);
    }
  }
}

TEST(Problems, SquareBoundarySampling) {
  const PdeProblem p = make_problem(ProblemId::poisson2d);
  const auto bc = p.boundary(5);
  EXPECT_EQ(bc.size(), 16u);
  for (const auto& c : bc) {
    const bool on_edge = c.point[0] == 0.0 || c.point[0] == 1.0 || c.point[1] == 0.0 || c.point[1] == 1.0;
    EXPECT_TRUE(on_edge);
  }
  EXPECT_THROW(p.boundary(1), std::invalid_argument);
}

TEST(Grid, Poisson1dSpacing) {
  const Grid g = make_grid(make_problem(ProblemId::poisson1d), 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.spacing[0], 0.5);
  const double expected[] = {-0.5, 0.0, 0.5, 1.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g.points(i, 0), expected[i]);
}

TEST(Grid, Poisson2dRowMajor) {
  const PdeProblem p = make_problem(ProblemId::poisson2d);
  const Grid g = make_grid(p, 64);
  EXPECT_EQ(g.size(), 4096u);
  EXPECT_DOUBLE_EQ(g.points(1, 0), g.points(0, 0));
  EXPECT_GT(g.points(1, 1), g.points(0, 1));
  EXPECT_DOUBLE_EQ(g.points(64, 0), 2.0 / 64.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GT(g.points(i, 0), 0.0);
    EXPECT_LE(g.points(i, 1), 1.0);
  }
}

TEST(Grid, RejectsStencilsThatDoNotFit) {
  EXPECT_THROW(make_grid(make_problem(ProblemId::biharmonic1d), 2), std::invalid_argument);
  EXPECT_THROW(make_grid(make_problem(ProblemId::biharmonic1d), 4), std::invalid_argument);
  EXPECT_NO_THROW(make_grid(make_problem(ProblemId::biharmonic1d), 5));
  EXPECT_THROW(make_grid(make_problem(ProblemId::poisson1d), 2), std::invalid_argument);
  const std::size_t three[] = {8, 8, 8};
  EXPECT_THROW(make_grid(make_problem(ProblemId::poisson2d), three), std::invalid_argument);
}

TEST(Grid, EvalGridIsClosed) {
  const PdeProblem p = make_problem(ProblemId::allen_cahn_steady);
  const Grid g = make_eval_grid(p, 11);
  EXPECT_DOUBLE_EQ(g.points(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.points(10, 0), 1.0);
  EXPECT_NEAR(g.points(3, 0), 0.3, 1e-15);
}

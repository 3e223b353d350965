#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/oracles.hpp"
#include "tfc_hybrid/solver.hpp"

using namespace tfc;

namespace {

SolveOptions explicit_guess(int m, std::vector<double> values) {
  SolveOptions o;
  o.m = m;
  o.initial_guess = InitialGuessPolicy::Explicit;
  o.init_values = std::move(values);
  return o;
}

/// y'' - y = 0 whose partials report the wrong sign for dL/dy'', so every
/// Gauss-Newton step moves uphill.
HybridProblem misreported_jacobian() {
  HybridProblem p;
  p.name = "uphill";
  p.geometry = Geometry{{0.0, 1.0, 2.0}, 1.0, 3.0};
  for (int k = 0; k < 2; ++k) {
    p.segments.push_back(SegmentDynamics::nonlinear(
        [](double, double y, double, double d2y) { return d2y - y; },
        [](double, double, double, double) { return Partials{1.0, 0.0, -1.0}; }));
  }
  p.default_m = 6;
  return p;
}

}  // namespace

TEST(Lstsq, IdentityReturnsRightHandSide) {
  oracle::Random rng(61);
  const Vector b = rng.vector(7);
  const auto r = lstsq_scaled_qr(Matrix::Identity(7, 7), b);
  EXPECT_LE((r.x - b).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_FALSE(r.rank_deficient);
  EXPECT_EQ(r.rank, 7);
}

TEST(Lstsq, StackedIdentityIsExact) {
  oracle::Random rng(62);
  const Vector x = rng.vector(5);
  Matrix M(10, 5);
  M << Matrix::Identity(5, 5), Matrix::Identity(5, 5);
  Vector b(10);
  b << x, x;
  EXPECT_LE((lstsq_scaled_qr(M, b).x - x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lstsq, OptimalAgainstRandomPerturbations) {
  oracle::Random rng(63);
  Matrix M(50, 10);
  for (Eigen::Index j = 0; j < 10; ++j) M.col(j) = rng.vector(50) * std::pow(10.0, j % 4);
  const Vector b = rng.vector(50);
  const Vector x = lstsq_scaled_qr(M, b).x;
  const double best = (M * x - b).norm();
  for (int t = 0; t < 100; ++t) {
    const Vector xp = x + 1e-3 * rng.vector(10);
    EXPECT_LE(best, (M * xp - b).norm());
  }
}

TEST(Lstsq, ZeroColumnIsFlaggedAndZeroed) {
  Matrix M = Matrix::Zero(6, 3);
  M.col(0) << 1, 2, 3, 4, 5, 6;
  M.col(2) << 0, 1, 0, 1, 0, 1;
  Vector b(6);
  b << 1, 3, 3, 5, 5, 7;
  const auto r = lstsq_scaled_qr(M, b);
  EXPECT_TRUE(r.rank_deficient);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0], 1);
  EXPECT_EQ(r.x(1), 0.0);
  EXPECT_NEAR(r.x(0), 1.0, 1e-14);
  EXPECT_NEAR(r.x(2), 1.0, 1e-14);
}

TEST(Lstsq, UnderdeterminedIsRejected) {
  EXPECT_THROW(lstsq_scaled_qr(Matrix::Ones(2, 3), Vector::Ones(2)),
               ConfigurationError);
  EXPECT_THROW(lstsq_scaled_qr(Matrix::Ones(3, 3), Vector::Ones(2)),
               ConfigurationError);
}

TEST(Lstsq, EquilibrationImprovesConditioning) {
  const auto p = builtin("nonlinear_nonlinear");
  SolveOptions o;
  const auto disc = detail::discretize(p, o);
  const Matrix J = detail::stacked_jacobian(p, disc, initial_guess(p, o));
  Eigen::ColPivHouseholderQR<Matrix> raw(J);
  const auto& R = raw.matrixR();
  const double raw_condition =
      std::abs(R(0, 0)) / std::abs(R(raw.rank() - 1, raw.rank() - 1));
  EXPECT_LT(lstsq_scaled_qr(J, Vector::Zero(J.rows())).condition, raw_condition);
}

TEST(SolveLinear, PiecewiseQuadratic) {
  const auto p = builtin("linear_linear");
  SolveOptions o;
  o.m = 8;
  const auto r = solve_linear(p, o);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
  ASSERT_TRUE(r.max_abs_err.has_value());
  EXPECT_LE(r.max_abs_err->y, 1e-12);
  EXPECT_LE(r.max_abs_err->dy, 1e-12);
  EXPECT_LE(r.max_abs_err->d2y, 1e-12);
  ASSERT_EQ(r.junctions.size(), 1u);
  EXPECT_NEAR(r.junctions[0].y, 77.0 / 192.0, 1e-12);
  EXPECT_NEAR(r.junctions[0].dy, 5.0 / 6.0, 1e-12);
  EXPECT_EQ(r.residual_trace.size(), 1u);
}

TEST(SolveLinear, ThreeBasisFunctionsSufficeForQuarticSolution) {
  const auto p = builtin("linear_linear");
  SolveOptions o;
  o.m = 3;
  o.N = 20;
  const auto r = solve_linear(p, o);
  EXPECT_LE(r.max_abs_err->y, 1e-14);
  EXPECT_FALSE(r.rank_deficient);
}

TEST(SolveLinear, LegendreBasisGivesSameSolution) {
  const auto p = builtin("linear_linear");
  SolveOptions o;
  o.m = 8;
  o.family = Family::Legendre;
  const auto r = solve_linear(p, o);
  EXPECT_LE(r.max_abs_err->y, 1e-12);
  EXPECT_NEAR(r.junctions[0].y, 77.0 / 192.0, 1e-12);
}

TEST(SolveLinear, ExtraBasisFunctionsStayZeroForStraightLine) {
  LinearProblemConfig cfg;
  cfg.break_points = {0.0, 0.4, 1.0};
  cfg.y0 = 0.0;
  cfg.yf = 1.0;
  cfg.segments = {{{1.0}, {}, {}, {}, {}}, {{1.0}, {}, {}, {}, {}}};
  const auto p = generic_linear(cfg);
  SolveOptions a;
  a.m = 4;
  SolveOptions b;
  b.m = 12;
  const auto ra = solve_linear(p, a);
  const auto rb = solve_linear(p, b);
  EXPECT_LE(rb.xi.segment(rb.layout().xi(0).begin, 12).cwiseAbs().maxCoeff(), 1e-12);
  for (double x : {0.0, 0.2, 0.4, 0.9}) {
    EXPECT_NEAR(ra.evaluate(x, 0), rb.evaluate(x, 0), 1e-12);
    EXPECT_NEAR(rb.evaluate(x, 0), x, 1e-12);
  }
}

TEST(SolveLinear, RejectsNonlinearProblems) {
  EXPECT_THROW(solve_linear(builtin("linear_nonlinear"), SolveOptions{}), MisuseError);
}

TEST(InitialGuess, LineThroughBoundaryValues) {
  const auto p = builtin("linear_linear");
  SolveOptions o;
  o.m = 8;
  const Vector g = initial_guess(p, o);
  const auto L = make_layout(2, 8);
  EXPECT_EQ(g(L.junction_value(1)), 0.5);
  EXPECT_EQ(g(L.junction_slope(1)), 1.0);
  EXPECT_EQ(g.cwiseAbs().sum(), 1.5);
}

TEST(InitialGuess, ExplicitValues) {
  const auto p = builtin("linear_nonlinear");
  const Vector g = initial_guess(p, explicit_guess(16, {1.0, -1.0}));
  ASSERT_EQ(g.size(), 34);
  Vector expected = Vector::Zero(34);
  expected(16) = 1.0;
  expected(17) = -1.0;
  EXPECT_EQ(g, expected);

  const auto q = builtin("nonlinear_nonlinear");
  const Vector h = initial_guess(q, explicit_guess(60, {1.30685, -0.5}));
  EXPECT_EQ(h(60), 1.30685);
  EXPECT_EQ(h(61), -0.5);
  EXPECT_EQ(h.cwiseAbs().sum(), 1.80685);
}

TEST(InitialGuess, WrongArity) {
  const auto p = builtin("linear_nonlinear");
  EXPECT_THROW(initial_guess(p, explicit_guess(16, {1.0})), ConfigurationError);
  EXPECT_THROW(initial_guess(p, explicit_guess(16, {1.0, 2.0, 3.0})),
               ConfigurationError);
}

TEST(SolveOptions, Validation) {
  const auto p = builtin("linear_linear");
  SolveOptions o;
  o.m = 8;
  o.N = 11;
  EXPECT_THROW(solve(p, o), ConfigurationError);
  o.N = 12;
  EXPECT_NO_THROW(solve(p, o));
  o.tol = 0.0;
  EXPECT_THROW(solve(p, o), ConfigurationError);
  o.tol = 1e-13;
  o.max_iter = 0;
  EXPECT_THROW(solve(p, o), ConfigurationError);
  o.max_iter = 50;
  o.m_per_segment = {8, 8, 8};
  EXPECT_THROW(solve(p, o), ConfigurationError);
}

TEST(SolveNonlinear, LinearNonlinearFromPrintedGuess) {
  const auto r = solve_nonlinear(builtin("linear_nonlinear"), explicit_guess(16, {1.0, -1.0}));
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 30);
  EXPECT_LE(r.residual_trace.back(), 1e-12);
  EXPECT_LE(r.max_abs_err->y, 1e-12);
  EXPECT_LE(r.max_abs_err->dy, 1e-12);
  EXPECT_LE(r.max_abs_err->d2y, 1e-12);
}

TEST(SolveNonlinear, NonlinearNonlinearFromPrintedGuess) {
  const auto r =
      solve_nonlinear(builtin("nonlinear_nonlinear"), explicit_guess(60, {1.30685, -0.5}));
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 20);
  EXPECT_LE(r.max_abs_err->y, 1e-11);
  EXPECT_LE(r.max_abs_err->dy, 1e-11);
  EXPECT_LE(r.max_abs_err->d2y, 1e-11);
  EXPECT_NEAR(r.junctions[0].y, 2.0 - std::log(2.0), 1e-12);
}

TEST(SolveNonlinear, LineGuessConvergesToo) {
  for (const char* name : {"linear_nonlinear", "nonlinear_nonlinear"}) {
    const auto r = solve_nonlinear(builtin(std::string(name)), SolveOptions{});
    EXPECT_TRUE(r.converged) << name;
    EXPECT_LE(r.iterations, 50) << name;
  }
}

TEST(SolveNonlinear, OneStepOnLinearProblem) {
  const auto p = builtin("linear_linear");
  SolveOptions o;
  o.m = 8;
  const auto rn = solve_nonlinear(p, o);
  const auto rl = solve_linear(p, o);
  EXPECT_TRUE(rn.converged);
  EXPECT_EQ(rn.iterations, 1);
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    EXPECT_NEAR(rn.evaluate(x, 0), rl.evaluate(x, 0), 1e-12);
  }
}

TEST(SolveNonlinear, IterationCapGivesUnconvergedResult) {
  SolveOptions o;
  o.max_iter = 2;
  const auto r = solve_nonlinear(builtin("nonlinear_nonlinear"), o);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_EQ(r.residual_trace.size(), 2u);
}

TEST(SolveNonlinear, GrowingResidualRaisesDivergence) {
  SolveOptions o;
  o.divergence_window = 5;
  try {
    solve_nonlinear(misreported_jacobian(), o);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    ASSERT_EQ(e.trace().size(), 5u);
    for (std::size_t i = 1; i < e.trace().size(); ++i) {
      EXPECT_GT(e.trace()[i], e.trace()[i - 1]);
    }
  }
}

TEST(SolveNonlinear, TraceInvariants) {
  for (const char* name : {"linear_nonlinear", "nonlinear_nonlinear"}) {
    const auto r = solve_nonlinear(builtin(std::string(name)), SolveOptions{});
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(static_cast<int>(r.residual_trace.size()), r.iterations);
    EXPECT_LE(r.residual_trace.back(), 1e-13);
    const auto n = r.residual_trace.size();
    ASSERT_GE(n, 3u);
    EXPECT_LE(r.residual_trace[n - 1], r.residual_trace[n - 2]);
    EXPECT_LE(r.residual_trace[n - 2], r.residual_trace[n - 3]);
  }
}

TEST(SolveNonlinear, BoundaryValuesHoldAtEveryIteration) {
  for (const char* name : {"linear_nonlinear", "nonlinear_nonlinear"}) {
    const auto p = builtin(std::string(name));
    for (int it = 1; it <= 6; ++it) {
      SolveOptions o;
      o.max_iter = it;
      const auto r = solve_nonlinear(p, o);
      EXPECT_LE(std::abs(r.evaluate(p.geometry.x0(), 0) - p.geometry.y0), 1e-14);
      EXPECT_LE(std::abs(r.evaluate(p.geometry.xf(), 0) - p.geometry.yf), 1e-14);
    }
  }
}

TEST(SolveNonlinear, ConvergedSolutionsAreC1) {
  for (const char* name : {"linear_linear", "linear_nonlinear", "nonlinear_nonlinear"}) {
    const auto p = builtin(std::string(name));
    const auto r = solve(p, SolveOptions{});
    const double x1 = p.geometry.break_points[1];
    for (int d = 0; d <= 1; ++d) {
      EXPECT_NEAR(r.evaluate_on_segment(0, x1, d), r.evaluate_on_segment(1, x1, d), 1e-13)
          << name;
    }
  }
}

TEST(Jacobian, MatchesFiniteDifferencesOfStackedResidual) {
  for (const char* name : {"linear_linear", "linear_nonlinear", "nonlinear_nonlinear"}) {
    const auto p = builtin(std::string(name));
    SolveOptions o;
    o.N = p.default_m + 10;
    const auto disc = detail::discretize(p, o);
    const Vector start = initial_guess(p, o);
    const Vector solved = solve(p, o).xi;
    for (const Vector& at : {start, solved}) {
      const Matrix J = detail::stacked_jacobian(p, disc, at);
      double worst = 0.0;
      for (Eigen::Index j = 0; j < at.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(at(j)));
        Vector plus = at;
        Vector minus = at;
        plus(j) += h;
        minus(j) -= h;
        const Vector fd = (detail::stacked_residual(p, disc, plus) -
                           detail::stacked_residual(p, disc, minus)) /
                          (plus(j) - minus(j));
        for (Eigen::Index i = 0; i < fd.size(); ++i) {
          if (std::abs(fd(i)) > 1e-8) {
            worst = std::max(worst, std::abs(J(i, j) - fd(i)) / std::abs(fd(i)));
          }
        }
      }
      EXPECT_LE(worst, 1e-6) << name;
    }
  }
}

TEST(Jacobian, ZeroBlocksAreExact) {
  for (const char* name : {"linear_nonlinear", "nonlinear_nonlinear"}) {
    const auto p = builtin(std::string(name));
    SolveOptions o;
    o.N = 40;
    o.m = 20;
    const auto disc = detail::discretize(p, o);
    oracle::Random rng(71);
    const Matrix J = detail::stacked_jacobian(p, disc, rng.vector(disc.grids.layout.total()));
    const auto& L = disc.grids.layout;
    EXPECT_TRUE((J.block(0, L.xi(1).begin, 40, 20).array() == 0.0).all());
    EXPECT_TRUE((J.block(40, L.xi(0).begin, 40, 20).array() == 0.0).all());
  }
}

TEST(Cascade, AgreesWithJunctionUnknownFormulation) {
  const auto p = builtin("linear_linear");
  SolveOptions o;
  o.m = 8;
  const auto rel = solve_linear(p, o);
  const auto cas = solve_linear_cascade(p, o);
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    for (int d = 0; d <= 2; ++d) {
      EXPECT_NEAR(cas.evaluate(x, d), rel.evaluate(x, d), 1e-12);
    }
  }
  EXPECT_NEAR(cas.junction_value(), 77.0 / 192.0, 1e-12);
}

TEST(Cascade, RejectsUnsupportedProblems) {
  EXPECT_THROW(solve_linear_cascade(builtin("linear_nonlinear"), SolveOptions{}),
               MisuseError);
}

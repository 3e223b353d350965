#pragma once

// Least-squares solution of assembled hybrid problems: one solve when every
// segment is linear, Gauss-Newton with QR inner solves otherwise.

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tfc_hybrid/problems.hpp"

namespace tfc {

// ---------------------------------------------------------------------------
// Least squares with column equilibration.

/// Columns whose norm is below this fraction of the largest column norm are
/// treated as exactly zero.
inline constexpr double kNegligibleColumn = 1e-12;

struct LeastSquaresResult {
  Vector x;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
  /// Columns dropped as numerically zero; their unknowns are set to 0.
  std::vector<Eigen::Index> dropped;
  /// |R_00| / |R_rr| of the pivoted QR of the equilibrated kept columns.
  double condition = 1.0;
};

/// min ||M x - b||_2. Columns are scaled to unit 2-norm before a pivoted
/// Householder QR and the solution is unscaled afterwards. Negligible
/// columns are removed and flagged. When the kept columns are still rank
/// deficient the minimum-norm solution of the scaled problem is returned.
inline LeastSquaresResult lstsq_scaled_qr(const Matrix& M, const Vector& b) {
  if (M.rows() != b.size()) {
    throw ConfigurationError("lstsq: row count mismatch");
  }
  if (M.rows() < M.cols()) {
    throw ConfigurationError("lstsq: system is underdetermined (p < q)");
  }
  const Eigen::Index q = M.cols();
  LeastSquaresResult out;
  out.x = Vector::Zero(q);
  if (q == 0) return out;

  const Vector norms = M.colwise().norm().transpose();
  const double largest = norms.maxCoeff();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < q; ++j) {
    if (largest > 0.0 && norms(j) > kNegligibleColumn * largest) {
      kept.push_back(j);
    } else {
      out.dropped.push_back(j);
    }
  }
  out.rank_deficient = !out.dropped.empty();
  if (kept.empty()) return out;

  const auto k = static_cast<Eigen::Index>(kept.size());
  Matrix scaled(M.rows(), k);
  Vector scale(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    scale(i) = 1.0 / norms(kept[static_cast<std::size_t>(i)]);
    scaled.col(i) = M.col(kept[static_cast<std::size_t>(i)]) * scale(i);
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
  out.rank = qr.rank();
  Vector z;
  if (out.rank == k) {
    z = qr.solve(b);
  } else {
    out.rank_deficient = true;
    z = Eigen::CompleteOrthogonalDecomposition<Matrix>(scaled).solve(b);
  }
  const auto& R = qr.matrixR();
  if (out.rank > 0) {
    out.condition = std::abs(R(0, 0)) / std::abs(R(out.rank - 1, out.rank - 1));
  } else {
    out.condition = std::numeric_limits<double>::infinity();
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    out.x(kept[static_cast<std::size_t>(i)]) = z(i) * scale(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Options and results.

enum class InitialGuessPolicy { Line, Explicit };

struct SolveOptions {
  int N = 100;
  /// Basis size for every segment; 0 picks the problem's default.
  int m = 0;
  /// Per-segment override of m; empty for uniform.
  std::vector<int> m_per_segment;
  Family family = Family::Chebyshev;
  double tol = 1e-13;
  int max_iter = 50;
  InitialGuessPolicy initial_guess = InitialGuessPolicy::Line;
  /// (y_1, y'_1, y_2, y'_2, ...) for the Explicit policy.
  std::vector<double> init_values;
  int divergence_window = 5;
  /// Uniform evaluation points per segment for the analytic error report.
  int eval_points = 1000;

  std::vector<int> resolved_m(const HybridProblem& p) const {
    const auto n = static_cast<std::size_t>(p.n_segments());
    if (!m_per_segment.empty()) {
      if (m_per_segment.size() != n) {
        throw ConfigurationError("need one m per segment");
      }
      return m_per_segment;
    }
    return std::vector<int>(n, m > 0 ? m : p.default_m);
  }

  void validate(const HybridProblem& p) const {
    if (!(tol > 0.0)) throw ConfigurationError("tolerance must be positive");
    if (max_iter < 1) throw ConfigurationError("max_iter must be >= 1");
    if (divergence_window < 1) {
      throw ConfigurationError("divergence_window must be >= 1");
    }
    if (eval_points < 2) throw ConfigurationError("eval_points must be >= 2");
    for (int mk : resolved_m(p)) {
      if (mk < 1) throw ConfigurationError("m must be >= 1");
      if (N < mk + 4) {
        throw ConfigurationError("N = " + std::to_string(N) +
                                 " too small for m = " + std::to_string(mk) +
                                 " (need N >= m + 4)");
      }
    }
  }
};

struct Junction {
  double x = 0.0;
  double y = 0.0;
  double dy = 0.0;
};

/// Maximum absolute errors of y, y', y'' against the analytic solution.
struct ErrorReport {
  double y = 0.0;
  double dy = 0.0;
  double d2y = 0.0;
};

struct SolveResult {
  Geometry geometry;
  SegmentGrids grids;
  Vector xi;
  std::vector<Junction> junctions;
  /// ||L||_2 at the initial guess (nonlinear) or before solving (linear).
  double initial_residual = 0.0;
  /// ||L||_2 after each iteration.
  std::vector<double> residual_trace;
  int iterations = 0;
  bool converged = false;
  double condition = 1.0;
  bool rank_deficient = false;
  std::optional<ErrorReport> max_abs_err;
  double wall_time_ms = 0.0;

  const UnknownLayout& layout() const noexcept { return grids.layout; }

  /// Coefficients of segment k.
  Vector segment_coefficients(int k) const {
    const Slice s = layout().xi(k);
    return xi.segment(s.begin, s.size);
  }

  /// y^(d)(x) from segment k's expression.
  double evaluate_on_segment(int k, double x, int d) const {
    const auto& spec = grids.bases.at(static_cast<std::size_t>(k));
    return segment_row(spec, geometry.segment(k), k, geometry.y0, geometry.yf,
                       x, d, layout())
        .evaluate(xi);
  }

  /// y^(d)(x); a break point is evaluated on its left segment.
  double evaluate(double x, int d) const {
    return evaluate_on_segment(geometry.locate(x), x, d);
  }
};

// ---------------------------------------------------------------------------

namespace detail {

struct Discretization {
  SegmentGrids grids;
  std::array<SystemMatrices, 3> sys;
  std::vector<double> xs;       // stacked abscissae
  std::vector<int> segment_of;  // segment index of each stacked row
};

inline Discretization discretize(const HybridProblem& p,
                                 const SolveOptions& opts) {
  p.validate();
  opts.validate(p);
  Discretization out;
  out.grids =
      make_segment_grids(p.geometry, opts.N, opts.resolved_m(p), opts.family);
  out.sys = assemble_all(p.geometry, out.grids);
  for (int k = 0; k < out.grids.n_segments(); ++k) {
    for (double x : out.grids.grids[static_cast<std::size_t>(k)].points) {
      out.xs.push_back(x);
      out.segment_of.push_back(k);
    }
  }
  return out;
}

/// Stacked residual L(Xi) over every collocation point.
inline Vector stacked_residual(const HybridProblem& p,
                               const Discretization& disc, const Vector& xi) {
  const Vector y = disc.sys[0].apply(xi);
  const Vector dy = disc.sys[1].apply(xi);
  const Vector d2y = disc.sys[2].apply(xi);
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto& dyn =
        p.segments[static_cast<std::size_t>(disc.segment_of[static_cast<std::size_t>(i)])];
    out(i) = dyn.residual(disc.xs[static_cast<std::size_t>(i)], y(i), dy(i),
                          d2y(i));
  }
  return out;
}

/// Jacobian sum_d diag(dL/dy^(d)) A^(d), filled block by block so that the
/// zero padding outside each segment window stays exactly zero.
inline Matrix stacked_jacobian(const HybridProblem& p,
                               const Discretization& disc, const Vector& xi) {
  const auto& s0 = disc.sys[0];
  Matrix J = Matrix::Zero(s0.rows, s0.cols);
  for (std::size_t b = 0; b < s0.blocks.size(); ++b) {
    const auto& blk0 = s0.blocks[b];
    const auto& blk1 = disc.sys[1].blocks[b];
    const auto& blk2 = disc.sys[2].blocks[b];
    const Vector local = xi.segment(blk0.cols.begin, blk0.cols.size);
    const Vector y = blk0.A * local + blk0.B;
    const Vector dy = blk1.A * local + blk1.B;
    const Vector d2y = blk2.A * local + blk2.B;
    const auto& dyn = p.segments[b];
    for (Eigen::Index i = 0; i < blk0.A.rows(); ++i) {
      const double x = disc.xs[static_cast<std::size_t>(blk0.row_begin + i)];
      const Partials pd = dyn.partials(x, y(i), dy(i), d2y(i));
      J.row(blk0.row_begin + i).segment(blk0.cols.begin, blk0.cols.size) =
          pd.y * blk0.A.row(i) + pd.dy * blk1.A.row(i) + pd.d2y * blk2.A.row(i);
    }
  }
  return J;
}

inline ErrorReport error_report(const HybridProblem& p, const SolveResult& r,
                                int points_per_segment) {
  ErrorReport e;
  for (int k = 0; k < p.n_segments(); ++k) {
    const Interval iv = p.geometry.segment(k);
    const auto& exact = p.analytic[static_cast<std::size_t>(k)];
    for (int i = 0; i < points_per_segment; ++i) {
      const double x =
          i + 1 == points_per_segment
              ? iv.xf
              : iv.x0 + iv.width() * i / (points_per_segment - 1);
      e.y = std::max(e.y, std::abs(r.evaluate_on_segment(k, x, 0) - exact(x, 0)));
      e.dy = std::max(e.dy, std::abs(r.evaluate_on_segment(k, x, 1) - exact(x, 1)));
      e.d2y =
          std::max(e.d2y, std::abs(r.evaluate_on_segment(k, x, 2) - exact(x, 2)));
    }
  }
  return e;
}

inline void finish(const HybridProblem& p, const SolveOptions& opts,
                   SolveResult& r) {
  const int n = p.n_segments();
  r.junctions.clear();
  for (int j = 1; j < n; ++j) {
    r.junctions.push_back({p.geometry.break_points[static_cast<std::size_t>(j)],
                           r.xi(r.layout().junction_value(j)),
                           r.xi(r.layout().junction_slope(j))});
  }
  if (p.has_analytic()) r.max_abs_err = error_report(p, r, opts.eval_points);
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

/// Evaluate the error report of a finished solve on `points_per_segment`
/// uniform points of every segment.
inline ErrorReport max_abs_error(const HybridProblem& p, const SolveResult& r,
                                 int points_per_segment = 1000) {
  if (!p.has_analytic()) {
    throw MissingAnalyticError("problem '" + p.name +
                               "' has no analytic solution");
  }
  return detail::error_report(p, r, points_per_segment);
}

/// Starting unknown vector: xi = 0 and junction values from the straight
/// line through the boundary values, or the explicit junction values.
inline Vector initial_guess(const HybridProblem& p, const SolveOptions& opts) {
  const auto layout = make_layout(opts.resolved_m(p));
  const auto& geo = p.geometry;
  Vector xi = Vector::Zero(layout.total());
  const int nj = layout.n_junctions();
  if (opts.initial_guess == InitialGuessPolicy::Explicit) {
    if (static_cast<int>(opts.init_values.size()) != 2 * nj) {
      throw ConfigurationError(
          "explicit initial guess needs " + std::to_string(2 * nj) +
          " values (y, y' per junction), got " +
          std::to_string(opts.init_values.size()));
    }
    for (int j = 1; j <= nj; ++j) {
      xi(layout.junction_value(j)) =
          opts.init_values[static_cast<std::size_t>(2 * (j - 1))];
      xi(layout.junction_slope(j)) =
          opts.init_values[static_cast<std::size_t>(2 * (j - 1) + 1)];
    }
    return xi;
  }
  const double slope = (geo.yf - geo.y0) / (geo.xf() - geo.x0());
  for (int j = 1; j <= nj; ++j) {
    const double xj = geo.break_points[static_cast<std::size_t>(j)];
    xi(layout.junction_value(j)) = geo.y0 + slope * (xj - geo.x0());
    xi(layout.junction_slope(j)) = slope;
  }
  return xi;
}

/// Single least-squares solve of an all-linear problem.
inline SolveResult solve_linear(const HybridProblem& p,
                                const SolveOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (!p.all_linear()) {
    throw MisuseError("problem '" + p.name +
                      "' has nonlinear segments; use solve_nonlinear");
  }
  const auto disc = detail::discretize(p, opts);
  const auto& s0 = disc.sys[0];
  Matrix M = Matrix::Zero(s0.rows, s0.cols);
  Vector rhs(s0.rows);
  for (std::size_t b = 0; b < s0.blocks.size(); ++b) {
    const auto& lf = *p.segments[b].linear;
    const auto& blk0 = s0.blocks[b];
    const auto& blk1 = disc.sys[1].blocks[b];
    const auto& blk2 = disc.sys[2].blocks[b];
    for (Eigen::Index i = 0; i < blk0.A.rows(); ++i) {
      const Eigen::Index row = blk0.row_begin + i;
      const double x = disc.xs[static_cast<std::size_t>(row)];
      const double a0 = lf.a0(x);
      const double a1 = lf.a1(x);
      const double a2 = lf.a2(x);
      M.row(row).segment(blk0.cols.begin, blk0.cols.size) =
          a0 * blk0.A.row(i) + a1 * blk1.A.row(i) + a2 * blk2.A.row(i);
      rhs(row) = lf.f(x) - (a0 * blk0.B(i) + a1 * blk1.B(i) + a2 * blk2.B(i));
    }
  }
  SolveResult r;
  r.geometry = p.geometry;
  r.grids = disc.grids;
  r.initial_residual = rhs.norm();
  const auto ls = lstsq_scaled_qr(M, rhs);
  r.xi = ls.x;
  r.condition = ls.condition;
  r.rank_deficient = ls.rank_deficient;
  r.iterations = 1;
  r.residual_trace.push_back(detail::stacked_residual(p, disc, r.xi).norm());
  r.converged = r.residual_trace.back() <= opts.tol;
  detail::finish(p, opts, r);
  r.wall_time_ms = detail::elapsed_ms(start);
  return r;
}

/// Gauss-Newton iteration Xi <- Xi - lstsq(J, L) from the initial guess.
/// Stops when ||L||_2 <= tol or after max_iter steps (unconverged result);
/// throws DivergenceError when the residual grows divergence_window times
/// in a row or becomes non-finite.
inline SolveResult solve_nonlinear(const HybridProblem& p,
                                   const SolveOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const auto disc = detail::discretize(p, opts);
  SolveResult r;
  r.geometry = p.geometry;
  r.grids = disc.grids;
  r.xi = initial_guess(p, opts);

  Vector L = detail::stacked_residual(p, disc, r.xi);
  r.initial_residual = L.norm();
  double previous = r.initial_residual;
  int growth = 0;
  if (r.initial_residual <= opts.tol) r.converged = true;
  while (!r.converged && r.iterations < opts.max_iter) {
    const Matrix J = detail::stacked_jacobian(p, disc, r.xi);
    const auto ls = lstsq_scaled_qr(J, L);
    r.condition = ls.condition;
    r.rank_deficient = ls.rank_deficient;
    r.xi -= ls.x;
    L = detail::stacked_residual(p, disc, r.xi);
    const double norm = L.norm();
    ++r.iterations;
    r.residual_trace.push_back(norm);
    if (!std::isfinite(norm)) {
      throw DivergenceError("residual became non-finite at iteration " +
                                std::to_string(r.iterations),
                            r.residual_trace);
    }
    if (norm <= opts.tol) {
      r.converged = true;
      break;
    }
    growth = norm > previous ? growth + 1 : 0;
    if (growth >= opts.divergence_window) {
      throw DivergenceError("residual increased for " +
                                std::to_string(growth) +
                                " consecutive iterations",
                            r.residual_trace);
    }
    previous = norm;
  }
  detail::finish(p, opts, r);
  r.wall_time_ms = detail::elapsed_ms(start);
  return r;
}

/// solve_linear when every segment is linear, solve_nonlinear otherwise.
inline SolveResult solve(const HybridProblem& p, const SolveOptions& opts) {
  return p.all_linear() ? solve_linear(p, opts) : solve_nonlinear(p, opts);
}

// ---------------------------------------------------------------------------
// Two-segment cascade solve, kept for cross-checking the junction-unknown
// formulation on linear problems.

struct CascadeSolution {
  CascadeSegment first;
  CascadeSegment second;
  double y0 = 0.0;
  double yf = 0.0;
  Vector g;  // [g1; g2]

  double evaluate(double x, int d) const {
    return cascade_row(first, second, y0, yf, x, d).evaluate(g);
  }
  double evaluate_on_segment(int k, double x, int d) const {
    return cascade_segment_row(first, second, y0, yf, k, x, d).evaluate(g);
  }
  double junction_value() const {
    return cascade_junction_row(first, second, y0, yf).evaluate(g);
  }
};

inline CascadeSolution solve_linear_cascade(const HybridProblem& p,
                                            const SolveOptions& opts) {
  if (!p.all_linear()) throw MisuseError("cascade solve needs linear segments");
  if (p.n_segments() != 2) {
    throw MisuseError("cascade formulation covers exactly two segments");
  }
  p.validate();
  opts.validate(p);
  const auto m = opts.resolved_m(p);
  // Each cascade segment carries two value constraints.
  CascadeSolution sol{{BasisSpec(opts.family, m[0], 2), p.geometry.segment(0)},
                      {BasisSpec(opts.family, m[1], 2), p.geometry.segment(1)},
                      p.geometry.y0,
                      p.geometry.yf,
                      {}};
  const Eigen::Index cols = m[0] + m[1];
  Matrix M(2 * opts.N, cols);
  Vector rhs(2 * opts.N);
  Eigen::Index row = 0;
  for (int k = 0; k < 2; ++k) {
    const auto& lf = *p.segments[static_cast<std::size_t>(k)].linear;
    const Grid grid = collocation_grid(p.geometry.segment(k), opts.N);
    for (double x : grid.points) {
      std::array<AffineRow, 3> rows;
      for (int d = 0; d <= 2; ++d) {
        rows[static_cast<std::size_t>(d)] = cascade_segment_row(
            sol.first, sol.second, sol.y0, sol.yf, k, x, d);
      }
      const double a0 = lf.a0(x);
      const double a1 = lf.a1(x);
      const double a2 = lf.a2(x);
      M.row(row) = a0 * rows[0].coeffs + a1 * rows[1].coeffs +
                   a2 * rows[2].coeffs;
      rhs(row) = lf.f(x) - (a0 * rows[0].offset + a1 * rows[1].offset +
                            a2 * rows[2].offset);
      ++row;
    }
  }
  sol.g = lstsq_scaled_qr(M, rhs).x;
  return sol;
}

}  // namespace tfc

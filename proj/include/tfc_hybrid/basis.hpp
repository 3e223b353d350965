#pragma once

// Orthogonal polynomial bases on [-1, 1], the affine map from a segment
// onto that domain, and Chebyshev-Gauss-Lobatto collocation grids.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "tfc_hybrid/errors.hpp"

namespace tfc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Highest derivative order supported anywhere (second-order dynamics).
inline constexpr int kMaxDerivative = 2;

inline void check_order(int d) {
  if (d < 0 || d > kMaxDerivative) {
    throw UnsupportedOrderError("derivative order " + std::to_string(d) +
                                " not supported (0..2)");
  }
}

/// Closed segment [x0, xf] of the independent variable.
struct Interval {
  double x0 = 0.0;
  double xf = 1.0;

  Interval() = default;
  Interval(double lo, double hi) : x0(lo), xf(hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi)) {
      throw ConfigurationError("interval requires finite x0 < xf");
    }
  }

  double width() const noexcept { return xf - x0; }

  /// dz/dx of the map onto [-1, 1].
  double slope() const noexcept { return 2.0 / width(); }

  // Rounding slack for points produced by arithmetic on the endpoints.
  double slack() const noexcept {
    return 64.0 * std::numeric_limits<double>::epsilon() *
           std::max({1.0, std::abs(x0), std::abs(xf)});
  }

  bool contains(double x) const noexcept {
    return x >= x0 - slack() && x <= xf + slack();
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class Family { Chebyshev, Legendre };

inline std::string to_string(Family f) {
  return f == Family::Chebyshev ? "chebyshev" : "legendre";
}

/// A polynomial family and m consecutive members of it, degrees
/// first_degree .. first_degree + m - 1.
struct BasisSpec {
  Family family = Family::Chebyshev;
  int m = 1;
  int first_degree = 0;

  BasisSpec() = default;
  BasisSpec(Family f, int count, int first = 0)
      : family(f), m(count), first_degree(first) {
    if (count < 1) throw ConfigurationError("basis needs m >= 1");
    if (first < 0) throw ConfigurationError("basis needs first_degree >= 0");
  }

  int highest_degree() const noexcept { return first_degree + m - 1; }

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

/// Collocation abscissae on one segment, endpoints included.
struct Grid {
  Interval iv;
  std::vector<double> points;

  std::size_t size() const noexcept { return points.size(); }
};

/// Affine image of x in [-1, 1]; endpoints map to -1 and +1 exactly.
inline double map_point(const Interval& iv, double x) {
  if (!iv.contains(x)) {
    throw DomainError("x = " + std::to_string(x) + " outside [" +
                      std::to_string(iv.x0) + ", " + std::to_string(iv.xf) +
                      "]");
  }
  if (x <= iv.x0) return -1.0;
  if (x >= iv.xf) return 1.0;
  return -1.0 + iv.slope() * (x - iv.x0);
}

/// Inverse of map_point.
inline double unmap_point(const Interval& iv, double z) {
  if (z <= -1.0) return iv.x0;
  if (z >= 1.0) return iv.xf;
  return 0.5 * (iv.x0 + iv.xf) + 0.5 * iv.width() * z;
}

/// N Chebyshev-Gauss-Lobatto points z_j = -cos(j pi / (N-1)) mapped to iv.
inline Grid collocation_grid(const Interval& iv, int N) {
  if (N < 2) throw ConfigurationError("collocation grid needs N >= 2");
  Grid g{iv, std::vector<double>(static_cast<std::size_t>(N))};
  const int n1 = N - 1;
  for (int j = 0; j < N; ++j) {
    // -cos(j pi/n1) written as a sine of an odd-symmetric argument so that
    // the grid is exactly antisymmetric about the midpoint.
    const double z =
        std::sin(std::numbers::pi * static_cast<double>(2 * j - n1) /
                 static_cast<double>(2 * n1));
    g.points[static_cast<std::size_t>(j)] = unmap_point(iv, z);
  }
  g.points.front() = iv.x0;
  g.points.back() = iv.xf;
  return g;
}

/// d-th z-derivative of the m basis polynomials at z, computed by the
/// three-term recurrences of the polynomials and of their derivatives. The
/// segment slope factor c^d is left to the caller.
inline Vector eval_basis(const BasisSpec& spec, double z, int d) {
  check_order(d);
  if (!(z >= -1.0 - 1e-12 && z <= 1.0 + 1e-12)) {
    throw DomainError("basis argument z = " + std::to_string(z) +
                      " outside [-1, 1]");
  }
  z = std::clamp(z, -1.0, 1.0);
  const int m = spec.highest_degree() + 1;
  // p, p1, p2: value, first and second derivative recurrences.
  Vector p(m), p1(m), p2(m);
  p(0) = 1.0;
  p1(0) = 0.0;
  p2(0) = 0.0;
  if (m > 1) {
    p(1) = z;
    p1(1) = 1.0;
    p2(1) = 0.0;
  }
  if (spec.family == Family::Chebyshev) {
    for (int k = 1; k + 1 < m; ++k) {
      p(k + 1) = 2.0 * z * p(k) - p(k - 1);
      p1(k + 1) = 2.0 * p(k) + 2.0 * z * p1(k) - p1(k - 1);
      p2(k + 1) = 4.0 * p1(k) + 2.0 * z * p2(k) - p2(k - 1);
    }
  } else {
    for (int k = 1; k + 1 < m; ++k) {
      const double a = static_cast<double>(2 * k + 1);
      const double b = static_cast<double>(k);
      const double inv = 1.0 / static_cast<double>(k + 1);
      p(k + 1) = (a * z * p(k) - b * p(k - 1)) * inv;
      p1(k + 1) = (a * (p(k) + z * p1(k)) - b * p1(k - 1)) * inv;
      p2(k + 1) = (a * (2.0 * p1(k) + z * p2(k)) - b * p2(k - 1)) * inv;
    }
  }
  const Vector& out = d == 0 ? p : (d == 1 ? p1 : p2);
  return out.tail(spec.m);
}

/// d-th x-derivative of the basis on segment iv, i.e. c^d h^(d)(z(x)).
inline Vector eval_basis_x(const BasisSpec& spec, const Interval& iv, double x,
                           int d) {
  Vector h = eval_basis(spec, map_point(iv, x), d);
  if (d > 0) h *= std::pow(iv.slope(), d);
  return h;
}

/// N x m matrix whose row i is c^d h^(d) at grid point i.
inline Matrix basis_matrix(const BasisSpec& spec, const Grid& grid, int d) {
  check_order(d);
  if (grid.points.empty()) throw ConfigurationError("empty grid");
  Matrix out(static_cast<Eigen::Index>(grid.size()), spec.m);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        eval_basis_x(spec, grid.iv, grid.points[i], d).transpose();
  }
  return out;
}

}  // namespace tfc

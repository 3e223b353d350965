#pragma once

// Constrained expressions as affine functionals of the unknown vector.
//
// Every segment solution is written as
//   y(x) = g(x) + sum_i s_i(x) (kappa_i - L_i[g])
// where s_i are switching functions, L_i the constraint functionals and
// kappa_i either a known boundary value or a junction unknown. With
// g = xi^T h(z(x)) this is linear in (xi, junction unknowns) plus an offset.

#include <cmath>
#include <string>

#include "tfc_hybrid/basis.hpp"
#include "tfc_hybrid/layout.hpp"
#include "tfc_hybrid/switching.hpp"

namespace tfc {

/// y^(d)(x) = coeffs . Xi + offset.
struct AffineRow {
  Vector coeffs;
  double offset = 0.0;

  double evaluate(const Vector& xi) const { return coeffs.dot(xi) + offset; }
};

namespace detail {

/// h at an endpoint of iv (order 0 or 1), slope factor applied.
inline Vector h_at(const BasisSpec& spec, const Interval& iv, double x,
                   int d) {
  return eval_basis_x(spec, iv, x, d);
}

}  // namespace detail

/// Single-segment boundary-value expression, y(x0) = y0 and y(xf) = yf.
/// The row spans only the xi of a one-segment layout.
inline AffineRow single_bvp_row(const BasisSpec& spec, const Interval& iv,
                                double y0, double yf, double x, int d) {
  check_order(d);
  const double a1 = alpha(1, iv, x, d);
  const double a2 = alpha(2, iv, x, d);
  AffineRow row;
  row.coeffs = eval_basis_x(spec, iv, x, d) -
               a1 * detail::h_at(spec, iv, iv.x0, 0) -
               a2 * detail::h_at(spec, iv, iv.xf, 0);
  row.offset = a1 * y0 + a2 * yf;
  return row;
}

/// First segment [x0, x1] of a multi-segment problem: value y0 at x0,
/// junction unknowns (y_1, y'_1) at x1.
inline AffineRow first_segment_row(const BasisSpec& spec, const Interval& iv,
                                   double y0, double x, int d,
                                   const UnknownLayout& layout) {
  check_order(d);
  if (layout.n_segments() < 2) {
    throw ConfigurationError("first_segment_row needs at least two segments");
  }
  if (layout.m(0) != spec.m) throw AssemblyError("basis size mismatch");
  const double b1 = beta(1, iv, x, d);
  const double b2 = beta(2, iv, x, d);
  const double b3 = beta(3, iv, x, d);
  AffineRow row{Vector::Zero(layout.total()), b1 * y0};
  const Slice s = layout.xi(0);
  row.coeffs.segment(s.begin, s.size) =
      eval_basis_x(spec, iv, x, d) - b1 * detail::h_at(spec, iv, iv.x0, 0) -
      b2 * detail::h_at(spec, iv, iv.xf, 0) -
      b3 * detail::h_at(spec, iv, iv.xf, 1);
  row.coeffs(layout.junction_value(1)) = b2;
  row.coeffs(layout.junction_slope(1)) = b3;
  return row;
}

/// Interior segment k (0-based, 1 <= k <= n-2) on [x_{k}, x_{k+1}] with
/// junction unknowns at both ends.
inline AffineRow middle_segment_row(const BasisSpec& spec, const Interval& iv,
                                    int k, double x, int d,
                                    const UnknownLayout& layout) {
  check_order(d);
  if (k < 1 || k > layout.n_segments() - 2) {
    throw ConfigurationError("middle segment index " + std::to_string(k) +
                             " out of range");
  }
  if (layout.m(k) != spec.m) throw AssemblyError("basis size mismatch");
  const double g1 = gamma(1, iv, x, d);
  const double g2 = gamma(2, iv, x, d);
  const double g3 = gamma(3, iv, x, d);
  const double g4 = gamma(4, iv, x, d);
  AffineRow row{Vector::Zero(layout.total()), 0.0};
  const Slice s = layout.xi(k);
  row.coeffs.segment(s.begin, s.size) =
      eval_basis_x(spec, iv, x, d) - g1 * detail::h_at(spec, iv, iv.x0, 0) -
      g2 * detail::h_at(spec, iv, iv.xf, 0) -
      g3 * detail::h_at(spec, iv, iv.x0, 1) -
      g4 * detail::h_at(spec, iv, iv.xf, 1);
  // Junction k sits at the left end of segment k, junction k+1 at the right.
  row.coeffs(layout.junction_value(k)) = g1;
  row.coeffs(layout.junction_slope(k)) = g3;
  row.coeffs(layout.junction_value(k + 1)) = g2;
  row.coeffs(layout.junction_slope(k + 1)) = g4;
  return row;
}

/// Last segment [x_{n-1}, xf]: junction unknowns at x_{n-1}, value yf at xf.
inline AffineRow last_segment_row(const BasisSpec& spec, const Interval& iv,
                                  double yf, double x, int d,
                                  const UnknownLayout& layout) {
  check_order(d);
  const int n = layout.n_segments();
  if (n < 2) {
    throw ConfigurationError("last_segment_row needs at least two segments");
  }
  if (layout.m(n - 1) != spec.m) throw AssemblyError("basis size mismatch");
  const double b4 = beta(4, iv, x, d);
  const double b5 = beta(5, iv, x, d);
  const double b6 = beta(6, iv, x, d);
  AffineRow row{Vector::Zero(layout.total()), b6 * yf};
  const Slice s = layout.xi(n - 1);
  row.coeffs.segment(s.begin, s.size) =
      eval_basis_x(spec, iv, x, d) - b4 * detail::h_at(spec, iv, iv.x0, 0) -
      b5 * detail::h_at(spec, iv, iv.x0, 1) -
      b6 * detail::h_at(spec, iv, iv.xf, 0);
  row.coeffs(layout.junction_value(n - 1)) = b4;
  row.coeffs(layout.junction_slope(n - 1)) = b5;
  return row;
}

/// Row of y^(d)(x) for segment k of an n-segment geometry, dispatching on
/// the segment's position. y0 and yf are the outer boundary values.
inline AffineRow segment_row(const BasisSpec& spec, const Interval& iv, int k,
                             double y0, double yf, double x, int d,
                             const UnknownLayout& layout) {
  const int n = layout.n_segments();
  if (k < 0 || k >= n) throw ConfigurationError("segment index out of range");
  if (n == 1) {
    AffineRow r = single_bvp_row(spec, iv, y0, yf, x, d);
    if (r.coeffs.size() != layout.total()) {
      throw AssemblyError("basis size mismatch");
    }
    return r;
  }
  if (k == 0) return first_segment_row(spec, iv, y0, x, d, layout);
  if (k == n - 1) return last_segment_row(spec, iv, yf, x, d, layout);
  return middle_segment_row(spec, iv, k, x, d, layout);
}

// ---------------------------------------------------------------------------
// Two-segment cascade formulation. Each segment carries only value
// constraints (alpha switching functions); the shared junction value y1 is
// eliminated by requiring the first derivatives to match at x1. The result
// is affine in the stacked coefficients [g1; g2], which is how it is
// represented here.

/// Free function of one cascade segment.
struct CascadeSegment {
  BasisSpec spec;
  Interval iv;
};

namespace detail {

inline void check_cascade(const CascadeSegment& s1, const CascadeSegment& s2) {
  if (s1.iv.xf != s2.iv.x0) {
    throw ConfigurationError("cascade segments must share the junction");
  }
}

}  // namespace detail

/// Junction value y1 as an affine function of [g1; g2].
inline AffineRow cascade_junction_row(const CascadeSegment& s1,
                                      const CascadeSegment& s2, double y0,
                                      double yf) {
  detail::check_cascade(s1, s2);
  const double x0 = s1.iv.x0;
  const double x1 = s1.iv.xf;
  const double xf = s2.iv.xf;
  const double a1p_left = alpha(1, s1.iv, x1, 1);
  const double a2p_left = alpha(2, s1.iv, x1, 1);
  const double a1p_right = alpha(1, s2.iv, x1, 1);
  const double a2p_right = alpha(2, s2.iv, x1, 1);
  const double denom = a2p_left - a1p_right;
  if (denom == 0.0 || !std::isfinite(denom)) {
    throw DomainError("cascade junction denominator vanishes");
  }
  const int m1 = s1.spec.m;
  const int m2 = s2.spec.m;
  AffineRow row{Vector::Zero(m1 + m2), 0.0};
  // g'_2(x1) - g'_1(x1) - a1'(L)(y0 - g1(x0)) + a2'(L) g1(x1)
  //   - a1'(R) g2(x1) + a2'(R)(yf - g2(xf))
  row.coeffs.head(m1) = -eval_basis_x(s1.spec, s1.iv, x1, 1) +
                        a1p_left * eval_basis_x(s1.spec, s1.iv, x0, 0) +
                        a2p_left * eval_basis_x(s1.spec, s1.iv, x1, 0);
  row.coeffs.tail(m2) = eval_basis_x(s2.spec, s2.iv, x1, 1) -
                        a1p_right * eval_basis_x(s2.spec, s2.iv, x1, 0) -
                        a2p_right * eval_basis_x(s2.spec, s2.iv, xf, 0);
  row.offset = -a1p_left * y0 + a2p_right * yf;
  row.coeffs /= denom;
  row.offset /= denom;
  return row;
}

/// Junction value for concrete free-function coefficients g1, g2.
inline double cascade_junction_value(const Vector& g1, const Vector& g2,
                                     const CascadeSegment& s1,
                                     const CascadeSegment& s2, double y0,
                                     double yf) {
  if (g1.size() != s1.spec.m || g2.size() != s2.spec.m) {
    throw ConfigurationError("cascade coefficient size mismatch");
  }
  Vector g(g1.size() + g2.size());
  g << g1, g2;
  return cascade_junction_row(s1, s2, y0, yf).evaluate(g);
}

/// y^(d)(x) of cascade segment `segment` (0 or 1) as an affine function of
/// [g1; g2]. The junction abscissa belongs to both segments.
inline AffineRow cascade_segment_row(const CascadeSegment& s1,
                                     const CascadeSegment& s2, double y0,
                                     double yf, int segment, double x, int d) {
  check_order(d);
  detail::check_cascade(s1, s2);
  if (segment != 0 && segment != 1) {
    throw ConfigurationError("cascade has segments 0 and 1 only");
  }
  const CascadeSegment& seg = segment == 0 ? s1 : s2;
  const Interval& iv = seg.iv;
  if (!iv.contains(x)) throw DomainError("cascade evaluation outside segment");
  const AffineRow y1 = cascade_junction_row(s1, s2, y0, yf);
  const int m1 = s1.spec.m;
  const int m2 = s2.spec.m;
  const double a1 = alpha(1, iv, x, d);
  const double a2 = alpha(2, iv, x, d);
  const Vector own = eval_basis_x(seg.spec, iv, x, d) -
                     a1 * eval_basis_x(seg.spec, iv, iv.x0, 0) -
                     a2 * eval_basis_x(seg.spec, iv, iv.xf, 0);
  AffineRow row{Vector::Zero(m1 + m2), 0.0};
  if (segment == 0) {
    row.coeffs.head(m1) = own;
    row.coeffs += a2 * y1.coeffs;
    row.offset = a1 * y0 + a2 * y1.offset;
  } else {
    row.coeffs.tail(m2) = own;
    row.coeffs += a1 * y1.coeffs;
    row.offset = a1 * y1.offset + a2 * yf;
  }
  return row;
}

/// y^(d)(x) of the cascade expression over [x0, xf]; x <= x1 selects the
/// first segment.
inline AffineRow cascade_row(const CascadeSegment& s1,
                             const CascadeSegment& s2, double y0, double yf,
                             double x, int d) {
  detail::check_cascade(s1, s2);
  if (x < s1.iv.x0 - s1.iv.slack() || x > s2.iv.xf + s2.iv.slack()) {
    throw DomainError("cascade evaluation outside [x0, xf]");
  }
  return cascade_segment_row(s1, s2, y0, yf, x <= s1.iv.xf ? 0 : 1, x, d);
}

/// Evaluate the cascade expression for concrete g1, g2.
inline double cascade_eval(const Vector& g1, const Vector& g2,
                           const CascadeSegment& s1, const CascadeSegment& s2,
                           double y0, double yf, double x, int d) {
  if (g1.size() != s1.spec.m || g2.size() != s2.spec.m) {
    throw ConfigurationError("cascade coefficient size mismatch");
  }
  Vector g(g1.size() + g2.size());
  g << g1, g2;
  return cascade_row(s1, s2, y0, yf, x, d).evaluate(g);
}

}  // namespace tfc

#pragma once

// Switching functions: polynomial multipliers that equal one on exactly one
// constraint functional of an interval and zero on the others.
//
//   Alpha  (1..2): value at x0, value at xf.
//   Beta   (1..3): value at x0, value at xf, derivative at xf  (first segment)
//          (4..6): value at x0, derivative at x0, value at xf  (last segment)
//   Gamma  (1..4): value at x0, value at xf, derivative at x0, derivative at xf
//
// Formulas use s = x - x0, t = x - xf and dx = xf - x0. Writing them as
// products of s and t makes the endpoint values exactly 0 or 1 in floating
// point, so junction rows of adjacent segments cancel exactly.

#include <array>
#include <string>

#include "tfc_hybrid/basis.hpp"

namespace tfc {

enum class SwitchingFamily { Alpha, Beta, Gamma };

inline int family_size(SwitchingFamily f) noexcept {
  switch (f) {
    case SwitchingFamily::Alpha:
      return 2;
    case SwitchingFamily::Beta:
      return 6;
    case SwitchingFamily::Gamma:
      return 4;
  }
  return 0;
}

namespace detail {

inline double alpha(int index, const Interval& iv, double x, int d) {
  const double dx = iv.width();
  if (index == 1) {
    switch (d) {
      case 0: return -(x - iv.xf) / dx;
      case 1: return -1.0 / dx;
      default: return 0.0;
    }
  }
  switch (d) {
    case 0: return (x - iv.x0) / dx;
    case 1: return 1.0 / dx;
    default: return 0.0;
  }
}

inline double beta(int index, const Interval& iv, double x, int d) {
  const double s = x - iv.x0;
  const double t = x - iv.xf;
  const double dx = iv.width();
  const double dx2 = dx * dx;
  switch (index) {
    case 1:
      switch (d) {
        case 0: return t * t / dx2;
        case 1: return 2.0 * t / dx2;
        default: return 2.0 / dx2;
      }
    case 2:
      switch (d) {
        case 0: return s * (dx - t) / dx2;
        case 1: return -2.0 * t / dx2;
        default: return -2.0 / dx2;
      }
    case 3:
      switch (d) {
        case 0: return s * t / dx;
        case 1: return (s + t) / dx;
        default: return 2.0 / dx;
      }
    case 4:
      switch (d) {
        case 0: return -t * (s + dx) / dx2;
        case 1: return -2.0 * s / dx2;
        default: return -2.0 / dx2;
      }
    case 5:
      switch (d) {
        case 0: return -s * t / dx;
        case 1: return -(s + t) / dx;
        default: return -2.0 / dx;
      }
    default:
      switch (d) {
        case 0: return s * s / dx2;
        case 1: return 2.0 * s / dx2;
        default: return 2.0 / dx2;
      }
  }
}

inline double gamma(int index, const Interval& iv, double x, int d) {
  const double s = x - iv.x0;
  const double t = x - iv.xf;
  const double dx = iv.width();
  const double dx2 = dx * dx;
  const double dx3 = dx2 * dx;
  switch (index) {
    case 1:
      switch (d) {
        case 0: return (dx + 2.0 * s) * (t * t) / dx3;
        case 1: return 6.0 * s * t / dx3;
        default: return 6.0 * (s + t) / dx3;
      }
    case 2:
      switch (d) {
        case 0: return (dx - 2.0 * t) * (s * s) / dx3;
        case 1: return -6.0 * s * t / dx3;
        default: return -6.0 * (s + t) / dx3;
      }
    case 3:
      switch (d) {
        case 0: return s * (t * t) / dx2;
        case 1: return t * (t + 2.0 * s) / dx2;
        default: return (4.0 * t + 2.0 * s) / dx2;
      }
    default:
      switch (d) {
        case 0: return (s * s) * t / dx2;
        case 1: return s * (s + 2.0 * t) / dx2;
        default: return (4.0 * s + 2.0 * t) / dx2;
      }
  }
}

}  // namespace detail

/// d-th derivative of switching function `index` (1-based) of `family` on iv.
inline double switching_eval(SwitchingFamily family, int index,
                             const Interval& iv, double x, int d) {
  check_order(d);
  if (index < 1 || index > family_size(family)) {
    throw ConfigurationError("switching function index " +
                             std::to_string(index) + " invalid for family");
  }
  if (!iv.contains(x)) {
    throw DomainError("switching function evaluated outside its interval");
  }
  switch (family) {
    case SwitchingFamily::Alpha:
      return detail::alpha(index, iv, x, d);
    case SwitchingFamily::Beta:
      return detail::beta(index, iv, x, d);
    case SwitchingFamily::Gamma:
      return detail::gamma(index, iv, x, d);
  }
  return 0.0;
}

inline double alpha(int i, const Interval& iv, double x, int d = 0) {
  return switching_eval(SwitchingFamily::Alpha, i, iv, x, d);
}
inline double beta(int i, const Interval& iv, double x, int d = 0) {
  return switching_eval(SwitchingFamily::Beta, i, iv, x, d);
}
inline double gamma(int i, const Interval& iv, double x, int d = 0) {
  return switching_eval(SwitchingFamily::Gamma, i, iv, x, d);
}

}  // namespace tfc

#pragma once

// Hybrid boundary-value problems: ordered segments of second-order dynamics
// L_k(x, y, y', y'') = 0 with y(x0) = y0, y(xf) = yf and C1 continuity at
// the break points.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tfc_hybrid/assembly.hpp"

namespace tfc {

/// dL/dy, dL/dy', dL/dy''.
struct Partials {
  double y = 0.0;
  double dy = 0.0;
  double d2y = 0.0;

  double operator[](int d) const { return d == 0 ? y : d == 1 ? dy : d2y; }
};

using ScalarFn = std::function<double(double)>;
using ResidualFn = std::function<double(double, double, double, double)>;
using PartialsFn = std::function<Partials(double, double, double, double)>;

/// a2(x) y'' + a1(x) y' + a0(x) y - f(x).
struct LinearForm {
  ScalarFn a2;
  ScalarFn a1;
  ScalarFn a0;
  ScalarFn f;
};

struct SegmentDynamics {
  ResidualFn residual;
  PartialsFn partials;
  std::optional<LinearForm> linear;

  bool is_linear() const noexcept { return linear.has_value(); }

  static SegmentDynamics from_linear(LinearForm lf) {
    SegmentDynamics s;
    s.residual = [lf](double x, double y, double dy, double d2y) {
      return lf.a2(x) * d2y + lf.a1(x) * dy + lf.a0(x) * y - lf.f(x);
    };
    s.partials = [lf](double x, double, double, double) {
      return Partials{lf.a0(x), lf.a1(x), lf.a2(x)};
    };
    s.linear = std::move(lf);
    return s;
  }

  static SegmentDynamics nonlinear(ResidualFn r, PartialsFn p) {
    return SegmentDynamics{std::move(r), std::move(p), std::nullopt};
  }
};

/// Exact y^(d)(x), d in 0..2, on one segment.
using AnalyticFn = std::function<double(double, int)>;

/// Jacobian row dL_k/dXi at x written out independently of the
/// constrained-expression rows, when one is known for the problem.
using ClosedFormJacobianFn = std::function<Vector(
    const Geometry&, const SegmentGrids&, const Vector&, int, double)>;

struct HybridProblem {
  std::string name;
  Geometry geometry;
  std::vector<SegmentDynamics> segments;
  std::vector<AnalyticFn> analytic;
  ClosedFormJacobianFn closed_form_jacobian;
  int default_m = 16;

  int n_segments() const noexcept { return static_cast<int>(segments.size()); }
  bool has_analytic() const noexcept { return !analytic.empty(); }

  bool all_linear() const noexcept {
    for (const auto& s : segments) {
      if (!s.is_linear()) return false;
    }
    return true;
  }

  void validate() const {
    geometry.validate();
    if (geometry.n_segments() != n_segments()) {
      throw ConfigurationError(
          "segment count mismatch: " + std::to_string(n_segments()) +
          " dynamics for " + std::to_string(geometry.n_segments()) +
          " intervals");
    }
    if (has_analytic() && static_cast<int>(analytic.size()) != n_segments()) {
      throw ConfigurationError("analytic solution needs one piece per segment");
    }
  }
};

enum class BuiltinProblem { LinearLinear, LinearNonlinear, NonlinearNonlinear };

inline std::string to_string(BuiltinProblem b) {
  switch (b) {
    case BuiltinProblem::LinearLinear:
      return "linear_linear";
    case BuiltinProblem::LinearNonlinear:
      return "linear_nonlinear";
    case BuiltinProblem::NonlinearNonlinear:
      return "nonlinear_nonlinear";
  }
  return {};
}

inline BuiltinProblem parse_builtin(const std::string& name) {
  for (auto b : {BuiltinProblem::LinearLinear, BuiltinProblem::LinearNonlinear,
                 BuiltinProblem::NonlinearNonlinear}) {
    if (to_string(b) == name) return b;
  }
  throw ConfigurationError("unknown builtin problem '" + name + "'");
}

inline HybridProblem builtin(BuiltinProblem which);

inline HybridProblem builtin(const std::string& name) {
  return builtin(parse_builtin(name));
}

/// Exact y^(d)(x); a break point is evaluated on its left segment.
inline double analytic_value(const HybridProblem& p, double x, int d) {
  check_order(d);
  if (!p.has_analytic()) {
    throw MissingAnalyticError("problem '" + p.name +
                               "' has no analytic solution");
  }
  const auto& geo = p.geometry;
  if (x < geo.x0() || x > geo.xf()) {
    throw DomainError("x outside problem domain");
  }
  return p.analytic[static_cast<std::size_t>(geo.locate(x))](x, d);
}

// ---------------------------------------------------------------------------
// Piecewise linear problems from coefficient data.

/// scale * exp(k x), scale * sin(k x) or scale * cos(k x).
struct ForcingTerm {
  enum class Kind { Exp, Sin, Cos };
  Kind kind = Kind::Exp;
  double k = 1.0;
  double scale = 1.0;

  double operator()(double x) const {
    switch (kind) {
      case Kind::Exp:
        return scale * std::exp(k * x);
      case Kind::Sin:
        return scale * std::sin(k * x);
      case Kind::Cos:
        return scale * std::cos(k * x);
    }
    return 0.0;
  }
};

/// Polynomial coefficients in ascending powers of x.
struct LinearSegmentConfig {
  std::vector<double> a2;
  std::vector<double> a1;
  std::vector<double> a0;
  std::vector<double> f;
  std::vector<ForcingTerm> forcing;
};

struct LinearProblemConfig {
  std::string name = "generic_linear";
  std::vector<double> break_points;
  std::vector<LinearSegmentConfig> segments;
  double y0 = 0.0;
  double yf = 0.0;
  int default_m = 16;
};

namespace detail {

inline double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

inline void check_coefficients(const std::vector<double>& c,
                               const std::string& where) {
  for (double v : c) {
    if (!std::isfinite(v)) {
      throw ConfigurationError(where + ": non-finite coefficient");
    }
  }
}

}  // namespace detail

inline HybridProblem generic_linear(const LinearProblemConfig& cfg) {
  HybridProblem p;
  p.name = cfg.name;
  p.geometry = Geometry{cfg.break_points, cfg.y0, cfg.yf};
  p.geometry.validate();
  p.default_m = cfg.default_m;
  if (static_cast<int>(cfg.segments.size()) != p.geometry.n_segments()) {
    throw ConfigurationError(
        "segment count mismatch: " + std::to_string(cfg.segments.size()) +
        " segments for " + std::to_string(p.geometry.n_segments()) +
        " intervals");
  }
  for (std::size_t k = 0; k < cfg.segments.size(); ++k) {
    const auto& s = cfg.segments[k];
    const std::string where = "segments[" + std::to_string(k) + "]";
    if (s.a2.empty()) {
      throw ConfigurationError(where + ".a2: missing coefficient list");
    }
    detail::check_coefficients(s.a2, where + ".a2");
    detail::check_coefficients(s.a1, where + ".a1");
    detail::check_coefficients(s.a0, where + ".a0");
    detail::check_coefficients(s.f, where + ".f");
    bool all_zero = true;
    for (double v : s.a2) all_zero = all_zero && v == 0.0;
    if (all_zero) {
      throw ConfigurationError(where +
                               ".a2: leading coefficient identically zero");
    }
    for (const auto& t : s.forcing) {
      if (!std::isfinite(t.k) || !std::isfinite(t.scale)) {
        throw ConfigurationError(where + ".forcing: non-finite value");
      }
    }
    LinearForm lf;
    lf.a2 = [c = s.a2](double x) { return detail::horner(c, x); };
    lf.a1 = [c = s.a1](double x) { return detail::horner(c, x); };
    lf.a0 = [c = s.a0](double x) { return detail::horner(c, x); };
    lf.f = [c = s.f, terms = s.forcing](double x) {
      double v = detail::horner(c, x);
      for (const auto& t : terms) v += t(x);
      return v;
    };
    p.segments.push_back(SegmentDynamics::from_linear(std::move(lf)));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Closed-form Jacobian rows for the two-segment builtins, spelled out term
// by term from the switching functions and the raw basis. Used as an
// independent check of the chain-rule Jacobian.

namespace detail {

/// H-rows and y-values of one segment of a two-segment problem at x.
struct TwoSegmentTerms {
  std::array<Vector, 3> H;       // bracketed multiplier of xi, orders 0..2
  std::array<double, 3> s_value; // multiplier of y_1, orders 0..2
  std::array<double, 3> s_slope; // multiplier of y'_1, orders 0..2
  std::array<double, 3> y;       // y, y', y''
};

inline TwoSegmentTerms two_segment_terms(const Geometry& geo,
                                         const SegmentGrids& sg,
                                         const Vector& xi, int k, double x) {
  const UnknownLayout& L = sg.layout;
  const BasisSpec& spec = sg.bases.at(static_cast<std::size_t>(k));
  const Interval iv = geo.segment(k);
  const double c = iv.slope();
  auto h = [&](double at, int d) {
    return Vector(eval_basis(spec, map_point(iv, at), d) * std::pow(c, d));
  };
  const Vector xk = xi.segment(L.xi(k).begin, L.xi(k).size);
  const double y1 = xi(L.junction_value(1));
  const double dy1 = xi(L.junction_slope(1));
  TwoSegmentTerms t;
  for (int d = 0; d <= 2; ++d) {
    if (k == 0) {
      const double b1 = detail::beta(1, iv, x, d);
      const double b2 = detail::beta(2, iv, x, d);
      const double b3 = detail::beta(3, iv, x, d);
      t.H[d] = h(x, d) - b1 * h(iv.x0, 0) - b2 * h(iv.xf, 0) -
               b3 * h(iv.xf, 1);
      t.s_value[d] = b2;
      t.s_slope[d] = b3;
      t.y[d] = t.H[d].dot(xk) + b1 * geo.y0 + b2 * y1 + b3 * dy1;
    } else {
      const double b4 = detail::beta(4, iv, x, d);
      const double b5 = detail::beta(5, iv, x, d);
      const double b6 = detail::beta(6, iv, x, d);
      t.H[d] = h(x, d) - b4 * h(iv.x0, 0) - b5 * h(iv.x0, 1) -
               b6 * h(iv.xf, 0);
      t.s_value[d] = b4;
      t.s_slope[d] = b5;
      t.y[d] = t.H[d].dot(xk) + b4 * y1 + b5 * dy1 + b6 * geo.yf;
    }
  }
  return t;
}

inline Vector place_two_segment_row(const SegmentGrids& sg, int k,
                                    const Vector& dxi, double dvalue,
                                    double dslope) {
  const UnknownLayout& L = sg.layout;
  Vector row = Vector::Zero(L.total());
  row.segment(L.xi(k).begin, L.xi(k).size) = dxi;
  row(L.junction_value(1)) = dvalue;
  row(L.junction_slope(1)) = dslope;
  return row;
}

}  // namespace detail

inline HybridProblem builtin(BuiltinProblem which) {
  using std::numbers::pi;
  HybridProblem p;
  p.name = to_string(which);
  switch (which) {
    case BuiltinProblem::LinearLinear: {
      // y'' = x^2 + a, a = 0 on [0, 1/2], a = 1 on [1/2, 1].
      p.geometry = Geometry{{0.0, 0.5, 1.0}, 0.0, 1.0};
      p.default_m = 8;
      auto one = [](double) { return 1.0; };
      auto zero = [](double) { return 0.0; };
      p.segments.push_back(SegmentDynamics::from_linear(
          {one, zero, zero, [](double x) { return x * x; }}));
      p.segments.push_back(SegmentDynamics::from_linear(
          {one, zero, zero, [](double x) { return x * x + 1.0; }}));
      p.analytic.push_back([](double x, int d) {
        switch (d) {
          case 0: return x * x * x * x / 12.0 + 19.0 * x / 24.0;
          case 1: return x * x * x / 3.0 + 19.0 / 24.0;
          default: return x * x;
        }
      });
      p.analytic.push_back([](double x, int d) {
        switch (d) {
          case 0:
            return x * x * x * x / 12.0 + 0.5 * x * x + 7.0 * x / 24.0 + 0.125;
          case 1: return x * x * x / 3.0 + x + 7.0 / 24.0;
          default: return x * x + 1.0;
        }
      });
      p.closed_form_jacobian = [](const Geometry& geo, const SegmentGrids& sg,
                                  const Vector& xi, int k, double x) {
        const auto t = detail::two_segment_terms(geo, sg, xi, k, x);
        return detail::place_two_segment_row(sg, k, t.H[2], t.s_value[2],
                                             t.s_slope[2]);
      };
      break;
    }
    case BuiltinProblem::LinearNonlinear: {
      // y'' + y y'^a = e^{pi/2 - x} - e^{pi - 2x}, a = 0 then a = 1.
      const double e_half_pi = std::exp(pi / 2.0);
      const double e_pi = e_half_pi * e_half_pi;
      p.geometry = Geometry{
          {0.0, pi / 2.0, pi},
          0.9 + 0.1 * e_half_pi * (5.0 - 2.0 * e_half_pi),
          1.0 / e_half_pi};
      p.default_m = 16;
      auto forcing = [e_half_pi, e_pi](double x) {
        const double ex = std::exp(-x);
        return e_half_pi * ex - e_pi * ex * ex;
      };
      auto one = [](double) { return 1.0; };
      auto zero = [](double) { return 0.0; };
      p.segments.push_back(
          SegmentDynamics::from_linear({one, zero, one, forcing}));
      p.segments.push_back(SegmentDynamics::nonlinear(
          [forcing](double x, double y, double dy, double d2y) {
            return d2y + y * dy - forcing(x);
          },
          [](double, double y, double dy, double) {
            return Partials{dy, y, 1.0};
          }));
      p.analytic.push_back([e_half_pi, e_pi](double x, int d) {
        const double ex = std::exp(-x);
        const double e1 = e_half_pi * ex;     // e^{pi/2 - x}
        const double e2 = e_pi * ex * ex;     // e^{pi - 2x}
        const double c = std::cos(x);
        const double s = std::sin(x);
        switch (d) {
          case 0: return -0.2 * e2 + 0.5 * e1 + (9.0 * c + 7.0 * s) / 10.0;
          case 1: return 0.4 * e2 - 0.5 * e1 + (-9.0 * s + 7.0 * c) / 10.0;
          default: return -0.8 * e2 + 0.5 * e1 - (9.0 * c + 7.0 * s) / 10.0;
        }
      });
      p.analytic.push_back([e_half_pi](double x, int d) {
        const double v = e_half_pi * std::exp(-x);
        return d == 1 ? -v : v;
      });
      p.closed_form_jacobian = [](const Geometry& geo, const SegmentGrids& sg,
                                  const Vector& xi, int k, double x) {
        const auto t = detail::two_segment_terms(geo, sg, xi, k, x);
        if (k == 0) {
          return detail::place_two_segment_row(
              sg, k, t.H[2] + t.H[0], t.s_value[2] + t.s_value[0],
              t.s_slope[2] + t.s_slope[0]);
        }
        const double y = t.y[0];
        const double dy = t.y[1];
        return detail::place_two_segment_row(
            sg, k, t.H[2] + dy * t.H[0] + y * t.H[1],
            t.s_value[2] + y * t.s_value[1] + dy * t.s_value[0],
            t.s_slope[2] + y * t.s_slope[1] + dy * t.s_slope[0]);
      };
      break;
    }
    case BuiltinProblem::NonlinearNonlinear: {
      // y'' - a y'^2 = 0, a = 1 on [0, 1], a = 10 on [1, 3].
      p.geometry = Geometry{{0.0, 1.0, 3.0}, 2.0, 2.0 - std::log(11264.0) / 10.0};
      p.default_m = 60;
      for (double a : {1.0, 10.0}) {
        p.segments.push_back(SegmentDynamics::nonlinear(
            [a](double, double, double dy, double d2y) {
              return d2y - a * dy * dy;
            },
            [a](double, double, double dy, double) {
              return Partials{0.0, -2.0 * a * dy, 1.0};
            }));
      }
      p.analytic.push_back([](double x, int d) {
        switch (d) {
          case 0: return 2.0 - std::log(x + 1.0);
          case 1: return -1.0 / (x + 1.0);
          default: return 1.0 / ((x + 1.0) * (x + 1.0));
        }
      });
      p.analytic.push_back([](double x, int d) {
        const double u = 10.0 * x - 8.0;
        switch (d) {
          case 0: return 2.0 - 0.9 * std::numbers::ln2 - 0.1 * std::log(u);
          case 1: return -1.0 / u;
          default: return 10.0 / (u * u);
        }
      });
      p.closed_form_jacobian = [](const Geometry& geo, const SegmentGrids& sg,
                                  const Vector& xi, int k, double x) {
        const auto t = detail::two_segment_terms(geo, sg, xi, k, x);
        const double factor = k == 0 ? 2.0 : 20.0;
        const double dy = t.y[1];
        return detail::place_two_segment_row(
            sg, k, t.H[2] - factor * dy * t.H[1],
            t.s_value[2] - factor * dy * t.s_value[1],
            t.s_slope[2] - factor * dy * t.s_slope[1]);
      };
      break;
    }
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Jacobian diagnostics.

/// y^(d) rows of segment k at x for the discretisation sg.
inline std::array<AffineRow, 3> expression_rows(const Geometry& geo,
                                                const SegmentGrids& sg, int k,
                                                double x) {
  const auto& spec = sg.bases.at(static_cast<std::size_t>(k));
  const Interval iv = geo.segment(k);
  return {segment_row(spec, iv, k, geo.y0, geo.yf, x, 0, sg.layout),
          segment_row(spec, iv, k, geo.y0, geo.yf, x, 1, sg.layout),
          segment_row(spec, iv, k, geo.y0, geo.yf, x, 2, sg.layout)};
}

/// dL_k/dXi at x by the chain rule sum_d (dL/dy^(d)) dy^(d)/dXi.
inline Vector chain_rule_jacobian_row(const HybridProblem& p,
                                      const SegmentGrids& sg, const Vector& xi,
                                      int k, double x) {
  const auto rows = expression_rows(p.geometry, sg, k, x);
  const double y = rows[0].evaluate(xi);
  const double dy = rows[1].evaluate(xi);
  const double d2y = rows[2].evaluate(xi);
  const Partials pd =
      p.segments.at(static_cast<std::size_t>(k)).partials(x, y, dy, d2y);
  return pd.y * rows[0].coeffs + pd.dy * rows[1].coeffs +
         pd.d2y * rows[2].coeffs;
}

/// Central differences of L_k at x in every unknown. The step for unknown j
/// is chosen so that it moves y, y', y'' by about 1e-3.
inline Vector finite_difference_jacobian_row(const HybridProblem& p,
                                             const SegmentGrids& sg,
                                             const Vector& xi, int k,
                                             double x) {
  const auto rows = expression_rows(p.geometry, sg, k, x);
  const auto& dyn = p.segments.at(static_cast<std::size_t>(k));
  auto residual = [&](const Vector& v) {
    return dyn.residual(x, rows[0].evaluate(v), rows[1].evaluate(v),
                        rows[2].evaluate(v));
  };
  Vector out = Vector::Zero(xi.size());
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    const double reach = std::max({std::abs(rows[0].coeffs(j)),
                                   std::abs(rows[1].coeffs(j)),
                                   std::abs(rows[2].coeffs(j))});
    if (reach == 0.0) continue;
    const double h = 1e-3 / reach;
    Vector plus = xi;
    Vector minus = xi;
    plus(j) += h;
    minus(j) -= h;
    out(j) = (residual(plus) - residual(minus)) / (plus(j) - minus(j));
  }
  return out;
}

struct PartialCheck {
  /// max |chain - fd| / |fd| over entries with |fd| > 1e-8.
  double chain_vs_fd_rel = 0.0;
  /// max |chain - fd| over the remaining entries.
  double chain_vs_fd_abs_small = 0.0;
  /// ||chain - closed||_inf / ||closed||_inf, when a closed form exists.
  std::optional<double> chain_vs_closed_rel;
};

inline PartialCheck residual_partial_check(const HybridProblem& p,
                                           const SegmentGrids& sg,
                                           const Vector& xi, int k, double x) {
  const Vector chain = chain_rule_jacobian_row(p, sg, xi, k, x);
  const Vector fd = finite_difference_jacobian_row(p, sg, xi, k, x);
  PartialCheck out;
  for (Eigen::Index j = 0; j < chain.size(); ++j) {
    const double diff = std::abs(chain(j) - fd(j));
    if (std::abs(fd(j)) > 1e-8) {
      out.chain_vs_fd_rel = std::max(out.chain_vs_fd_rel, diff / std::abs(fd(j)));
    } else {
      out.chain_vs_fd_abs_small = std::max(out.chain_vs_fd_abs_small, diff);
    }
  }
  if (p.closed_form_jacobian) {
    const Vector closed = p.closed_form_jacobian(p.geometry, sg, xi, k, x);
    const double scale = closed.lpNorm<Eigen::Infinity>();
    const double diff = (chain - closed).lpNorm<Eigen::Infinity>();
    out.chain_vs_closed_rel = scale > 0.0 ? diff / scale : diff;
  }
  return out;
}

}  // namespace tfc

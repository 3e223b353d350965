// A hybrid problem whose dynamics are supplied as residual + partials.
// Both segments are solved by y = 1/(1+x)^2:
//   [0, 1]: y'' - 6 y^2 = 0
//   [1, 2]: y y'' - 1.5 y'^2 = 0

#include <cmath>
#include <cstdio>

#include "tfc_hybrid/tfc_hybrid.hpp"

int main() {
  tfc::HybridProblem p;
  p.name = "user_nonlinear";
  p.geometry = tfc::Geometry{{0.0, 1.0, 2.0}, 1.0, 1.0 / 9.0};
  p.default_m = 24;

  p.segments.push_back(tfc::SegmentDynamics::nonlinear(
      [](double, double y, double, double d2y) { return d2y - 6.0 * y * y; },
      [](double, double y, double, double) {
        return tfc::Partials{-12.0 * y, 0.0, 1.0};
      }));
  p.segments.push_back(tfc::SegmentDynamics::nonlinear(
      [](double, double y, double dy, double d2y) {
        return y * d2y - 1.5 * dy * dy;
      },
      [](double, double y, double dy, double d2y) {
        return tfc::Partials{d2y, -3.0 * dy, y};
      }));

  auto exact = [](double x, int d) {
    const double u = 1.0 + x;
    switch (d) {
      case 0: return 1.0 / (u * u);
      case 1: return -2.0 / (u * u * u);
      default: return 6.0 / (u * u * u * u);
    }
  };
  p.analytic = {exact, exact};

  tfc::SolveOptions opts;
  opts.N = 60;
  const auto r = tfc::solve(p, opts);

  std::printf("converged: %s in %d iterations\n", r.converged ? "yes" : "no",
              r.iterations);
  for (std::size_t i = 0; i < r.residual_trace.size(); ++i) {
    std::printf("  iteration %zu  ||L|| = %.3e\n", i + 1, r.residual_trace[i]);
  }
  const auto& j = r.junctions.front();
  std::printf("junction x = %g: y = %.15f (exact %.15f), y' = %.15f (exact %.15f)\n",
              j.x, j.y, exact(j.x, 0), j.dy, exact(j.x, 1));
  std::printf("max |error|: y %.2e, y' %.2e, y'' %.2e\n", r.max_abs_err->y,
              r.max_abs_err->dy, r.max_abs_err->d2y);
  return r.converged && r.max_abs_err->y < 1e-10 ? 0 : 1;
}

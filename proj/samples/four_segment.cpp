// Four segments of y'' = x^2 + k built from coefficient data, k = 0..3.

#include <cstdio>

#include "tfc_hybrid/tfc_hybrid.hpp"

int main() {
  tfc::LinearProblemConfig cfg;
  cfg.name = "four_segment";
  cfg.break_points = {0.0, 0.25, 0.5, 0.75, 1.0};
  cfg.y0 = 0.0;
  cfg.yf = 1.0;
  for (int k = 0; k < 4; ++k) {
    tfc::LinearSegmentConfig s;
    s.a2 = {1.0};
    s.f = {static_cast<double>(k), 0.0, 1.0};
    cfg.segments.push_back(s);
  }
  const auto p = tfc::generic_linear(cfg);

  tfc::SolveOptions opts;
  opts.N = 60;
  opts.m = 8;
  const auto r = tfc::solve_linear(p, opts);

  std::printf("||L||_2 = %.3e  (converged: %s)\n", r.residual_trace.back(),
              r.converged ? "yes" : "no");
  for (int k = 0; k + 1 < p.n_segments(); ++k) {
    const double x = p.geometry.break_points[static_cast<std::size_t>(k) + 1];
    std::printf("x = %.2f  y = % .15f / % .15f   y' = % .15f / % .15f\n", x,
                r.evaluate_on_segment(k, x, 0), r.evaluate_on_segment(k + 1, x, 0),
                r.evaluate_on_segment(k, x, 1), r.evaluate_on_segment(k + 1, x, 1));
  }
  return r.converged ? 0 : 1;
}
